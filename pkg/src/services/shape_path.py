"""
Shape Path Service

Builds the sequence of interpolated landmark shapes that connects a source
object to a target object. Shapes are blended through a ``ShapePathBackend``;
the default backend blends signed distance values on a common lattice.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from ..core.mesh import TriMesh
from ..core.sdf import SdfGrid, lattice_for_bounds, marching_cubes, resample_grid
from ..exceptions import LatticeMismatchError, ValidationError

logger = logging.getLogger(__name__)


# ============================================================================
# Backends
# ============================================================================


@dataclass(frozen=True, eq=False)
class LatentShape:
    """Backend code of one shape. The grid backend keeps a grid reference instead of a code."""

    code: np.ndarray
    category: str = ""
    grid: SdfGrid | None = None


class ShapePathBackend(Protocol):
    latent_dim: int

    def encode(self, grid: SdfGrid, category: str = "") -> LatentShape: ...

    def interpolate(self, a: LatentShape, b: LatentShape, t: float) -> LatentShape: ...

    def decode(self, shape: LatentShape) -> SdfGrid: ...


class GridBlendBackend:
    """Linear blend of SDF values; both shapes must share one lattice."""

    latent_dim = 0

    def encode(self, grid: SdfGrid, category: str = "") -> LatentShape:
        return LatentShape(code=np.zeros(self.latent_dim), category=category, grid=grid)

    def interpolate(self, a: LatentShape, b: LatentShape, t: float) -> LatentShape:
        ga, gb = a.grid, b.grid
        if ga.dims != gb.dims or ga.spacing != gb.spacing or not np.array_equal(ga.origin, gb.origin):
            raise LatticeMismatchError("Grid blend needs both shapes on the same lattice")
        values = (1.0 - t) * ga.values + t * gb.values
        return LatentShape(code=np.zeros(self.latent_dim), category=a.category, grid=SdfGrid(ga.origin, ga.spacing, values))

    def decode(self, shape: LatentShape) -> SdfGrid:
        return shape.grid


# ============================================================================
# Path types
# ============================================================================


@dataclass(frozen=True, eq=False)
class Landmark:
    t: float
    grid: SdfGrid
    mesh: TriMesh


@dataclass(frozen=True, eq=False)
class LandmarkPath:
    source_grid: SdfGrid
    source_mesh: TriMesh
    target_grid: SdfGrid
    target_mesh: TriMesh
    landmarks: list[Landmark] = field(default_factory=list)

    @property
    def n_itpl(self) -> int:
        return len(self.landmarks)

    @property
    def t_values(self) -> list[float]:
        return [lm.t for lm in self.landmarks]

    def meshes(self) -> list[TriMesh]:
        """Source, every landmark, then target (the contact transfer chain)."""
        return [self.source_mesh, *(lm.mesh for lm in self.landmarks), self.target_mesh]


def blend_weights(n_itpl: int) -> np.ndarray:
    """Interior quantiles t_k = (k + 1) / (n_itpl + 1)."""
    return (np.arange(n_itpl) + 1.0) / (n_itpl + 1.0)


# ============================================================================
# Operations
# ============================================================================


def _same_lattice(a: SdfGrid, b: SdfGrid) -> bool:
    return a.dims == b.dims and a.spacing == b.spacing and np.array_equal(a.origin, b.origin)


def resample_to_common(
    source: SdfGrid, target: SdfGrid, max_resolution: int = 128
) -> tuple[SdfGrid, SdfGrid]:
    """Resample both grids onto one lattice.

    The lattice covers the union of both boxes with the finer spacing. When that
    exceeds ``max_resolution`` nodes per axis the spacing is coarsened, but never
    beyond the coarser input spacing.
    """
    if _same_lattice(source, target):
        return source, target

    lo = np.minimum(source.origin, target.origin)
    hi = np.maximum(source.upper, target.upper)
    extent = float((hi - lo).max())
    spacing = min(source.spacing, target.spacing)

    if extent / spacing + 1 > max_resolution:
        capped = extent / (max_resolution - 1)
        if capped > max(source.spacing, target.spacing) * (1 + 1e-9):
            raise LatticeMismatchError(
                f"Union box {extent:.4g} m needs spacing {capped:.4g} m for "
                f"{max_resolution} nodes, coarser than both inputs"
            )
        spacing = capped

    origin, dims = lattice_for_bounds(lo, hi, spacing)
    logger.debug(f"Common lattice: dims {dims}, spacing {spacing:.4g} m")
    return resample_grid(source, origin, spacing, dims), resample_grid(target, origin, spacing, dims)


def build_path(
    source: SdfGrid,
    target: SdfGrid,
    n_itpl: int = 10,
    *,
    source_mesh: TriMesh | None = None,
    target_mesh: TriMesh | None = None,
    max_resolution: int = 128,
    workers: int = 4,
    backend: ShapePathBackend | None = None,
) -> LandmarkPath:
    """Interpolate ``n_itpl`` landmark shapes between source and target.

    Args:
        source: Source object SDF.
        target: Target object SDF.
        n_itpl: Number of landmarks.
        source_mesh: Source surface used as the first chain mesh (marched from the grid if omitted).
        target_mesh: Target surface used as the last chain mesh (marched from the grid if omitted).
        max_resolution: Node cap per axis of the common lattice.
        workers: Threads used to mesh landmarks.
        backend: Shape blending backend.
    """
    if n_itpl < 1:
        raise ValidationError(f"n_itpl must be >= 1, got {n_itpl}")
    backend = backend or GridBlendBackend()

    source_c, target_c = resample_to_common(source, target, max_resolution)
    a = backend.encode(source_c)
    b = backend.encode(target_c)
    t_values = blend_weights(n_itpl)
    grids = [backend.decode(backend.interpolate(a, b, float(t))) for t in t_values]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        meshes = list(pool.map(marching_cubes, grids))

    logger.info(
        f"Built shape path: {n_itpl} landmarks, lattice {source_c.dims} at {source_c.spacing * 1000:.2f} mm"
    )
    return LandmarkPath(
        source_grid=source_c,
        source_mesh=source_mesh if source_mesh is not None else marching_cubes(source_c),
        target_grid=target_c,
        target_mesh=target_mesh if target_mesh is not None else marching_cubes(target_c),
        landmarks=[Landmark(float(t), g, m) for t, g, m in zip(t_values, grids, meshes)],
    )
