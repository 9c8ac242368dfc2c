"""
Signed distance grids: sampling, gradients, mesh conversion and iso-surfacing.

Conventions:
- values are indexed ``values[i, j, k]`` for node ``origin + (i, j, k) * spacing``
- distances are in meters, negative inside
"""

import logging
from dataclasses import dataclass

import numpy as np
from skimage import measure

from ..exceptions import EmptySurfaceError, NonWatertightError, ValidationError
from .mesh import TriMesh, drop_unreferenced, edge_manifold_defects
from .raycast import lattice_inside, point_mesh_distance

logger = logging.getLogger(__name__)

# iso-surface snapping tolerance
ISO_SNAP = 1e-9


@dataclass(frozen=True, eq=False)
class SdfGrid:
    """Dense regular grid of signed distances."""

    origin: np.ndarray
    spacing: float
    values: np.ndarray

    def __post_init__(self) -> None:
        origin = np.array(self.origin, dtype=np.float64).reshape(3)
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 3 or min(values.shape) < 2:
            raise ValidationError(f"SDF grid dims must be 3 values >= 2, got {values.shape}")
        if not (np.isfinite(self.spacing) and self.spacing > 0):
            raise ValidationError(f"SDF grid spacing must be > 0, got {self.spacing}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("SDF grid has non-finite values")
        origin.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "values", values)

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(n) for n in self.values.shape)

    @property
    def upper(self) -> np.ndarray:
        return self.origin + (np.array(self.dims) - 1) * self.spacing

    def nodes(self) -> np.ndarray:
        """Node coordinates, shape dims + (3,)."""
        return grid_nodes(self.origin, self.spacing, self.dims)

    def encloses_surface(self) -> bool:
        """True when every boundary-shell node is strictly positive."""
        v = self.values
        shell = np.concatenate(
            [
                v[0].ravel(), v[-1].ravel(),
                v[:, 0].ravel(), v[:, -1].ravel(),
                v[:, :, 0].ravel(), v[:, :, -1].ravel(),
            ]
        )
        return bool(np.all(shell > 0))

    def inside_volume(self) -> float:
        """Volume of nodes with negative value (voxel count times cell volume)."""
        return float(np.count_nonzero(self.values < 0)) * self.spacing**3


def grid_nodes(origin, spacing: float, dims) -> np.ndarray:
    axes = [origin[a] + np.arange(dims[a]) * spacing for a in range(3)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def lattice_for_bounds(lo, hi, spacing: float) -> tuple[np.ndarray, tuple[int, int, int]]:
    """Smallest lattice of the given spacing covering [lo, hi], centred on the box."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    cells = np.maximum(np.ceil((hi - lo) / spacing - 1e-9).astype(np.int64), 1)
    slack = cells * spacing - (hi - lo)
    origin = lo - slack / 2.0
    return origin, tuple(int(c) + 1 for c in cells)


# ============================================================================
# Sampling
# ============================================================================


def _trilinear(grid: SdfGrid, q: np.ndarray) -> np.ndarray:
    dims = np.array(grid.dims)
    u = (q - grid.origin) / grid.spacing
    u = np.clip(u, 0.0, dims - 1)
    i0 = np.minimum(np.floor(u).astype(np.int64), dims - 2)
    f = u - i0
    v = grid.values
    x0, y0, z0 = i0[:, 0], i0[:, 1], i0[:, 2]
    fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]

    c00 = v[x0, y0, z0] * (1 - fx) + v[x0 + 1, y0, z0] * fx
    c10 = v[x0, y0 + 1, z0] * (1 - fx) + v[x0 + 1, y0 + 1, z0] * fx
    c01 = v[x0, y0, z0 + 1] * (1 - fx) + v[x0 + 1, y0, z0 + 1] * fx
    c11 = v[x0, y0 + 1, z0 + 1] * (1 - fx) + v[x0 + 1, y0 + 1, z0 + 1] * fx
    c0 = c00 * (1 - fy) + c10 * fy
    c1 = c01 * (1 - fy) + c11 * fy
    return c0 * (1 - fz) + c1 * fz


def sample_sdf(grid: SdfGrid, p) -> np.ndarray | float:
    """Signed distance at p (any ``(..., 3)`` shape).

    Points outside the grid get the boundary sample at their projection onto
    the grid box plus their distance to that box.
    """
    p = np.asarray(p, dtype=np.float64)
    flat = p.reshape(-1, 3)
    q = np.clip(flat, grid.origin, grid.upper)
    out = _trilinear(grid, q) + np.linalg.norm(flat - q, axis=1)
    if p.ndim == 1:
        return float(out[0])
    return out.reshape(p.shape[:-1])


def sdf_gradient(grid: SdfGrid, p) -> np.ndarray:
    """Central-difference gradient of ``sample_sdf`` with step spacing/2."""
    p = np.asarray(p, dtype=np.float64)
    flat = p.reshape(-1, 3)
    h = grid.spacing / 2.0
    grad = np.empty_like(flat)
    for axis in range(3):
        step = np.zeros(3)
        step[axis] = h
        grad[:, axis] = (
            np.asarray(sample_sdf(grid, flat + step)).reshape(-1)
            - np.asarray(sample_sdf(grid, flat - step)).reshape(-1)
        ) / (2.0 * h)
    return grad.reshape(p.shape)


def resample_grid(grid: SdfGrid, origin, spacing: float, dims) -> SdfGrid:
    """Sample a grid onto another lattice (outside-grid policy applies)."""
    nodes = grid_nodes(np.asarray(origin, dtype=np.float64), spacing, dims)
    return SdfGrid(origin, spacing, sample_sdf(grid, nodes.reshape(-1, 3)).reshape(tuple(dims)))


def grid_from_function(fn, lo, hi, spacing: float) -> SdfGrid:
    """Grid of an analytic field ``fn(points (N,3)) -> (N,)`` over [lo, hi]."""
    origin, dims = lattice_for_bounds(lo, hi, spacing)
    nodes = grid_nodes(origin, spacing, dims)
    return SdfGrid(origin, spacing, np.asarray(fn(nodes.reshape(-1, 3))).reshape(dims))


# ============================================================================
# Mesh <-> grid
# ============================================================================


def mesh_to_sdf(mesh: TriMesh, padding: float, resolution: int) -> SdfGrid:
    """Signed distance grid of a watertight mesh.

    Args:
        mesh: Closed, edge-manifold mesh.
        padding: Margin added around the mesh bounding box (meters).
        resolution: Cells along the longest padded axis.
    """
    defects = edge_manifold_defects(mesh.faces)
    if defects or mesh.n_faces == 0:
        raise NonWatertightError(defects)
    if resolution < 1:
        raise ValidationError(f"resolution must be >= 1, got {resolution}")

    lo, hi = mesh.bounds
    lo = lo - padding
    hi = hi + padding
    spacing = float((hi - lo).max()) / resolution
    origin, dims = lattice_for_bounds(lo, hi, spacing)

    nodes = grid_nodes(origin, spacing, dims).reshape(-1, 3)
    distance = point_mesh_distance(nodes, mesh).reshape(dims)
    inside = lattice_inside(mesh, origin, spacing, dims)

    logger.debug(
        f"mesh_to_sdf: {mesh.n_faces} faces -> dims {dims}, spacing {spacing:.4g} m, "
        f"{int(inside.sum())} inside nodes"
    )
    return SdfGrid(origin, spacing, np.where(inside, -distance, distance))


def marching_cubes(grid: SdfGrid, iso: float = 0.0) -> TriMesh:
    """Extract the iso-surface as a triangle mesh (outward-facing winding)."""
    values = np.array(grid.values) - iso
    if not (values.min() < 0.0 < values.max()):
        raise EmptySurfaceError(f"No sign crossing at iso {iso}")
    if not grid.encloses_surface():
        logger.warning("⚠️ Grid boundary shell is not strictly positive, surface may be open")

    near = np.abs(values) < ISO_SNAP
    values[near] = ISO_SNAP

    verts, faces, _, _ = measure.marching_cubes(
        values,
        level=0.0,
        spacing=(grid.spacing,) * 3,
        gradient_direction="ascent",
        method="lewiner",
        allow_degenerate=False,
    )
    faces = np.asarray(faces, dtype=np.int64)
    degenerate = (faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2]) | (faces[:, 0] == faces[:, 2])
    faces = faces[~degenerate]
    if len(faces) == 0:
        raise EmptySurfaceError("Iso-surface collapsed to degenerate triangles")

    verts, faces = drop_unreferenced(np.asarray(verts, dtype=np.float64) + grid.origin, faces)
    return TriMesh(verts, faces)
