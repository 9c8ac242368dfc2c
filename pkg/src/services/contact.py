"""
Contact Service

Derives contact regions (part label + contactness per object vertex) from a
posed hand and carries them along a landmark path onto a target object.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from ..config import IcpConfig
from ..core.mesh import TriMesh, mean_edge_length
from ..exceptions import IcpDivergedError, ValidationError
from ..hand.rig import N_PARTS, HandState
from .icp import icp_align
from .shape_path import LandmarkPath

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ContactnessField:
    """Per-vertex contact labels on one object mesh.

    ``part`` is 0 and ``anchor`` is 0 where a vertex carries no label.
    """

    part: np.ndarray
    gamma: np.ndarray
    anchor: np.ndarray

    def __post_init__(self) -> None:
        part = np.array(self.part, dtype=np.int64).reshape(-1)
        gamma = np.array(self.gamma, dtype=np.float64).reshape(-1)
        anchor = np.array(self.anchor, dtype=np.int64).reshape(-1)
        if not (len(part) == len(gamma) == len(anchor)):
            raise ValidationError("Contact field arrays must have equal length")
        labeled = part > 0
        if part.min(initial=0) < 0 or part.max(initial=0) > N_PARTS:
            raise ValidationError(f"Contact part ids must be in 1..{N_PARTS}")
        if np.any(gamma[labeled] <= 0) or np.any(gamma[labeled] > 1) or np.any(gamma[~labeled] != 0):
            raise ValidationError("Contactness must be in (0, 1] on labeled vertices and 0 elsewhere")
        for value in (part, gamma, anchor):
            value.setflags(write=False)
        object.__setattr__(self, "part", part)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "anchor", anchor)

    @classmethod
    def empty(cls, vertex_count: int) -> "ContactnessField":
        return cls(np.zeros(vertex_count, dtype=np.int64), np.zeros(vertex_count), np.zeros(vertex_count, dtype=np.int64))

    @property
    def vertex_count(self) -> int:
        return len(self.part)

    @property
    def labeled(self) -> np.ndarray:
        return np.nonzero(self.part > 0)[0]

    @property
    def n_labeled(self) -> int:
        return int(np.count_nonzero(self.part))

    @property
    def total_gamma(self) -> float:
        return float(self.gamma.sum())

    def entries(self) -> list[tuple[int, int, float, int]]:
        """(vertex, part, gamma, anchor) for every labeled vertex."""
        return [(int(v), int(self.part[v]), float(self.gamma[v]), int(self.anchor[v])) for v in self.labeled]

    def same_as(self, other: "ContactnessField") -> bool:
        return (
            np.array_equal(self.part, other.part)
            and np.array_equal(self.gamma, other.gamma)
            and np.array_equal(self.anchor, other.anchor)
        )


def contactness(d: np.ndarray, d_min: np.ndarray, threshold: float, decay: str = "linear") -> np.ndarray:
    """Decay from 1 at each anchor's closest distance to 0 at the threshold."""
    span = np.maximum(threshold - d_min, 1e-12)
    u = np.clip((d - d_min) / span, 0.0, 1.0)
    if decay == "cosine":
        return 0.5 * (1.0 + np.cos(np.pi * u))
    return 1.0 - u


def derive_contact(
    hand: HandState,
    obj: TriMesh,
    threshold: float = 0.025,
    decay: str = "linear",
) -> ContactnessField:
    """Label object vertices near hand anchors (anchor i labels part i + 1).

    Ties between anchors resolve to the lower anchor id.
    """
    dist = cdist(obj.vertices, hand.anchors)  # (V, 17)
    d_min = dist.min(axis=0)
    gamma = contactness(dist, d_min[None, :], threshold, decay)
    gamma = np.where(dist < threshold, gamma, 0.0)

    best = np.argmax(gamma, axis=1)
    best_gamma = gamma[np.arange(len(best)), best]
    labeled = best_gamma > 0
    part = np.where(labeled, best + 1, 0)

    field = ContactnessField(part, np.where(labeled, best_gamma, 0.0), part)
    logger.debug(f"Derived contacts: {field.n_labeled} labeled vertices over {len(contact_regions(field))} parts")
    return field


def contact_regions(field: ContactnessField) -> dict[int, int]:
    """Labeled vertex count per part."""
    parts, counts = np.unique(field.part[field.part > 0], return_counts=True)
    return {int(p): int(c) for p, c in zip(parts, counts)}


def transfer_labels(
    field: ContactnessField, moved: np.ndarray, target: TriMesh
) -> ContactnessField:
    """Carry every labeled entry to the nearest target vertex; collisions keep max gamma."""
    labeled = field.labeled
    out_part = np.zeros(target.n_vertices, dtype=np.int64)
    out_gamma = np.zeros(target.n_vertices)
    out_anchor = np.zeros(target.n_vertices, dtype=np.int64)
    if len(labeled) == 0:
        return ContactnessField(out_part, out_gamma, out_anchor)

    _, nearest = cKDTree(target.vertices).query(moved[labeled])
    # ascending gamma so the strongest entry is written last
    order = np.argsort(field.gamma[labeled], kind="stable")
    src, dst = labeled[order], nearest[order]
    out_part[dst] = field.part[src]
    out_gamma[dst] = field.gamma[src]
    out_anchor[dst] = field.anchor[src]
    return ContactnessField(out_part, out_gamma, out_anchor)


def _align_step(a: TriMesh, b: TriMesh, config: IcpConfig, step: int):
    result = icp_align(a.vertices, b.vertices, config.max_iterations, config.tolerance)
    bound = config.divergence_factor * mean_edge_length(b)
    if result.rms > bound:
        raise IcpDivergedError(result.rms, bound, step)
    if result.rms > 0.5 * bound:
        logger.warning(f"⚠️ ICP step {step}: rms {result.rms:.3e} m is close to the divergence bound {bound:.3e} m")
    return result


def map_contacts(
    field: ContactnessField,
    path: LandmarkPath,
    config: IcpConfig | None = None,
) -> ContactnessField:
    """Propagate a source contact field along the path to the target mesh."""
    config = config or IcpConfig()
    meshes = path.meshes()
    if field.vertex_count != meshes[0].n_vertices:
        raise ValidationError(
            f"Contact field has {field.vertex_count} vertices, source mesh has {meshes[0].n_vertices}"
        )

    source, target = meshes[0], meshes[-1]
    direct = icp_align(source.vertices, target.vertices, config.max_iterations, config.tolerance)
    if direct.rms <= config.congruence_ratio * mean_edge_length(target):
        logger.info(f"Source and target are congruent (rms {direct.rms:.2e} m), transferring directly")
        return transfer_labels(field, direct.apply(source.vertices), target)

    current = field
    for step in range(len(meshes) - 1):
        a, b = meshes[step], meshes[step + 1]
        result = _align_step(a, b, config, step)
        current = transfer_labels(current, result.apply(a.vertices), b)
        logger.debug(f"Contact step {step}: {current.n_labeled} labeled vertices")

    logger.info(f"Mapped contacts over {len(meshes) - 1} steps: {field.n_labeled} -> {current.n_labeled} labeled")
    return current
