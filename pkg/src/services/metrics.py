"""
Grasp Quality Metrics Service

Penetration depth, solid intersection volume and simulation displacement of
a posed hand against an object. Lengths are reported in centimeters.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..config import MetricsConfig, SdfConfig, SimulationConfig
from ..core.mesh import TriMesh, edge_manifold_defects
from ..core.raycast import lattice_inside
from ..core.sdf import SdfGrid, mesh_to_sdf, sample_sdf
from ..exceptions import NonWatertightError
from .simulation import simulate_drop

logger = logging.getLogger(__name__)

CM = 100.0


@dataclass(frozen=True, eq=False)
class GraspRecord:
    hand_mesh: TriMesh
    object_mesh: TriMesh
    object_sdf: SdfGrid
    source_id: str = ""
    intent: str = ""
    category: str = ""

    def __post_init__(self) -> None:
        for mesh in (self.hand_mesh, self.object_mesh):
            defects = edge_manifold_defects(mesh.faces)
            if defects or mesh.n_faces == 0:
                raise NonWatertightError(defects)

    @classmethod
    def from_meshes(cls, hand: TriMesh, obj: TriMesh, sdf_config: SdfConfig | None = None, **meta) -> "GraspRecord":
        sdf_config = sdf_config or SdfConfig()
        return cls(hand, obj, mesh_to_sdf(obj, sdf_config.padding, sdf_config.resolution), **meta)


@dataclass(frozen=True)
class QualityReport:
    penet_depth: float
    intersect_volume: float
    sim_disp_mean: float
    sim_disp_std: float

    def as_dict(self) -> dict[str, float]:
        return {
            "penet_depth": self.penet_depth,
            "intersect_volume": self.intersect_volume,
            "sim_disp_mean": self.sim_disp_mean,
            "sim_disp_std": self.sim_disp_std,
        }


def penetration_depth(grasp: GraspRecord) -> float:
    """Deepest hand vertex inside the object (cm)."""
    s = np.asarray(sample_sdf(grasp.object_sdf, grasp.hand_mesh.vertices))
    return float(max(-s.min(), 0.0)) * CM


def intersection_volume(grasp: GraspRecord, voxel: float = 0.001) -> float:
    """Volume of hand voxels whose centers lie inside the object (cm^3)."""
    lo, hi = grasp.hand_mesh.bounds
    dims = tuple(int(n) for n in np.maximum(np.ceil((hi - lo) / voxel), 1))
    centers_origin = lo + voxel / 2.0
    inside_hand = lattice_inside(grasp.hand_mesh, centers_origin, voxel, dims)
    if not inside_hand.any():
        return 0.0

    idx = np.argwhere(inside_hand)
    centers = centers_origin + idx * voxel
    inside_object = np.asarray(sample_sdf(grasp.object_sdf, centers)) < 0
    return float(np.count_nonzero(inside_object)) * voxel**3 * CM**3


def hand_collider(grasp: GraspRecord, config: SimulationConfig, padding: float = 0.02) -> SdfGrid:
    return mesh_to_sdf(grasp.hand_mesh, padding, config.hand_sdf_resolution)


def simulation_displacement(
    grasp: GraspRecord,
    repeats: int,
    steps: int,
    dt: float,
    config: SimulationConfig | None = None,
    seed: int = 0,
    with_hand: bool = True,
) -> tuple[float, float]:
    """Mean and std (cm) of object displacement over jittered drop simulations."""
    config = config or SimulationConfig()
    collider = hand_collider(grasp, config) if with_hand else None
    rng = np.random.default_rng(seed)

    displacements = []
    for _ in range(repeats):
        v0 = rng.normal(0.0, config.jitter, 3)
        displacements.append(simulate_drop(grasp.object_mesh, collider, config, v0, steps=steps, dt=dt) * CM)
    return float(np.mean(displacements)), float(np.std(displacements))


def evaluate_grasp(
    grasp: GraspRecord,
    metrics: MetricsConfig | None = None,
    simulation: SimulationConfig | None = None,
    seed: int = 0,
) -> QualityReport:
    metrics = metrics or MetricsConfig()
    simulation = simulation or SimulationConfig()
    mean, std = simulation_displacement(
        grasp, simulation.repeats, simulation.steps, simulation.dt, simulation, seed
    )
    report = QualityReport(
        penet_depth=penetration_depth(grasp),
        intersect_volume=intersection_volume(grasp, metrics.voxel),
        sim_disp_mean=mean,
        sim_disp_std=std,
    )
    logger.info(
        f"📊 {grasp.source_id or 'grasp'}: penetration {report.penet_depth:.3f} cm, "
        f"volume {report.intersect_volume:.3f} cm3, displacement {report.sim_disp_mean:.3f} cm"
    )
    return report


def mean_report(reports: list[QualityReport]) -> QualityReport | None:
    """Dataset-level mean over grasps."""
    if not reports:
        return None
    rows = np.array([[r.penet_depth, r.intersect_volume, r.sim_disp_mean, r.sim_disp_std] for r in reports])
    return QualityReport(*(float(v) for v in rows.mean(axis=0)))
