"""
Synthetic object families and source-grasp synthesis.

Families: ``sphere`` (size = radius), ``mug`` (superellipsoid, size = half
width), ``bottle`` (capsule, size = radius). Every object is centred at the
origin; names of the form ``fixture:<family>:<size>`` resolve to meshes.
"""

import logging

import numpy as np

from ..config import TinkConfig
from ..core.mesh import TriMesh
from ..core.primitives import capsule, icosphere, superellipsoid
from ..core.sdf import SdfGrid, mesh_to_sdf
from ..exceptions import ValidationError
from ..hand.rig import MCP_JOINTS, N_JOINTS, HandParams, HandRig, forward
from .contact import derive_contact
from .refiner import RefineProblem, refine

logger = logging.getLogger(__name__)

FAMILIES = ("sphere", "mug", "bottle")
FIXTURE_PREFIX = "fixture:"
# gap between palm and object top when placing a synthetic grasp (m)
PLACEMENT_GAP = 0.004


def fixture_mesh(family: str, size: float) -> TriMesh:
    if size <= 0:
        raise ValidationError(f"Fixture size must be positive, got {size}")
    if family == "sphere":
        return icosphere(size, subdivisions=3)
    if family == "mug":
        return superellipsoid((size, size, 1.25 * size), exponent=4.0, subdivisions=4)
    if family == "bottle":
        half = 1.5 * size
        mesh, _, _ = capsule((0.0, 0.0, -half), (0.0, 0.0, half), size, n_around=24, n_body=7, n_cap=4)
        return mesh
    raise ValidationError(f"Unknown fixture family '{family}', expected one of {FAMILIES}")


def is_fixture(name: str) -> bool:
    return name.startswith(FIXTURE_PREFIX)


def resolve_fixture(name: str) -> TriMesh:
    """``fixture:<family>:<size>`` -> mesh."""
    try:
        _, family, size = name.split(":")
        return fixture_mesh(family, float(size))
    except ValueError as e:
        raise ValidationError(f"Bad fixture name '{name}': {e}") from e


def fixture_pairs(n: int, seed: int = 0) -> list[tuple[str, str]]:
    """``n`` deterministic (source, target) fixture names cycling through the families."""
    rng = np.random.default_rng(seed)
    pairs = []
    for k in range(n):
        family = FAMILIES[k % len(FAMILIES)]
        if family == "sphere":
            a, b = rng.uniform(0.04, 0.10, 2)
        elif family == "mug":
            a, b = rng.uniform(0.035, 0.055, 2)
        else:
            a, b = rng.uniform(0.025, 0.04, 2)
        pairs.append((f"fixture:{family}:{a:.4f}", f"fixture:{family}:{b:.4f}"))
    return pairs


# ============================================================================
# Grasp synthesis
# ============================================================================


def flexion_axes(rig: HandRig) -> np.ndarray:
    """Per-joint axis that curls the finger towards the palm side."""
    axes = np.cross(rig.twist_axes, rig.splay_axes)
    return axes / np.linalg.norm(axes, axis=1, keepdims=True)


def wrap_pose(rig: HandRig, radius: float) -> np.ndarray:
    """Flexion angles that roughly curl each finger around a radius."""
    axes = flexion_axes(rig)
    lengths = np.zeros(N_JOINTS)
    for j in range(1, N_JOINTS):
        child = j + 1 if j not in (3, 6, 9, 12, 15) else None
        end = rig.joints_rest[child] if child is not None else rig.tips_rest[(j - 3) // 3]
        lengths[j] = np.linalg.norm(end - rig.joints_rest[j])
    angles = np.clip(lengths / max(radius, 1e-3), 0.0, 1.2)
    angles[list(MCP_JOINTS)] *= 0.6
    angles[0] = 0.0
    return angles[:, None] * axes


def place_hand(rig: HandRig, theta: np.ndarray, obj: TriMesh) -> HandParams:
    """Put the palm (facing -z) just above the object's top."""
    params = HandParams(theta, np.zeros(10), np.zeros(3))
    state = forward(rig, params, jacobians=False)
    palm = state.anchors[15:17].mean(axis=0)
    lo, hi = obj.bounds
    center = 0.5 * (lo + hi)
    target = np.array([center[0], center[1], hi[2] + PLACEMENT_GAP])
    return params.with_wrist(target - palm)


def synthesize_grasp(
    rig: HandRig,
    obj: TriMesh,
    config: TinkConfig | None = None,
    sdf: SdfGrid | None = None,
    settle_iterations: int = 200,
) -> HandParams:
    """Wrap the hand over an object and settle it with a short self-consistent refine."""
    config = config or TinkConfig()
    sdf = sdf if sdf is not None else mesh_to_sdf(obj, config.sdf.padding, config.sdf.resolution)
    lo, hi = obj.bounds
    radius = 0.5 * float(min(hi[0] - lo[0], hi[1] - lo[1]))
    params = place_hand(rig, wrap_pose(rig, radius), obj)

    field = derive_contact(forward(rig, params, jacobians=False), obj, config.contact.threshold, config.contact.decay)
    if field.n_labeled == 0:
        logger.warning("⚠️ Synthetic grasp has no contacts, returning the unsettled placement")
        return params

    settle = config.refine.model_copy(update={"iterations": settle_iterations})
    report = refine(RefineProblem(rig, params, obj, sdf, field, settle))
    return report.params
