"""
Minimal rigid-body drop test against a static hand collider.

The object is a single rigid body integrated with symplectic Euler. Contact
is a penalty spring-damper on object sample points that enter the hand SDF,
with regularized Coulomb friction. Gravity acts along -z.

Blow-up is judged against the free-flight reach ``|v0| t + g dt^2 k (k + 1) / 2``
after ``k`` steps (the discrete ballistic drop), so an object that simply
falls out of the hand reports its displacement instead of failing.
"""

import logging

import numpy as np

from ..config import SimulationConfig
from ..core.mesh import TriMesh, mass_properties
from ..core.sdf import SdfGrid, sample_sdf, sdf_gradient
from ..exceptions import UnstableError
from ..hand.axis_angle import rodrigues

logger = logging.getLogger(__name__)

# tangential speed below which friction ramps linearly instead of saturating (m/s)
FRICTION_REGULARIZATION = 1e-3
# keeps omega_n * dt under this bound for light objects
MAX_STIFFNESS_DT = 0.5


def _sample_points(mesh: TriMesh, max_samples: int) -> np.ndarray:
    if mesh.n_vertices <= max_samples:
        return np.array(mesh.vertices)
    idx = np.linspace(0, mesh.n_vertices - 1, max_samples).round().astype(np.int64)
    return np.array(mesh.vertices[np.unique(idx)])


def simulate_drop(
    object_mesh: TriMesh,
    hand_sdf: SdfGrid | None,
    config: SimulationConfig,
    initial_velocity=(0.0, 0.0, 0.0),
    steps: int | None = None,
    dt: float | None = None,
) -> float:
    """Displacement (m) of the object's center of mass after the simulated interval."""
    steps = config.steps if steps is None else steps
    dt = config.dt if dt is None else dt

    mass, com, inertia_body = mass_properties(object_mesh, config.density)
    inertia_inv_body = np.linalg.inv(inertia_body)
    body_points = _sample_points(object_mesh, config.max_samples) - com

    stiffness = min(config.stiffness, mass * (MAX_STIFFNESS_DT / dt) ** 2)
    if stiffness < config.stiffness:
        logger.debug(f"Contact stiffness clamped to {stiffness:.3g} N/m for a {mass:.3g} kg object")
    damping = config.damping_ratio * 2.0 * np.sqrt(stiffness * mass)
    gravity = np.array([0.0, 0.0, -config.gravity])

    x = com.copy()
    v = np.asarray(initial_velocity, dtype=np.float64).copy()
    speed0 = float(np.linalg.norm(v))
    rotation = np.eye(3)
    omega = np.zeros(3)

    for step in range(steps):
        force = mass * gravity
        torque = np.zeros(3)

        if hand_sdf is not None:
            lever = body_points @ rotation.T
            points = x + lever
            depth = np.asarray(sample_sdf(hand_sdf, points))
            touching = depth < 0
            n_contacts = int(np.count_nonzero(touching))
            if n_contacts:
                r = lever[touching]
                normal = sdf_gradient(hand_sdf, points[touching])
                normal /= np.maximum(np.linalg.norm(normal, axis=1, keepdims=True), 1e-12)
                vel = v + np.cross(omega, r)
                vn = np.einsum("ij,ij->i", vel, normal)
                fn = np.maximum((stiffness * -depth[touching] - damping * vn) / n_contacts, 0.0)
                vt = vel - vn[:, None] * normal
                speed = np.linalg.norm(vt, axis=1, keepdims=True)
                ft = -config.friction * fn[:, None] * vt / np.maximum(speed, FRICTION_REGULARIZATION)
                f = fn[:, None] * normal + ft
                force = force + f.sum(axis=0)
                torque = np.cross(r, f).sum(axis=0)

        inertia_inv = rotation @ inertia_inv_body @ rotation.T
        inertia = rotation @ inertia_body @ rotation.T
        v = v + dt * force / mass
        omega = omega + dt * inertia_inv @ (torque - np.cross(omega, inertia @ omega))
        x = x + dt * v
        rotation = rodrigues(omega * dt)[0] @ rotation

        # divergence is motion beyond the ballistic reach; a dropped object is not
        k = step + 1
        reach = speed0 * k * dt + 0.5 * config.gravity * dt**2 * k * (k + 1)
        excess = float(np.linalg.norm(x - com)) - reach
        if not np.isfinite(excess) or excess > config.blowup_distance:
            raise UnstableError(excess, config.blowup_distance)

    return float(np.linalg.norm(x - com))
