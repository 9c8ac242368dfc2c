"""
Energy terms over hand parameters and their analytic gradients.

Every ``*_terms`` helper returns ``(value, gradient)`` with the gradient taken
with respect to the quantity the term reads directly (anchors, joints,
vertices or joint rotations). ``total_energy_and_gradient`` chains them
through the rig Jacobians onto the flat 61-variable layout.
"""

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from ..config import EnergyWeights
from ..core.mesh import TriMesh
from ..core.sdf import SdfGrid, sample_sdf, sdf_gradient
from ..exceptions import EmptyContactsError
from ..hand.rig import MCP_JOINTS, N_JOINTS, N_PARAMS, THETA_SLICE, HandParams, HandRig, HandState, forward
from .contact import ContactnessField

# below this rotation angle a joint axis is undefined and contributes nothing
DEGENERATE_ANGLE = 1e-9


# ============================================================================
# Contact consistency
# ============================================================================


def consis_terms(
    anchors: np.ndarray, contacts: ContactnessField, target_vertices: np.ndarray
) -> tuple[float, np.ndarray]:
    """Gamma-weighted mean squared anchor-to-labeled-vertex distance (m^2)."""
    total = contacts.total_gamma
    if total <= 0:
        raise EmptyContactsError()
    v = contacts.labeled
    gamma = contacts.gamma[v]
    diff = anchors[contacts.anchor[v] - 1] - target_vertices[v]
    value = float(np.sum(gamma * np.einsum("ij,ij->i", diff, diff)) / total)
    grad = np.zeros_like(anchors)
    np.add.at(grad, contacts.anchor[v] - 1, 2.0 * gamma[:, None] * diff / total)
    return value, grad


def energy_consis(hand: HandState, contacts: ContactnessField, target: TriMesh) -> float:
    return consis_terms(hand.anchors, contacts, target.vertices)[0]


# ============================================================================
# Anatomical validity
# ============================================================================


def anat_terms(theta: np.ndarray, rig: HandRig) -> tuple[float, np.ndarray]:
    """Twist, over-bend and (non-MCP) splay penalties summed over finger joints.

    Off-axis rotation is penalized by its squared projection, so either sign of
    twist costs the same and a pose with no off-axis component is stationary.
    The root joint is the global hand orientation and is not penalized.
    """
    theta = np.asarray(theta, dtype=np.float64).reshape(N_JOINTS, 3)
    grad = np.zeros_like(theta)
    value = 0.0
    for j in range(1, N_JOINTS):
        phi = float(np.linalg.norm(theta[j]))
        if phi < DEGENERATE_ANGLE:
            continue
        a = theta[j] / phi
        projector = (np.eye(3) - np.outer(a, a)) / phi

        axes = [rig.twist_axes[j]]
        if j not in MCP_JOINTS:
            axes.append(rig.splay_axes[j])
        for n in axes:
            dot = float(a @ n)
            value += dot**2
            grad[j] += 2.0 * dot * projector @ n

        if phi > np.pi / 2:
            value += phi - np.pi / 2
            grad[j] += a
    return value, grad


def energy_anat(params: HandParams, rig: HandRig) -> float:
    return anat_terms(params.theta, rig)[0]


# ============================================================================
# Interpenetration
# ============================================================================


def intp_terms(vertices: np.ndarray, sdf: SdfGrid) -> tuple[float, np.ndarray]:
    """Summed penetration depth of hand vertices inside the object (m)."""
    s = sample_sdf(sdf, vertices)
    inside = s < 0
    grad = np.zeros_like(vertices)
    if not inside.any():
        return 0.0, grad
    grad[inside] = -sdf_gradient(sdf, vertices[inside])
    return float(-s[inside].sum()), grad


def energy_intp(hand: HandState, sdf: SdfGrid) -> float:
    return intp_terms(hand.vertices, sdf)[0]


# ============================================================================
# Totals
# ============================================================================


@dataclass(frozen=True)
class EnergyBreakdown:
    consis: float
    anat: float
    intp: float
    total: float

    def as_row(self) -> tuple[float, float, float, float]:
        return self.consis, self.anat, self.intp, self.total


def total_energy_and_gradient(
    x: np.ndarray,
    rig: HandRig,
    contacts: ContactnessField,
    target: TriMesh,
    sdf: SdfGrid,
    weights: EnergyWeights,
) -> tuple[EnergyBreakdown, np.ndarray]:
    """Weighted refinement objective and its gradient over the flat layout."""
    params = HandParams.from_flat(x)
    state = forward(rig, params)

    e_consis, g_anchor = consis_terms(state.anchors, contacts, target.vertices)
    e_anat, g_theta = anat_terms(params.theta, rig)
    e_intp, g_vertex = intp_terms(state.vertices, sdf)

    grad = weights.consis * np.einsum("ia,iap->p", g_anchor, state.anchors_jac)
    grad[THETA_SLICE] += weights.anat * g_theta.ravel()
    if e_intp > 0:
        grad += weights.intp * np.einsum("na,nap->p", g_vertex, state.vertices_jac)

    total = weights.consis * e_consis + weights.anat * e_anat + weights.intp * e_intp
    return EnergyBreakdown(e_consis, e_anat, e_intp, total), grad


def numeric_gradient(fn: Callable[[np.ndarray], float], x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central differences of a scalar function of the flat layout."""
    grad = np.zeros(N_PARAMS)
    for i in range(N_PARAMS):
        dx = np.zeros(N_PARAMS)
        dx[i] = step
        grad[i] = (fn(x + dx) - fn(x - dx)) / (2 * step)
    return grad


def gradient_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Relative error ``|a - n| / max(|n|, tiny)`` over the whole vector."""
    scale = max(float(np.linalg.norm(numeric)), 1e-12)
    return float(np.linalg.norm(analytic - numeric)) / scale
