"""
Parametric articulated hand: parameters, rig definition and forward kinematics.

Skeleton layout (16 posed joints, parents always precede children):

    0 wrist | 1-3 index | 4-6 middle | 7-9 pinky | 10-12 ring | 13-15 thumb

Keypoints are the 16 joints followed by the 5 fingertips in the same finger
order. Optimization variables are packed as ``theta (48) | beta (10) | wrist (3)``.

Posing never loses exactness at rest: every output is written as
``rest + displacement`` so zero pose with zero shape returns the rest
geometry bit-for-bit.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..core.mesh import TriMesh
from ..exceptions import ValidationError
from .axis_angle import canonicalize_axis_angle, left_jacobian, rodrigues

N_JOINTS = 16
N_TIPS = 5
N_KEYPOINTS = N_JOINTS + N_TIPS
N_PARTS = 17
N_BETA = 10
N_THETA = N_JOINTS * 3
N_PARAMS = N_THETA + N_BETA + 3
BETA_LIMIT = 3.0
# fractional length/width change per unit beta
BETA_SCALE = 0.1

FINGER_NAMES = ("index", "middle", "pinky", "ring", "thumb")
PARENTS = np.array([-1, 0, 1, 2, 0, 4, 5, 0, 7, 8, 0, 10, 11, 0, 13, 14])
MCP_JOINTS = (1, 4, 7, 10, 13)
TIP_JOINTS = (3, 6, 9, 12, 15)
JOINT_NAMES = ("wrist",) + tuple(
    f"{finger}{level}" for finger in FINGER_NAMES for level in (1, 2, 3)
)
KEYPOINT_NAMES = JOINT_NAMES + tuple(f"{finger}_tip" for finger in FINGER_NAMES)

THETA_SLICE = slice(0, N_THETA)
BETA_SLICE = slice(N_THETA, N_THETA + N_BETA)
WRIST_SLICE = slice(N_THETA + N_BETA, N_PARAMS)


# ============================================================================
# Parameters
# ============================================================================


@dataclass(frozen=True, eq=False)
class HandParams:
    """Pose, shape and wrist position. Always stored canonicalized and clamped."""

    theta: np.ndarray
    beta: np.ndarray
    wrist: np.ndarray

    def __post_init__(self) -> None:
        theta = np.array(self.theta, dtype=np.float64)
        beta = np.array(self.beta, dtype=np.float64)
        wrist = np.array(self.wrist, dtype=np.float64)
        if theta.size != N_THETA or beta.size != N_BETA or wrist.size != 3:
            raise ValidationError(
                f"HandParams expects theta {N_THETA}, beta {N_BETA}, wrist 3 values; "
                f"got {theta.size}, {beta.size}, {wrist.size}"
            )
        for name, value in (("theta", theta), ("beta", beta), ("wrist", wrist)):
            if not np.all(np.isfinite(value)):
                raise ValidationError(f"HandParams.{name} has non-finite entries")

        theta = canonicalize_axis_angle(theta.reshape(N_JOINTS, 3))
        beta = np.clip(beta.reshape(N_BETA), -BETA_LIMIT, BETA_LIMIT)
        wrist = wrist.reshape(3)
        for value in (theta, beta, wrist):
            value.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "wrist", wrist)

    @classmethod
    def zeros(cls) -> "HandParams":
        return cls(np.zeros((N_JOINTS, 3)), np.zeros(N_BETA), np.zeros(3))

    def flat(self) -> np.ndarray:
        return np.concatenate([self.theta.ravel(), self.beta, self.wrist])

    @classmethod
    def from_flat(cls, x: np.ndarray) -> "HandParams":
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (N_PARAMS,):
            raise ValidationError(f"Flat parameter vector must have {N_PARAMS} entries")
        return cls(x[THETA_SLICE].reshape(N_JOINTS, 3), x[BETA_SLICE], x[WRIST_SLICE])

    def with_wrist(self, wrist) -> "HandParams":
        return HandParams(self.theta, self.beta, wrist)

    def with_beta(self, beta) -> "HandParams":
        return HandParams(self.theta, beta, self.wrist)

    def max_abs_diff(self, other: "HandParams") -> float:
        return float(np.max(np.abs(self.flat() - other.flat())))


# ============================================================================
# Rig
# ============================================================================


@dataclass(frozen=True, eq=False)
class HandRig:
    """Kinematic tree plus skinned template.

    Every rest quantity is affine in beta: ``x(beta) = x_rest + x_beta @ beta``.
    """

    parents: np.ndarray  # (16,)
    joints_rest: np.ndarray  # (16, 3)
    joints_beta: np.ndarray  # (16, 3, 10)
    tips_rest: np.ndarray  # (5, 3)
    tips_beta: np.ndarray  # (5, 3, 10)
    template_vertices: np.ndarray  # (N, 3)
    template_beta: np.ndarray  # (N, 3, 10)
    faces: np.ndarray  # (F, 3)
    parts: np.ndarray  # (N,) in 1..17
    skin_weights: np.ndarray  # (N, 16)
    anchor_faces: np.ndarray  # (17,) face index per anchor, anchor i belongs to part i+1
    anchor_bary: np.ndarray  # (17, 3)
    twist_axes: np.ndarray  # (16, 3)
    splay_axes: np.ndarray  # (16, 3)

    def __post_init__(self) -> None:
        for name in self.__dataclass_fields__:
            value = np.array(getattr(self, name))
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        self._validate()

    def _validate(self) -> None:
        parents = self.parents
        if parents.shape != (N_JOINTS,) or parents[0] != -1:
            raise ValidationError("Kinematic tree must have 16 joints rooted at joint 0")
        if any(not (0 <= parents[j] < j) for j in range(1, N_JOINTS)):
            raise ValidationError("Kinematic tree parents must precede their children")

        n = len(self.template_vertices)
        if self.skin_weights.shape != (n, N_JOINTS):
            raise ValidationError(f"Skin weights must be ({n}, {N_JOINTS})")
        if self.skin_weights.min() < 0 or not np.allclose(self.skin_weights.sum(axis=1), 1.0):
            raise ValidationError("Skin weights must be non-negative and sum to 1 per vertex")

        present = set(np.unique(self.parts).tolist())
        if present != set(range(1, N_PARTS + 1)):
            raise ValidationError(f"Template must cover parts 1..{N_PARTS}, got {sorted(present)}")
        if self.anchor_faces.shape != (N_PARTS,) or self.anchor_bary.shape != (N_PARTS, 3):
            raise ValidationError(f"Rig needs exactly {N_PARTS} anchors")

        for axes in (self.twist_axes, self.splay_axes):
            if not np.allclose(np.linalg.norm(axes, axis=1), 1.0, atol=1e-9):
                raise ValidationError("Joint axes must be unit vectors")
        if not np.allclose(np.einsum("ij,ij->i", self.twist_axes, self.splay_axes), 0.0, atol=1e-9):
            raise ValidationError("Twist and splay axes must be orthogonal per joint")

    @property
    def n_vertices(self) -> int:
        return len(self.template_vertices)

    @cached_property
    def descendants(self) -> np.ndarray:
        """``descendants[j, k]`` is True when k is j or below j in the tree."""
        mask = np.eye(N_JOINTS, dtype=bool)
        for k in range(N_JOINTS - 1, 0, -1):
            mask[self.parents[k]] |= mask[k]
        return mask

    @cached_property
    def keypoint_bones(self) -> np.ndarray:
        """Bone each keypoint rides on (-1 for the wrist, which only follows translation)."""
        bones = [-1] + [int(self.parents[k]) for k in range(1, N_JOINTS)] + list(TIP_JOINTS)
        return np.array(bones)

    def template(self) -> TriMesh:
        return TriMesh(self.template_vertices, self.faces, self.parts)


@dataclass(frozen=True, eq=False)
class HandState:
    """Posed outputs. Jacobians are ``(n, 3, 61)`` over the flat parameter layout."""

    joints: np.ndarray
    vertices: np.ndarray
    anchors: np.ndarray
    joints_jac: np.ndarray | None = None
    vertices_jac: np.ndarray | None = None
    anchors_jac: np.ndarray | None = None


def hand_mesh(rig: HandRig, state: HandState) -> TriMesh:
    """Posed hand surface with part labels."""
    return TriMesh(state.vertices, rig.faces, rig.parts)


# ============================================================================
# Forward kinematics
# ============================================================================


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.cross(a, b, axis=-1)


def forward(rig: HandRig, params: HandParams, jacobians: bool = True) -> HandState:
    """Pose the hand: FK down the tree, linear-blend skinning, anchors.

    Args:
        rig: Hand rig.
        params: Canonical hand parameters.
        jacobians: Also return analytic Jacobians of all outputs.
    """
    beta, wrist = params.beta, params.wrist
    parents = rig.parents
    eye = np.eye(3)

    rest_j = rig.joints_rest + rig.joints_beta @ beta
    rest_t = rig.tips_rest + rig.tips_beta @ beta
    rest_v = rig.template_vertices + rig.template_beta @ beta

    local = rodrigues(params.theta)
    rot = np.empty((N_JOINTS, 3, 3))
    disp = np.zeros((N_JOINTS, 3))  # joint displacement from rest, wrist excluded
    for j in range(N_JOINTS):
        p = parents[j]
        if p < 0:
            rot[j] = local[j]
        else:
            rot[j] = rot[p] @ local[j]
            disp[j] = disp[p] + (rot[p] - eye) @ (rest_j[j] - rest_j[p])
    delta = rot - eye

    tips = list(TIP_JOINTS)
    tip_disp = disp[tips] + np.einsum("kab,kb->ka", delta[tips], rest_t - rest_j[tips])

    # per-bone displacement of every template vertex
    bone_disp = disp[:, None, :] + np.einsum("kab,knb->kna", delta, rest_v[None] - rest_j[:, None])
    weights = rig.skin_weights
    vertices = rest_v + np.einsum("nk,kna->na", weights, bone_disp) + wrist
    joint_pos = rest_j + disp + wrist
    keypoints = np.concatenate([joint_pos, rest_t + tip_disp + wrist])

    anchor_idx = rig.faces[rig.anchor_faces]  # (17, 3)
    anchors = np.einsum("im,ima->ia", rig.anchor_bary, vertices[anchor_idx])

    if not jacobians:
        return HandState(keypoints, vertices, anchors)

    # ---- pose: d y / d theta_jc = w_jc x (y - P_j) for points riding below j
    parent_rot = np.stack([rot[p] if p >= 0 else eye for p in parents])
    omega = np.transpose(parent_rot @ left_jacobian(params.theta), (0, 2, 1))  # (j, c, xyz)

    bones = rig.keypoint_bones
    ride = np.zeros((N_JOINTS, N_KEYPOINTS), dtype=bool)
    ride[:, bones >= 0] = rig.descendants[:, bones[bones >= 0]]
    lever = keypoints[None, :, :] - joint_pos[:, None, :]
    kp_theta = _cross(omega[:, None, :, :], lever[:, :, None, :]) * ride[:, :, None, None]
    kp_theta = np.transpose(kp_theta, (1, 3, 0, 2)).reshape(N_KEYPOINTS, 3, N_THETA)

    world = rest_v[None] + bone_disp + wrist  # (16, N, 3)
    desc = rig.descendants.astype(np.float64)
    moment = np.einsum("jk,nk,kna->jna", desc, weights, world)
    moment -= (weights @ desc.T).T[:, :, None] * joint_pos[:, None, :]
    v_theta = _cross(omega[:, None, :, :], moment[:, :, None, :])
    v_theta = np.transpose(v_theta, (1, 3, 0, 2)).reshape(rig.n_vertices, 3, N_THETA)

    # ---- shape: everything is affine in beta before posing
    d_rest_j, d_rest_t, d_rest_v = rig.joints_beta, rig.tips_beta, rig.template_beta
    d_disp = np.zeros((N_JOINTS, 3, N_BETA))
    for j in range(1, N_JOINTS):
        p = parents[j]
        d_disp[j] = d_disp[p] + delta[p] @ (d_rest_j[j] - d_rest_j[p])
    kp_beta = np.concatenate(
        [
            d_rest_j + d_disp,
            d_rest_t + d_disp[tips] + np.einsum("kab,kbc->kac", delta[tips], d_rest_t - d_rest_j[tips]),
        ]
    )
    d_bone = d_disp[:, None] + np.einsum("kab,knbc->knac", delta, d_rest_v[None] - d_rest_j[:, None])
    v_beta = d_rest_v + np.einsum("nk,knac->nac", weights, d_bone)

    # ---- wrist: pure translation
    kp_wrist = np.broadcast_to(eye, (N_KEYPOINTS, 3, 3))
    v_wrist = np.broadcast_to(eye, (rig.n_vertices, 3, 3))

    joints_jac = np.concatenate([kp_theta, kp_beta, kp_wrist], axis=2)
    vertices_jac = np.concatenate([v_theta, v_beta, v_wrist], axis=2)
    anchors_jac = np.einsum("im,imab->iab", rig.anchor_bary, vertices_jac[anchor_idx])
    return HandState(keypoints, vertices, anchors, joints_jac, vertices_jac, anchors_jac)


def check_jacobians(rig: HandRig, params: HandParams, step: float = 1e-6) -> float:
    """Worst relative error between analytic and central-difference Jacobians.

    Each output block (keypoints, vertices, anchors) is normalized by its
    largest finite-difference entry.
    """
    state = forward(rig, params)
    x = params.flat()
    blocks = ("joints", "vertices", "anchors")
    numeric = {name: np.zeros_like(getattr(state, f"{name}_jac")) for name in blocks}

    for i in range(N_PARAMS):
        dx = np.zeros(N_PARAMS)
        dx[i] = step
        plus = forward(rig, HandParams.from_flat(x + dx), jacobians=False)
        minus = forward(rig, HandParams.from_flat(x - dx), jacobians=False)
        for name in blocks:
            numeric[name][:, :, i] = (getattr(plus, name) - getattr(minus, name)) / (2 * step)

    worst = 0.0
    for name in blocks:
        analytic = getattr(state, f"{name}_jac")
        scale = max(float(np.abs(numeric[name]).max()), 1e-12)
        worst = max(worst, float(np.abs(analytic - numeric[name]).max()) / scale)
    return worst
