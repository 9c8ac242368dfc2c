"""
Multi-view Keypoint Fitting Service

Fits hand parameters to calibrated multi-view 2D keypoints (reprojection +
anatomy + optional object penetration), chains frames with warm starts and
smooths the resulting sequence with a zero-phase low-pass filter.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from ..config import MokapConfig
from ..core.sdf import SdfGrid
from ..exceptions import AllInvisibleError, BehindCameraError, NonFiniteError, TooShortError, ValidationError
from ..hand.axis_angle import alternate_representation
from ..hand.rig import N_JOINTS, N_KEYPOINTS, THETA_SLICE, HandParams, HandRig, forward
from .energies import anat_terms, intp_terms
from .optim import AdamOptimizer, group_scales

logger = logging.getLogger(__name__)


# ============================================================================
# Cameras and observations
# ============================================================================


@dataclass(frozen=True, eq=False)
class CameraView:
    """Pinhole camera: pixel = K (R X + t) after perspective division."""

    K: np.ndarray
    R: np.ndarray
    t: np.ndarray
    width: int
    height: int

    def __post_init__(self) -> None:
        K = np.array(self.K, dtype=np.float64).reshape(3, 3)
        R = np.array(self.R, dtype=np.float64).reshape(3, 3)
        t = np.array(self.t, dtype=np.float64).reshape(3)
        if np.any(np.tril(K, -1) != 0) or K[0, 0] <= 0 or K[1, 1] <= 0 or K[2, 2] <= 0:
            raise ValidationError("Camera intrinsics must be upper-triangular with positive focal entries")
        if not np.allclose(R @ R.T, np.eye(3), atol=1e-6) or np.linalg.det(R) <= 0:
            raise ValidationError("Camera extrinsic rotation must be proper (R R^T = I, det +1)")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)

    @property
    def focal(self) -> float:
        return 0.5 * float(self.K[0, 0] + self.K[1, 1])

    @property
    def center(self) -> np.ndarray:
        """Camera position in world coordinates."""
        return -self.R.T @ self.t

    def projection_matrix(self) -> np.ndarray:
        return self.K @ np.hstack([self.R, self.t[:, None]])


@dataclass(frozen=True, eq=False)
class MultiViewObservation:
    views: tuple[CameraView, ...]
    keypoints: np.ndarray  # (V, 21, 2) pixels
    weights: np.ndarray  # (V, 21)

    def __post_init__(self) -> None:
        n = len(self.views)
        keypoints = np.array(self.keypoints, dtype=np.float64)
        weights = np.array(self.weights, dtype=np.float64)
        if keypoints.shape != (n, N_KEYPOINTS, 2) or weights.shape != (n, N_KEYPOINTS):
            raise ValidationError(f"Observation needs keypoints ({n}, 21, 2) and weights ({n}, 21)")
        if np.any(weights < 0) or not np.all(np.isfinite(keypoints)):
            raise ValidationError("Observation weights must be >= 0 and keypoints finite")
        object.__setattr__(self, "views", tuple(self.views))
        object.__setattr__(self, "keypoints", keypoints)
        object.__setattr__(self, "weights", weights)


@dataclass(frozen=True, eq=False)
class FrameSequence:
    frames: list[MultiViewObservation]
    timestamps: np.ndarray
    object_sdfs: list[SdfGrid | None] | None = None

    def __post_init__(self) -> None:
        timestamps = np.asarray(self.timestamps, dtype=np.float64)
        if len(timestamps) != len(self.frames):
            raise ValidationError("One timestamp per frame is required")
        if np.any(np.diff(timestamps) <= 0):
            raise ValidationError("Frame timestamps must be strictly increasing")
        if self.frames and any(f.views != self.frames[0].views for f in self.frames[1:]):
            raise ValidationError("All frames must share the same camera set")
        object.__setattr__(self, "timestamps", timestamps)


def project_points(view: CameraView, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pixel coordinates and camera-frame depth of world points."""
    cam = np.asarray(points, dtype=np.float64) @ view.R.T + view.t
    h = cam @ view.K.T
    with np.errstate(divide="ignore", invalid="ignore"):
        pixels = h[:, :2] / h[:, 2:3]
    return pixels, cam[:, 2]


def triangulate_point(views: list[CameraView], pixels: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted linear (DLT) triangulation of one point seen in several views."""
    rows = []
    for view, (u, v), w in zip(views, np.asarray(pixels), np.asarray(weights)):
        if w <= 0:
            continue
        P = view.projection_matrix()
        rows.append(w * (u * P[2] - P[0]))
        rows.append(w * (v * P[2] - P[1]))
    if len(rows) < 4:
        raise ValidationError("Triangulation needs the point visible in at least two views")
    _, _, vt = np.linalg.svd(np.asarray(rows))
    X = vt[-1]
    return X[:3] / X[3]


# ============================================================================
# Reprojection energy
# ============================================================================


def repj_terms(joints: np.ndarray, obs: MultiViewObservation) -> tuple[float, np.ndarray, np.ndarray]:
    """Weighted mean squared pixel error.

    Returns:
        (value px^2, gradient w.r.t. joints (21, 3), per-view per-joint pixel residuals)
    """
    total = float(obs.weights.sum())
    if total <= 0:
        raise AllInvisibleError()

    value = 0.0
    grad = np.zeros_like(joints)
    residuals = np.zeros(obs.weights.shape)
    for v, view in enumerate(obs.views):
        w = obs.weights[v]
        cam = joints @ view.R.T + view.t
        bad = np.nonzero((w > 0) & (cam[:, 2] <= 0))[0]
        if len(bad):
            raise BehindCameraError(int(bad[0]), v)
        h = cam @ view.K.T
        z = h[:, 2:3]
        with np.errstate(divide="ignore", invalid="ignore"):
            pixels = h[:, :2] / z
        r = pixels - obs.keypoints[v]
        sq = np.einsum("ij,ij->i", r, r)
        residuals[v] = np.sqrt(np.where(np.isfinite(sq), sq, 0.0))
        visible = w > 0
        value += float(np.sum(w[visible] * sq[visible]))

        # d pixel / d cam = (K[:2] z - h[:2] K[2]) / z^2
        dpix = (view.K[None, :2, :] * z[:, :, None] - h[:, :2, None] * view.K[None, 2:3, :]) / (z[:, :, None] ** 2)
        g = 2.0 * np.einsum("i,ia,iab->ib", w[visible], r[visible], dpix[visible]) @ view.R
        grad[visible] += g
    return value / total, grad / total, residuals


def energy_repj(params: HandParams, rig: HandRig, obs: MultiViewObservation) -> float:
    state = forward(rig, params, jacobians=False)
    return repj_terms(state.joints, obs)[0]


# ============================================================================
# Fitting
# ============================================================================


@dataclass(frozen=True, eq=False)
class FrameFit:
    params: HandParams
    residuals: np.ndarray  # (V, 21) pixels
    energy: float


def fit_frame(
    rig: HandRig,
    obs: MultiViewObservation,
    object_sdf: SdfGrid | None,
    init: HandParams,
    config: MokapConfig | None = None,
) -> FrameFit:
    """Fit one frame. Pixel terms are divided by the mean focal length squared."""
    config = config or MokapConfig()
    weights = config.weights
    focal_sq = float(np.mean([view.focal for view in obs.views])) ** 2
    optimizer = AdamOptimizer(config.adam, config.iterations, group_scales(config.adam))

    def objective(x: np.ndarray) -> tuple[float, np.ndarray]:
        params = HandParams.from_flat(x)
        state = forward(rig, params)
        e_repj, g_joint, _ = repj_terms(state.joints, obs)
        e_anat, g_theta = anat_terms(params.theta, rig)
        total = weights.repj * e_repj / focal_sq + weights.anat * e_anat
        grad = (weights.repj / focal_sq) * np.einsum("ia,iap->p", g_joint, state.joints_jac)
        grad[THETA_SLICE] += weights.anat * g_theta.ravel()
        if object_sdf is not None:
            e_intp, g_vertex = intp_terms(state.vertices, object_sdf)
            total += weights.intp * e_intp
            if e_intp > 0:
                grad += weights.intp * np.einsum("na,nap->p", g_vertex, state.vertices_jac)
        return total, grad

    x = init.flat()
    energy = np.nan
    for iteration in range(config.iterations):
        energy, grad = objective(x)
        if not (np.isfinite(energy) and np.all(np.isfinite(grad))):
            raise NonFiniteError(iteration)
        x = HandParams.from_flat(optimizer.step(x, grad, iteration)).flat()

    params = HandParams.from_flat(x)
    _, _, residuals = repj_terms(forward(rig, params, jacobians=False).joints, obs)
    logger.debug(f"fit_frame: objective {energy:.3e}, mean residual {residuals[obs.weights > 0].mean():.2f} px")
    return FrameFit(params, residuals, float(energy))


def _unwrap_theta(thetas: np.ndarray) -> np.ndarray:
    """Choose per frame and joint the axis-angle representative closest to the previous frame."""
    out = thetas.copy()
    for k in range(1, len(out)):
        alt = alternate_representation(out[k])
        keep = np.linalg.norm(out[k] - out[k - 1], axis=1)
        flip = np.linalg.norm(alt - out[k - 1], axis=1)
        out[k] = np.where((flip < keep)[:, None], alt, out[k])
    return out


def _lowpass(x: np.ndarray, cutoff: float) -> np.ndarray:
    """Zero-phase second-order Butterworth along axis 0, mean preserved, flat channels untouched."""
    b, a = signal.butter(2, cutoff)
    y = signal.filtfilt(b, a, x, axis=0, method="gust")
    y += x.mean(axis=0) - y.mean(axis=0)
    flat = np.ptp(x, axis=0) == 0
    y[:, flat] = x[:, flat]
    return y


def smooth_sequence(fits: list[HandParams], cutoff: float = 0.1) -> list[HandParams]:
    """Low-pass wrist and pose over time; shape becomes the sequence mean."""
    if len(fits) < 3:
        raise TooShortError(len(fits))
    thetas = _unwrap_theta(np.stack([p.theta for p in fits]))
    wrists = np.stack([p.wrist for p in fits])
    beta = np.mean([p.beta for p in fits], axis=0)

    theta_s = _lowpass(thetas.reshape(len(fits), -1), cutoff).reshape(len(fits), N_JOINTS, 3)
    wrist_s = _lowpass(wrists, cutoff)
    return [HandParams(theta_s[k], beta, wrist_s[k]) for k in range(len(fits))]


@dataclass
class SequenceFit:
    raw: list[HandParams] = field(default_factory=list)
    smoothed: list[HandParams] = field(default_factory=list)
    residuals: list[np.ndarray] = field(default_factory=list)


def initial_guess(obs: MultiViewObservation) -> HandParams:
    """Open hand at the triangulated wrist."""
    visible = obs.weights[:, 0] > 0
    if np.count_nonzero(visible) < 2:
        logger.warning("⚠️ Wrist seen in fewer than two views, starting from the origin")
        return HandParams.zeros()
    wrist = triangulate_point(list(obs.views), obs.keypoints[:, 0], obs.weights[:, 0])
    return HandParams.zeros().with_wrist(wrist)


def fit_sequence(rig: HandRig, sequence: FrameSequence, config: MokapConfig | None = None) -> SequenceFit:
    """Fit frames in order (each warm-started from the previous) then smooth."""
    config = config or MokapConfig()
    result = SequenceFit()
    previous: HandParams | None = None
    for k, obs in enumerate(sequence.frames):
        init = previous if previous is not None else initial_guess(obs)
        sdf = sequence.object_sdfs[k] if sequence.object_sdfs else None
        fit = fit_frame(rig, obs, sdf, init, config)
        result.raw.append(fit.params)
        result.residuals.append(fit.residuals)
        previous = fit.params
        logger.info(f"Frame {k}: mean residual {fit.residuals[obs.weights > 0].mean():.2f} px")
    result.smoothed = smooth_sequence(result.raw, config.cutoff) if len(result.raw) >= 3 else list(result.raw)
    return result
