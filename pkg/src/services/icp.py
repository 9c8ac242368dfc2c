"""
Rigid point-to-point ICP with k-d tree correspondences and Kabsch updates.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class IcpResult:
    rotation: np.ndarray
    translation: np.ndarray
    rms: float
    iterations: int
    converged: bool

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points) @ self.rotation.T + self.translation


def kabsch(source: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares rotation and translation mapping source onto target."""
    mu_s = source.mean(axis=0)
    mu_t = target.mean(axis=0)
    h = (source - mu_s).T @ (target - mu_t)
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    fix = np.diag([1.0, 1.0, d if d != 0 else 1.0])
    rotation = vt.T @ fix @ u.T
    return rotation, mu_t - rotation @ mu_s


def icp_align(
    source: np.ndarray,
    target: np.ndarray,
    max_iterations: int = 50,
    tolerance: float = 1e-7,
) -> IcpResult:
    """Align source points to target points.

    Starts from the identity rotation with centroids aligned. Stops when the
    RMS residual changes by less than ``tolerance`` (meters).
    """
    source = np.asarray(source, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    tree = cKDTree(target)

    rotation = np.eye(3)
    translation = target.mean(axis=0) - source.mean(axis=0)
    previous = np.inf
    converged = False
    iterations = 0

    for iterations in range(1, max_iterations + 1):
        moved = source @ rotation.T + translation
        dist, idx = tree.query(moved)
        rms = float(np.sqrt(np.mean(dist**2)))
        if abs(previous - rms) < tolerance:
            converged = True
            break
        previous = rms
        rotation, translation = kabsch(source, target[idx])

    dist, _ = tree.query(source @ rotation.T + translation)
    rms = float(np.sqrt(np.mean(dist**2)))
    logger.debug(f"ICP: rms {rms:.3e} m after {iterations} iterations (converged={converged})")
    return IcpResult(rotation, translation, rms, iterations, converged)
