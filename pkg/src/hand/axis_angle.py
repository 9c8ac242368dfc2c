"""
Axis-angle helpers (row-wise over ``(n, 3)`` arrays).
"""

import numpy as np

_SMALL = 1e-6


def skew(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    out = np.zeros(w.shape[:-1] + (3, 3))
    out[..., 0, 1] = -w[..., 2]
    out[..., 0, 2] = w[..., 1]
    out[..., 1, 0] = w[..., 2]
    out[..., 1, 2] = -w[..., 0]
    out[..., 2, 0] = -w[..., 1]
    out[..., 2, 1] = w[..., 0]
    return out


def _coefficients(phi: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """sin(phi)/phi, (1-cos phi)/phi^2, (phi - sin phi)/phi^3 with series near 0."""
    small = phi < _SMALL
    safe = np.where(small, 1.0, phi)
    phi2 = phi * phi
    a = np.where(small, 1.0 - phi2 / 6.0, np.sin(safe) / safe)
    b = np.where(small, 0.5 - phi2 / 24.0, (1.0 - np.cos(safe)) / safe**2)
    c = np.where(small, 1.0 / 6.0 - phi2 / 120.0, (safe - np.sin(safe)) / safe**3)
    return a, b, c


def rodrigues(theta: np.ndarray) -> np.ndarray:
    """Rotation matrices of axis-angle vectors, shape (n, 3, 3)."""
    theta = np.asarray(theta, dtype=np.float64).reshape(-1, 3)
    phi = np.linalg.norm(theta, axis=1)
    a, b, _ = _coefficients(phi)
    k = skew(theta)
    return np.eye(3) + a[:, None, None] * k + b[:, None, None] * (k @ k)


def left_jacobian(theta: np.ndarray) -> np.ndarray:
    """Left Jacobian of SO(3): dR/dtheta_c = [J_l e_c]x R."""
    theta = np.asarray(theta, dtype=np.float64).reshape(-1, 3)
    phi = np.linalg.norm(theta, axis=1)
    _, b, c = _coefficients(phi)
    k = skew(theta)
    return np.eye(3) + b[:, None, None] * k + c[:, None, None] * (k @ k)


def canonicalize_axis_angle(theta: np.ndarray) -> np.ndarray:
    """Map every rotation to the representative with angle in [0, pi].

    At exactly pi the axis keeps a non-negative first nonzero component.
    """
    theta = np.array(theta, dtype=np.float64).reshape(-1, 3)
    phi = np.linalg.norm(theta, axis=1)
    out = theta.copy()
    for i in np.nonzero(phi > 0)[0]:
        axis = theta[i] / phi[i]
        angle = np.mod(phi[i], 2 * np.pi)
        if angle > np.pi:
            angle -= 2 * np.pi
        if angle < 0:
            axis, angle = -axis, -angle
        if abs(angle - np.pi) < 1e-12:
            nonzero = np.nonzero(np.abs(axis) > 1e-12)[0]
            if len(nonzero) and axis[nonzero[0]] < 0:
                axis = -axis
        out[i] = axis * angle
    return out


def alternate_representation(theta: np.ndarray) -> np.ndarray:
    """Same rotation expressed with angle phi - 2*pi (row-wise, zero rows kept)."""
    theta = np.asarray(theta, dtype=np.float64).reshape(-1, 3)
    phi = np.linalg.norm(theta, axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        alt = np.where(phi > 0, theta * (1.0 - 2 * np.pi / phi), theta)
    return alt
