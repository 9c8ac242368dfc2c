"""
Adam with cosine step decay, shared by pose refinement and multi-view fitting.
"""

import numpy as np

from ..config import AdamConfig
from ..hand.rig import BETA_SLICE, N_PARAMS, WRIST_SLICE


def group_scales(config: AdamConfig) -> np.ndarray:
    """Per-variable step multipliers over the flat hand layout."""
    scales = np.ones(N_PARAMS)
    scales[BETA_SLICE] = config.beta_lr_scale
    scales[WRIST_SLICE] = config.wrist_lr_scale
    return scales


class AdamOptimizer:
    """First/second-moment descent with bias correction.

    The step size follows a cosine from ``lr`` at iteration 0 to ``lr_final``
    at the last iteration.
    """

    def __init__(self, config: AdamConfig, iterations: int, scales: np.ndarray | None = None):
        self.config = config
        self.iterations = iterations
        self.scales = np.ones(N_PARAMS) if scales is None else np.asarray(scales, dtype=np.float64)
        self.m = np.zeros_like(self.scales)
        self.v = np.zeros_like(self.scales)
        self.t = 0

    def learning_rate(self, iteration: int) -> float:
        c = self.config
        if self.iterations <= 1:
            return c.lr
        progress = min(iteration / (self.iterations - 1), 1.0)
        return c.lr_final + 0.5 * (c.lr - c.lr_final) * (1.0 + np.cos(np.pi * progress))

    def step(self, x: np.ndarray, grad: np.ndarray, iteration: int) -> np.ndarray:
        c = self.config
        self.t += 1
        self.m = c.beta1 * self.m + (1.0 - c.beta1) * grad
        self.v = c.beta2 * self.v + (1.0 - c.beta2) * grad * grad
        m_hat = self.m / (1.0 - c.beta1**self.t)
        v_hat = self.v / (1.0 - c.beta2**self.t)
        return x - self.learning_rate(iteration) * self.scales * m_hat / (np.sqrt(v_hat) + c.eps)
