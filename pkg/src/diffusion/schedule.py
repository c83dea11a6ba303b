"""Variance-preserving cosine noise schedule."""

import numpy as np

from ..errors import ArgumentError


class NoiseSchedule:
    """alpha(t) = cos(pi t / 2), sigma(t) = sin(pi t / 2)."""

    @staticmethod
    def alpha(t: float) -> float:
        if t == 1.0:
            return 0.0
        return float(np.cos(0.5 * np.pi * t))

    @staticmethod
    def sigma(t: float) -> float:
        if t == 1.0:
            return 1.0
        return float(np.sin(0.5 * np.pi * t))


schedule = NoiseSchedule()


def add_noise(x: np.ndarray, t: float, eps: np.ndarray) -> np.ndarray:
    """z_t = alpha(t) x + sigma(t) eps."""
    x = np.asarray(x, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if x.shape != eps.shape:
        raise ArgumentError(f"Latent shape {x.shape} does not match noise shape {eps.shape}")
    if not 0.0 <= t <= 1.0:
        raise ArgumentError(f"Noise level must lie in [0, 1], got {t}")
    if t == 0.0:
        return x.copy()
    if t == 1.0:
        return eps.copy()
    return schedule.alpha(t) * x + schedule.sigma(t) * eps
