"""Deterministic DDIM sampling with classifier-free guidance."""

import logging
from typing import Optional

import numpy as np

from config import ALPHA_CLAMP, CFG_SCALE, DDIM_STEPS, T_FLOOR
from ..errors import ArgumentError
from .base import ConditioningBundle, Denoiser
from .schedule import add_noise, schedule

logger = logging.getLogger(__name__)


def cfg_combine(eps_uncond: np.ndarray, eps_cond: np.ndarray, scale: float) -> np.ndarray:
    if np.shape(eps_uncond) != np.shape(eps_cond):
        raise ArgumentError(f"Guidance shapes differ: {np.shape(eps_uncond)} vs {np.shape(eps_cond)}")
    return eps_uncond + scale * (eps_cond - eps_uncond)


def predict_x0(z_t: np.ndarray, t: float, eps_hat: np.ndarray) -> np.ndarray:
    return (z_t - schedule.sigma(t) * eps_hat) / max(schedule.alpha(t), ALPHA_CLAMP)


def ddim_step(z_t: np.ndarray, t: float, t_next: float, eps_hat: np.ndarray) -> np.ndarray:
    """One deterministic (eta = 0) step from t to t_next < t."""
    if not 0.0 <= t_next < t <= 1.0:
        raise ArgumentError(f"DDIM step needs 0 <= t_next < t <= 1, got t={t}, t_next={t_next}")
    x0 = predict_x0(z_t, t, eps_hat)
    if t_next == 0.0:
        return x0
    return schedule.alpha(t_next) * x0 + schedule.sigma(t_next) * eps_hat


def timestep_ladder(t: float, k: int, floor: float = T_FLOOR) -> np.ndarray:
    """k noise levels uniformly spaced from t down to (exclusive) the floor.

    The top rung is capped at 1 - floor: at t = 1 the latent carries no
    signal and the clean estimate is undefined.
    """
    if k < 1:
        raise ArgumentError(f"DDIM needs k >= 1, got {k}")
    if not 0.0 < t <= 1.0:
        raise ArgumentError(f"Sampling start must lie in (0, 1], got {t}")
    start = min(t, 1.0 - floor)
    if start <= floor:
        return np.array([start])
    return np.linspace(start, floor, k + 1)[:-1]


def guided_eps(
    denoiser: Denoiser,
    z: np.ndarray,
    t: float,
    cond: Optional[ConditioningBundle],
    cfg_scale: float,
) -> np.ndarray:
    eps_cond = denoiser(z, t, cond)
    if cfg_scale == 1.0 or cond is None:
        return eps_cond
    eps_uncond = denoiser(z, t, None)
    return cfg_combine(eps_uncond, eps_cond, cfg_scale)


def ddim_sample(
    denoiser: Denoiser,
    cond: Optional[ConditioningBundle],
    z_t: np.ndarray,
    t: float,
    k: int = DDIM_STEPS,
    cfg_scale: float = CFG_SCALE,
) -> np.ndarray:
    """Run k guided DDIM rungs from noise level t and return the clean estimate."""
    ladder = timestep_ladder(t, k)
    z = np.asarray(z_t, dtype=np.float64)
    for i, level in enumerate(ladder):
        level_next = ladder[i + 1] if i + 1 < len(ladder) else 0.0
        eps_hat = guided_eps(denoiser, z, float(level), cond, cfg_scale)
        z = ddim_step(z, float(level), float(level_next), eps_hat)
    return z


def diffusion_loss(
    denoiser: Denoiser,
    cond: Optional[ConditioningBundle],
    x: np.ndarray,
    rng: np.random.Generator,
) -> float:
    """Simplified epsilon-matching loss at a random noise level (diagnostic only)."""
    t = 1.0 - rng.uniform(0.0, 1.0)
    eps = rng.standard_normal(np.shape(x))
    eps_hat = denoiser(add_noise(x, t, eps), t, cond)
    return float(np.mean((eps - eps_hat) ** 2))
