"""Annealing schedules for the noise range and the sample-loss weight."""

import numpy as np

from config import T_FLOOR
from ..diffusion.schedule import schedule
from ..errors import ArgumentError, BoundsError
from ..models.parameters import Schedules


def _ramp(start: float, end: float, iteration: int, total: int) -> float:
    if iteration == total:
        return float(end)
    return float(start + (end - start) * iteration / total)


def schedule_at(sched: Schedules, iteration: int) -> tuple[float, float]:
    """(t_min, lambda_sample) at ``iteration``; both ramps are linear and hit their ends exactly."""
    if not 0 <= iteration <= sched.total_iters:
        raise BoundsError(f"Iteration {iteration} outside [0, {sched.total_iters}]")
    if sched.anneal_t_min:
        t_min = _ramp(sched.t_min_start, sched.t_min_end, iteration, sched.total_iters)
    else:
        t_min = float(sched.fixed_t_min)
    lambda_sample = _ramp(sched.lambda_sample_start, sched.lambda_sample_end, iteration, sched.total_iters)
    return min(t_min, sched.t_max), lambda_sample


def weighting(t: float, sched: Schedules) -> float:
    """Noise-level weight w(t)."""
    if sched.weighting == "sigma2":
        return sched.weighting_scale * schedule.sigma(t) ** 2
    if sched.weighting == "constant":
        return float(sched.weighting_scale)
    raise ArgumentError(f"Unknown weighting '{sched.weighting}'")


def sample_noise_level(t_min: float, t_max: float, rng: np.random.Generator) -> float:
    """Draw t ~ Uniform[t_min, t_max], kept above the sampler floor."""
    return max(float(rng.uniform(t_min, t_max)), T_FLOOR)
