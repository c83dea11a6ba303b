"""Test-time prior that knows the ground-truth scene."""

import logging
from typing import Literal, Optional

import numpy as np
from scipy.ndimage import gaussian_filter

from config import ALPHA_CLAMP, CONDITIONING_DROPOUT
from ..errors import ArgumentError
from ..models.camera import CameraPose
from ..models.scene import SyntheticScene
from ..scenes.procedural import render_gt
from .base import ConditioningBundle
from .schedule import schedule

logger = logging.getLogger(__name__)

GRAY = 0.5


class OracleDenoiser:
    """Predicts the noise that explains ``z_t`` given a ground-truth render.

    The target is the scene rendered at the bundle's target pose, optionally
    blurred and corrupted with fresh Gaussian noise on every call to mimic an
    imperfect, stochastic prior.
    """

    def __init__(
        self,
        scene: SyntheticScene,
        blur_sigma: float = 0.0,
        noise_floor: float = 0.0,
        *,
        uncond_target: Literal["gray", "truth"] = "gray",
        dropout_prob: float = CONDITIONING_DROPOUT,
        stochastic_dropout: bool = False,
        seed: int = 0,
    ) -> None:
        if blur_sigma < 0 or noise_floor < 0:
            raise ArgumentError("Blur and noise floor must be >= 0")
        if uncond_target not in ("gray", "truth"):
            raise ArgumentError(f"Unknown unconditional target '{uncond_target}'")
        self.scene = scene
        self.blur_sigma = blur_sigma
        self.noise_floor = noise_floor
        self.uncond_target = uncond_target
        self.dropout_prob = dropout_prob
        self.stochastic_dropout = stochastic_dropout
        self.rng = np.random.default_rng(seed)
        self._cache_key: Optional[bytes] = None
        self._cache_value: Optional[np.ndarray] = None
        self._last_target: Optional[np.ndarray] = None

    def clean_target(self, pose: CameraPose, shape: tuple[int, ...]) -> np.ndarray:
        """Ground-truth render at the latent resolution, blurred if configured."""
        height, width = shape[:2]
        latent_pose = pose if pose.image_size == (width, height) else pose.resized(width, height)
        key = np.concatenate(
            [latent_pose.rotation.ravel(), latent_pose.position, [latent_pose.focal_px], latent_pose.principal_point]
        ).tobytes() + bytes(str((width, height)), "ascii")
        if key != self._cache_key:
            target = render_gt(self.scene, latent_pose)
            if self.blur_sigma > 0:
                target = gaussian_filter(target, sigma=(self.blur_sigma, self.blur_sigma, 0), mode="nearest")
            self._cache_key, self._cache_value = key, target
        return self._cache_value

    def _target(self, z_t: np.ndarray, cond: Optional[ConditioningBundle]) -> np.ndarray:
        if cond is None:
            # "truth" mirrors the latest conditional target so guidance is neutral.
            if self.uncond_target == "gray" or self._last_target is None or self._last_target.shape != z_t.shape:
                return np.full(z_t.shape, GRAY)
            return self._last_target
        if cond.target_pose is None:
            raise ArgumentError("Oracle prior needs the target pose in the conditioning bundle")
        if self.stochastic_dropout and self.rng.uniform() < self.dropout_prob:
            return self._target(z_t, None)
        target = self.clean_target(cond.target_pose, z_t.shape)
        if self.noise_floor > 0:
            target = target + self.noise_floor * self.rng.standard_normal(target.shape)
        self._last_target = target
        return target

    def __call__(self, z_t: np.ndarray, t: float, cond: Optional[ConditioningBundle]) -> np.ndarray:
        target = self._target(z_t, cond)
        return (z_t - schedule.alpha(t) * target) / max(schedule.sigma(t), ALPHA_CLAMP)


def make_oracle_denoiser(
    scene: SyntheticScene,
    blur_sigma: float = 0.0,
    noise_floor: float = 0.0,
    **kwargs,
) -> OracleDenoiser:
    return OracleDenoiser(scene, blur_sigma, noise_floor, **kwargs)
