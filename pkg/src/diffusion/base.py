"""Denoiser interface and conditioning bundle."""

from dataclasses import dataclass, field
from typing import Optional, Protocol

import numpy as np

from ..errors import ArgumentError
from ..models.camera import CameraPose


@dataclass(eq=False)
class ConditioningBundle:
    """Everything a conditional denoiser sees besides the noisy latent."""

    feature_image: np.ndarray
    input_summaries: list[np.ndarray] = field(default_factory=list)
    target_pose: Optional[CameraPose] = None

    def check_latent(self, latent_shape: tuple[int, ...]) -> None:
        if self.feature_image.shape[:2] != latent_shape[:2]:
            raise ArgumentError(
                f"Feature resolution {self.feature_image.shape[:2]} does not match latent {latent_shape[:2]}"
            )


class Denoiser(Protocol):
    """Epsilon-prediction contract every prior implements.

    ``cond=None`` requests the unconditional prediction. The output has the
    shape of ``z_t``.
    """

    def __call__(self, z_t: np.ndarray, t: float, cond: Optional[ConditioningBundle]) -> np.ndarray:
        ...
