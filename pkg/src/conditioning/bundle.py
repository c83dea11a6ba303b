from typing import Sequence

from ..diffusion.base import ConditioningBundle
from ..geometry.posedist import nearest_views
from ..models.camera import CameraPose, PosedImage
from ..models.parameters import ConditioningParams
from .encoder import FeatureImage, encode_input, input_summary
from .epipolar import epipolar_render


class ConditioningBuilder:
    """Encodes the observed views once and builds bundles for novel target poses."""

    def __init__(
        self,
        observations: Sequence[PosedImage],
        n_views: int,
        params: ConditioningParams = ConditioningParams(),
    ) -> None:
        self.observations = list(observations)
        self.n_views = min(n_views, len(self.observations))
        self.params = params
        self.features: list[FeatureImage] = [encode_input(obs, params.n_features) for obs in self.observations]
        self.summaries = [input_summary(obs) for obs in self.observations]

    def bundle(self, latent_pose: CameraPose, full_pose: CameraPose) -> ConditioningBundle:
        """Conditioning for ``latent_pose`` from the views nearest ``full_pose``."""
        chosen = nearest_views(full_pose, self.observations, self.n_views)
        rendered = epipolar_render(
            [self.observations[i] for i in chosen],
            [self.features[i] for i in chosen],
            latent_pose,
            self.params,
        )
        return ConditioningBundle(
            feature_image=rendered.data,
            input_summaries=[self.summaries[i] for i in chosen],
            target_pose=latent_pose,
        )
