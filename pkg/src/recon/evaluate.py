from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from ..errors import InsufficientDataError
from ..models.camera import PosedImage
from ..models.field import VoxelField
from ..models.parameters import RenderParams
from ..render.volume import render_image
from ..utils.metrics import psnr, ssim


@dataclass
class ViewMetrics:
    name: str
    psnr: float
    ssim: float


@dataclass
class EvalMetrics:
    """Held-out image quality, per view and averaged."""

    views: list[ViewMetrics] = field(default_factory=list)

    @property
    def mean_psnr(self) -> float:
        return float(np.mean([v.psnr for v in self.views]))

    @property
    def mean_ssim(self) -> float:
        return float(np.mean([v.ssim for v in self.views]))

    def to_dict(self) -> dict:
        return {
            "views": [asdict(v) for v in self.views],
            "mean_psnr": self.mean_psnr,
            "mean_ssim": self.mean_ssim,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalMetrics":
        return cls(views=[ViewMetrics(**v) for v in data.get("views", [])])


def evaluate(voxel_field: VoxelField, heldout: Sequence[PosedImage], params: RenderParams) -> EvalMetrics:
    """Render every held-out pose without jitter and score it against its image."""
    if len(heldout) == 0:
        raise InsufficientDataError("Evaluation needs at least one held-out view")
    deterministic = replace(params, jitter=False)
    metrics = EvalMetrics()
    for index, view in enumerate(heldout):
        rendered = render_image(voxel_field, view.pose, deterministic, seed=None).rgb
        metrics.views.append(
            ViewMetrics(name=view.name or f"view_{index:03d}", psnr=psnr(rendered, view.image), ssim=ssim(rendered, view.image))
        )
    return metrics
