"""Fixed analytic image encoder and per-input summaries."""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.ndimage import gaussian_gradient_magnitude, gaussian_laplace, sobel, uniform_filter

from config import COND_FEATURES, SUMMARY_SIZE
from ..errors import ArgumentError
from ..models.camera import PosedImage
from ..utils.imaging import luminance

GRADIENT_SCALES = (1.0, 2.0, 4.0)
WINDOWS = (3, 7)
N_BASE_FEATURES = 16
HISTOGRAM_BINS = SUMMARY_SIZE - 6
HISTOGRAM_RANGE = (0.0, 0.5)


@dataclass(eq=False)
class FeatureImage:
    """H x W x C feature map; the first three channels are RGB."""

    data: np.ndarray
    valid: Optional[np.ndarray] = None

    @property
    def rgb(self) -> np.ndarray:
        return self.data[..., :3]

    @property
    def features(self) -> np.ndarray:
        return self.data[..., 3:]

    @property
    def n_channels(self) -> int:
        return self.data.shape[-1]


def _feature_stack(image: np.ndarray, n_features: int) -> list[np.ndarray]:
    lum = luminance(image)
    channels: list[np.ndarray] = []
    channels += [gaussian_gradient_magnitude(lum, sigma=s, mode="nearest") for s in GRADIENT_SCALES]
    for size in WINDOWS:
        channels += [uniform_filter(image[..., c], size=size, mode="nearest") for c in range(3)]
    for size in WINDOWS:
        mean = uniform_filter(lum, size=size, mode="nearest")
        channels.append(np.maximum(uniform_filter((lum - mean) ** 2, size=size, mode="nearest"), 0.0))
    channels.append(sobel(lum, axis=1, mode="nearest"))
    channels.append(sobel(lum, axis=0, mode="nearest"))
    # truncated LoG taps are not zero-sum
    centered = lum - lum.mean()
    channels += [gaussian_laplace(centered, sigma=s, mode="nearest") for s in GRADIENT_SCALES]

    scale = 2.0 * GRADIENT_SCALES[-1]
    while len(channels) < n_features:
        channels.append(gaussian_gradient_magnitude(lum, sigma=scale, mode="nearest"))
        scale *= 2.0
    return channels[:n_features]


# Channel positions (after RGB) of the derivative-based features.
GRADIENT_CHANNELS = (0, 1, 2, 9, 10, 11, 12, 13, 14, 15)


def encode_input(image: PosedImage, n_features: int = COND_FEATURES) -> FeatureImage:
    """RGB plus ``n_features`` deterministic multiscale channels at full resolution."""
    if n_features < 1:
        raise ArgumentError(f"Need at least one feature channel, got {n_features}")
    rgb = np.asarray(image.image, dtype=np.float64)
    stack = _feature_stack(rgb, n_features)
    return FeatureImage(data=np.concatenate([rgb, np.stack(stack, axis=-1)], axis=-1))


def input_summary(image: PosedImage) -> np.ndarray:
    """16-value image statistic: mean color, color variance, gradient-energy histogram."""
    rgb = np.asarray(image.image, dtype=np.float64).reshape(-1, 3)
    magnitude = gaussian_gradient_magnitude(luminance(image.image), sigma=1.0, mode="nearest")
    clipped = np.clip(magnitude.reshape(-1), HISTOGRAM_RANGE[0], HISTOGRAM_RANGE[1])
    hist, _ = np.histogram(clipped, bins=HISTOGRAM_BINS, range=HISTOGRAM_RANGE)
    return np.concatenate([rgb.mean(axis=0), rgb.var(axis=0), hist / max(1, clipped.size)])
