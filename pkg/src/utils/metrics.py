"""Image quality metrics for held-out evaluation."""

import numpy as np
from scipy.ndimage import gaussian_filter

from config import PSNR_CAP, SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW
from ..errors import ArgumentError


def psnr(image: np.ndarray, reference: np.ndarray, cap: float = PSNR_CAP) -> float:
    """-10 log10(MSE) for [0, 1] images; identical images report ``cap``."""
    if np.shape(image) != np.shape(reference):
        raise ArgumentError(f"Shape mismatch: {np.shape(image)} vs {np.shape(reference)}")
    mse = float(np.mean((np.asarray(image, dtype=np.float64) - reference) ** 2))
    if mse == 0.0:
        return cap
    return min(cap, -10.0 * np.log10(mse))


def ssim(image: np.ndarray, reference: np.ndarray) -> float:
    """Gaussian-window SSIM (11 x 11, sigma 1.5), averaged over channels.

    Statistics are taken over windows fully inside the image.
    """
    if np.shape(image) != np.shape(reference):
        raise ArgumentError(f"Shape mismatch: {np.shape(image)} vs {np.shape(reference)}")
    x = np.asarray(image, dtype=np.float64)
    y = np.asarray(reference, dtype=np.float64)
    if x.ndim == 2:
        x, y = x[..., None], y[..., None]

    radius = SSIM_WINDOW // 2
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2

    def blur(a: np.ndarray) -> np.ndarray:
        return gaussian_filter(a, sigma=SSIM_SIGMA, truncate=radius / SSIM_SIGMA, mode="reflect")

    scores = []
    for c in range(x.shape[-1]):
        a, b = x[..., c], y[..., c]
        mu_a, mu_b = blur(a), blur(b)
        var_a = blur(a * a) - mu_a**2
        var_b = blur(b * b) - mu_b**2
        cov = blur(a * b) - mu_a * mu_b
        num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
        den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
        ssim_map = num / den
        valid = ssim_map[radius:-radius, radius:-radius] if min(a.shape) > 2 * radius else ssim_map
        scores.append(float(valid.mean()))
    return float(np.mean(scores))
