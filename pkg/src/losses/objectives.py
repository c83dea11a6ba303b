"""Scalar objectives with gradients with respect to the rendered image."""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from config import CHARBONNIER_EPS
from ..diffusion.base import ConditioningBundle, Denoiser
from ..diffusion.sampler import guided_eps
from ..diffusion.schedule import add_noise
from ..errors import ArgumentError, BoundsError, InsufficientDataError
from ..models.camera import PosedImage
from ..models.field import VoxelField
from ..models.parameters import RenderParams, Schedules
from ..render.volume import RenderOutput, render_backward, render_image
from ..utils.imaging import downsample_area, downsample_area_adjoint
from .schedules import weighting

PERCEPTUAL_SCALES = 3
GRADIENT_EPS = 1e-4


@dataclass
class LossResult:
    value: float
    grad: np.ndarray


@dataclass
class ReconLossResult:
    value: float
    view_index: int
    output: RenderOutput


def _check_shapes(a: np.ndarray, b: np.ndarray) -> None:
    if np.shape(a) != np.shape(b):
        raise ArgumentError(f"Shape mismatch: {np.shape(a)} vs {np.shape(b)}")


def charbonnier_with_grad(a: np.ndarray, b: np.ndarray, eps: float = CHARBONNIER_EPS) -> LossResult:
    _check_shapes(a, b)
    diff = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    root = np.sqrt(diff**2 + eps**2)
    return LossResult(value=float(np.mean(root - eps)), grad=diff / root / diff.size)


def charbonnier(a: np.ndarray, b: np.ndarray, eps: float = CHARBONNIER_EPS) -> float:
    """Mean of sqrt((a - b)^2 + eps^2) - eps."""
    return charbonnier_with_grad(a, b, eps).value


def recon_loss(
    voxel_field: VoxelField,
    observations: Sequence[PosedImage],
    params: RenderParams,
    rng: np.random.Generator,
    *,
    view_index: Optional[int] = None,
    backward: bool = True,
) -> ReconLossResult:
    """Charbonnier loss of one randomly chosen observed view, rendered in full.

    With ``backward`` the gradient is accumulated into the field's buffers.
    """
    if len(observations) == 0:
        raise InsufficientDataError("Reconstruction loss needs at least one observation")
    index = int(rng.integers(len(observations))) if view_index is None else view_index
    observed = observations[index]
    seed = int(rng.integers(2**32)) if params.jitter else None
    output = render_image(voxel_field, observed.pose, params, seed=seed)
    loss = charbonnier_with_grad(output.rgb, observed.image)
    if backward:
        render_backward(voxel_field, output.records, loss.grad)
    return ReconLossResult(value=loss.value, view_index=index, output=output)


def _central_diff(a: np.ndarray, axis: int) -> np.ndarray:
    """a[j + 1] - a[j - 1] along ``axis``; zero on the first and last index."""
    a = np.moveaxis(a, axis, 0)
    out = np.zeros_like(a)
    out[1:-1] = a[2:] - a[:-2]
    return np.moveaxis(out, 0, axis)


def _central_diff_adjoint(g: np.ndarray, axis: int) -> np.ndarray:
    g = np.moveaxis(g, axis, 0)
    out = np.zeros_like(g)
    out[2:] += g[1:-1]
    out[:-2] -= g[1:-1]
    return np.moveaxis(out, 0, axis)


def _gradient_magnitude(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    gy = _central_diff(a, 0)
    gx = _central_diff(a, 1)
    root = np.sqrt(gx**2 + gy**2 + GRADIENT_EPS**2)
    return root - GRADIENT_EPS, gx / root, gy / root


def _pyramid(a: np.ndarray, levels: int) -> list[np.ndarray]:
    out = [a]
    for _ in range(levels - 1):
        prev = out[-1]
        h, w = prev.shape[0] // 2, prev.shape[1] // 2
        if h < 2 or w < 2:
            break
        out.append(downsample_area(prev[: 2 * h, : 2 * w], h, w))
    return out


def _pyramid_adjoint(grads: list[np.ndarray], shape: tuple[int, ...]) -> np.ndarray:
    # Walk coarse to fine, spreading each level's gradient into the one above.
    total = grads[-1]
    for level in range(len(grads) - 2, -1, -1):
        fine = grads[level]
        h, w = total.shape[:2]
        spread = np.zeros_like(fine)
        spread[: 2 * h, : 2 * w] = downsample_area_adjoint(total, 2 * h, 2 * w)
        total = fine + spread
    return total.reshape(shape)


def perceptual_with_grad(a: np.ndarray, b: np.ndarray, levels: int = PERCEPTUAL_SCALES) -> LossResult:
    """Multiscale L1 between gradient-magnitude maps, gradient with respect to ``a``."""
    _check_shapes(a, b)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    pyr_a, pyr_b = _pyramid(a, levels), _pyramid(b, levels)
    value = 0.0
    grads = []
    for level_a, level_b in zip(pyr_a, pyr_b):
        mag_a, nx, ny = _gradient_magnitude(level_a)
        mag_b, _, _ = _gradient_magnitude(level_b)
        diff = mag_a - mag_b
        value += float(np.mean(np.abs(diff)))
        d_mag = np.sign(diff) / diff.size
        grads.append(_central_diff_adjoint(d_mag * nx, 1) + _central_diff_adjoint(d_mag * ny, 0))
    n = len(pyr_a)
    grad = _pyramid_adjoint(grads, a.shape) / n
    return LossResult(value=value / n, grad=grad)


def perceptual_surrogate(a: np.ndarray, b: np.ndarray) -> float:
    return perceptual_with_grad(a, b).value


def sample_loss(
    render: np.ndarray,
    sample: np.ndarray,
    t: float,
    sched: Schedules,
    perceptual: bool = True,
) -> LossResult:
    """w(t) * (mean L1 + perceptual surrogate); the sample is a fixed target."""
    _check_shapes(render, sample)
    if not 0.0 <= t <= 1.0:
        raise BoundsError(f"Noise level must lie in [0, 1], got {t}")
    render = np.asarray(render, dtype=np.float64)
    sample = np.asarray(sample, dtype=np.float64)
    w = weighting(t, sched)
    diff = render - sample
    value = float(np.mean(np.abs(diff)))
    grad = np.sign(diff) / diff.size
    if perceptual:
        surrogate = perceptual_with_grad(render, sample)
        value += surrogate.value
        grad = grad + surrogate.grad
    return LossResult(value=w * value, grad=w * grad)


def sds_grad(
    denoiser: Denoiser,
    cond: Optional[ConditioningBundle],
    render: np.ndarray,
    t: float,
    rng: np.random.Generator,
    sched: Schedules,
    cfg_scale: float = 1.0,
) -> np.ndarray:
    """Score-distillation gradient w(t) * (eps_hat - eps) / N on the rendered image.

    N is the number of image values, the same per-pixel scale as the
    gradients of ``sample_loss`` and ``recon_loss``.
    """
    if not 0.0 < t <= 1.0:
        raise BoundsError(f"SDS needs t in (0, 1], got {t}")
    render = np.asarray(render, dtype=np.float64)
    eps = rng.standard_normal(render.shape)
    eps_hat = guided_eps(denoiser, add_noise(render, t, eps), t, cond, cfg_scale)
    return weighting(t, sched) * (eps_hat - eps) / render.size
