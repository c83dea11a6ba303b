"""Epipolar feature rendering: aggregate input-view features along target rays."""

import logging
from typing import Sequence

import numpy as np

from ..errors import ArgumentError
from ..geometry.cameras import project_points, rays_for_image
from ..models.camera import CameraPose, PosedImage
from ..models.parameters import ConditioningParams
from ..render.volume import sample_edges
from ..utils.imaging import downsample_area
from .encoder import FeatureImage

logger = logging.getLogger(__name__)

RAY_CHUNK = 256
INVALID_RGB = 0.5


def gather_features(
    inputs: Sequence[PosedImage],
    features: Sequence[FeatureImage],
    points: np.ndarray,
    border_margin: float = 0.5,
) -> tuple[np.ndarray, np.ndarray]:
    """Bilinearly sample every input's features at the projections of ``points``.

    Returns values (V, N, C) and validity (V, N). A sample is valid when the
    point is in front of the camera and projects inside the image shrunk by
    ``border_margin`` pixels.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    n_channels = features[0].n_channels
    values = np.zeros((len(inputs), len(points), n_channels))
    valid = np.zeros((len(inputs), len(points)), dtype=bool)

    for v, (posed, feature) in enumerate(zip(inputs, features)):
        height, width = feature.data.shape[:2]
        pixels, depth = project_points(posed.pose, points)
        with np.errstate(invalid="ignore"):
            ok = (
                (depth > 1e-9)
                & (pixels[:, 0] >= border_margin)
                & (pixels[:, 0] <= width - border_margin)
                & (pixels[:, 1] >= border_margin)
                & (pixels[:, 1] <= height - border_margin)
            )
        if not np.any(ok):
            continue
        # Pixel centres sit at half-integer coordinates.
        x = pixels[ok, 0] - 0.5
        y = pixels[ok, 1] - 0.5
        x0 = np.clip(np.floor(x), 0, max(width - 2, 0)).astype(int)
        y0 = np.clip(np.floor(y), 0, max(height - 2, 0)).astype(int)
        x1 = np.minimum(x0 + 1, width - 1)
        y1 = np.minimum(y0 + 1, height - 1)
        fx = np.clip(x - x0, 0.0, 1.0)[:, None]
        fy = np.clip(y - y0, 0.0, 1.0)[:, None]
        grid = feature.data
        values[v, ok] = (
            grid[y0, x0] * (1 - fx) * (1 - fy)
            + grid[y0, x1] * fx * (1 - fy)
            + grid[y1, x0] * (1 - fx) * fy
            + grid[y1, x1] * fx * fy
        )
        valid[v] = ok
    return values, valid


def positional_encoding(points: np.ndarray, n_freqs: int) -> np.ndarray:
    """[p, sin(2^k pi p), cos(2^k pi p)] for k < n_freqs."""
    parts = [points]
    for k in range(n_freqs):
        scaled = (2.0 ** k) * np.pi * points
        parts += [np.sin(scaled), np.cos(scaled)]
    return np.concatenate(parts, axis=-1)


def projection_matrix(in_dim: int, out_dim: int, seed: int) -> np.ndarray:
    """Seeded matrix with orthonormal columns (or rows, when out_dim > in_dim)."""
    rng = np.random.default_rng(seed)
    gauss = rng.standard_normal((max(in_dim, out_dim), min(in_dim, out_dim)))
    q, r = np.linalg.qr(gauss)
    q = q * np.sign(np.diag(r))
    return q if in_dim >= out_dim else q.T


def epipolar_render(
    inputs: Sequence[PosedImage],
    features: Sequence[FeatureImage],
    target: CameraPose,
    params: ConditioningParams = ConditioningParams(),
) -> FeatureImage:
    """Render an (H, W, 3 + F) conditioning image for ``target``.

    Along each target ray, features gathered from the input views are pooled
    by mean and variance, weighted over depth with softmax(-beta * variance)
    and projected to F channels. Pixels where no sample reaches any input view
    carry zero features, gray RGB and ``valid = False``.
    """
    if len(inputs) == 0:
        raise ArgumentError("Epipolar rendering needs at least one input view")
    if len(inputs) != len(features):
        raise ArgumentError(f"Got {len(inputs)} inputs but {len(features)} feature images")
    n_channels = features[0].n_channels
    if any(f.n_channels != n_channels for f in features):
        raise ArgumentError("All feature images must have the same channel count")

    origins, directions = rays_for_image(target)
    edges = sample_edges(params.near, params.far, params.n_samples, "uniform-then-disparity")
    t_mid = 0.5 * (edges[:-1] + edges[1:])
    agg_dim = 2 * n_channels + 3 * (1 + 2 * params.posenc_freqs)
    projection = projection_matrix(agg_dim, params.n_features, params.projection_seed)

    n_rays = len(origins)
    rgb = np.full((n_rays, 3), INVALID_RGB)
    projected = np.zeros((n_rays, params.n_features))
    valid = np.zeros(n_rays, dtype=bool)

    for start in range(0, n_rays, RAY_CHUNK):
        stop = min(start + RAY_CHUNK, n_rays)
        points = origins[start:stop, None, :] + t_mid[None, :, None] * directions[start:stop, None, :]
        n_chunk = stop - start
        values, ok = gather_features(inputs, features, points, params.border_margin)
        values = values.reshape(len(inputs), n_chunk, params.n_samples, n_channels)
        ok = ok.reshape(len(inputs), n_chunk, params.n_samples)

        count = ok.sum(axis=0)
        denom = np.maximum(count, 1)[..., None]
        mean = np.where(ok[..., None], values, 0.0).sum(axis=0) / denom
        var = np.where(ok[..., None], (values - mean) ** 2, 0.0).sum(axis=0) / denom

        any_sample = count > 0
        ray_ok = any_sample.any(axis=1)
        logits = np.where(any_sample, -params.beta * var.mean(axis=-1), -np.inf)
        logits[~ray_ok] = 0.0
        logits -= logits.max(axis=1, keepdims=True)
        weights = np.exp(logits)
        weights /= weights.sum(axis=1, keepdims=True)

        encoded = positional_encoding(points, params.posenc_freqs)
        aggregate = np.concatenate([mean, var, encoded], axis=-1)
        pooled = np.einsum("rd,rdc->rc", weights, aggregate)
        chunk_rgb = np.einsum("rd,rdc->rc", weights, mean[..., :3])

        rgb[start:stop][ray_ok] = chunk_rgb[ray_ok]
        projected[start:stop][ray_ok] = pooled[ray_ok] @ projection
        valid[start:stop] = ray_ok

    height, width = target.height, target.width
    if not valid.all():
        logger.debug("Epipolar render: %d of %d pixels see no input view", int((~valid).sum()), n_rays)
    data = np.concatenate([rgb, projected], axis=-1).reshape(height, width, 3 + params.n_features)
    return FeatureImage(data=data, valid=valid.reshape(height, width))


def pixelnerf_loss(rendered_rgb: np.ndarray, target: PosedImage) -> float:
    """Mean squared error against the target downsampled to the rendered size."""
    height, width = rendered_rgb.shape[:2]
    reference = downsample_area(np.asarray(target.image, dtype=np.float64), height, width)
    return float(np.mean((rendered_rgb - reference) ** 2))
