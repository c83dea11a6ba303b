"""Emission-absorption volume rendering with an analytic backward pass.

Quadrature per ray, samples i = 0..S-1 with midpoints t_i and lengths d_i:

    alpha_i = 1 - exp(-sigma_i d_i)
    T_i     = prod_{j<i} (1 - alpha_j)
    w_i     = T_i alpha_i
    rgb     = sum_i w_i c_i + T_S * background
    depth   = sum_i w_i t_i / max(sum_i w_i, eps)
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from config import DEPTH_EPS
from ..errors import ArgumentError, InvalidStateError
from ..geometry.cameras import rays_for_image
from ..models.camera import CameraPose, Ray
from ..models.field import VoxelField
from ..models.parameters import RenderParams

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class RenderRecords:
    """Per-ray sample state retained for the backward pass."""

    positions: np.ndarray  # (R, S, 3)
    t_mid: np.ndarray  # (R, S)
    deltas: np.ndarray  # (R, S)
    rgb: np.ndarray  # (R, S, 3)
    weights: np.ndarray  # (R, S)
    transmittance: np.ndarray  # (R, S + 1), T_0 .. T_S
    background: np.ndarray
    near: float
    far: float
    field_id: int
    field_version: int

    @property
    def n_rays(self) -> int:
        return self.weights.shape[0]


@dataclass(eq=False)
class RenderOutput:
    rgb: np.ndarray
    depth: np.ndarray
    accumulation: np.ndarray
    records: RenderRecords


def sample_edges(near: float, far: float, n_samples: int, spacing: str = "uniform") -> np.ndarray:
    """Interval boundaries (n_samples + 1,) from near to far."""
    if not 0 < near < far:
        raise ArgumentError(f"Need 0 < near < far, got near={near}, far={far}")
    if n_samples < 2:
        raise ArgumentError(f"Need at least 2 samples per ray, got {n_samples}")
    if spacing == "uniform":
        return np.linspace(near, far, n_samples + 1)
    if spacing != "uniform-then-disparity":
        raise ArgumentError(f"Unknown spacing '{spacing}'")

    if far <= 1.0:
        return np.linspace(near, far, n_samples + 1)
    if near >= 1.0:
        return 1.0 / np.linspace(1.0 / near, 1.0 / far, n_samples + 1)
    # Half the intervals uniform up to distance 1, the rest linear in disparity.
    n_uniform = n_samples // 2
    uniform = np.linspace(near, 1.0, n_uniform + 1)
    disparity = 1.0 / np.linspace(1.0, 1.0 / far, n_samples - n_uniform + 1)
    return np.concatenate([uniform, disparity[1:]])


def stratified_samples(
    edges: np.ndarray, n_rays: int, rng: Optional[np.random.Generator]
) -> tuple[np.ndarray, np.ndarray]:
    """Jittered sample positions (R, S) inside each interval and the interval lengths."""
    lower, upper = edges[:-1], edges[1:]
    if rng is None:
        offsets = np.full((n_rays, len(lower)), 0.5)
    else:
        offsets = rng.uniform(0.0, 1.0, size=(n_rays, len(lower)))
    t_mid = lower + offsets * (upper - lower)
    deltas = np.broadcast_to(upper - lower, t_mid.shape).copy()
    return t_mid, deltas


def _composite(
    voxel_field: VoxelField,
    origins: np.ndarray,
    directions: np.ndarray,
    t_mid: np.ndarray,
    deltas: np.ndarray,
    background: np.ndarray,
) -> tuple[np.ndarray, ...]:
    positions = origins[:, None, :] + t_mid[..., None] * directions[:, None, :]
    sigma, rgb = voxel_field.query_points(positions.reshape(-1, 3))
    sigma = sigma.reshape(t_mid.shape)
    rgb = rgb.reshape(*t_mid.shape, 3)

    tau = sigma * deltas
    alpha = -np.expm1(-tau)
    transmittance = np.exp(-np.concatenate([np.zeros((len(tau), 1)), np.cumsum(tau, axis=1)], axis=1))
    weights = transmittance[:, :-1] * alpha
    accumulation = weights.sum(axis=1)
    color = np.einsum("rs,rsc->rc", weights, rgb) + transmittance[:, -1:] * background
    depth = (weights * t_mid).sum(axis=1) / np.maximum(accumulation, DEPTH_EPS)
    return positions, rgb, weights, transmittance, color, depth, accumulation


def render_rays(
    voxel_field: VoxelField,
    origins: np.ndarray,
    directions: np.ndarray,
    params: RenderParams,
    rng: Optional[np.random.Generator] = None,
) -> RenderOutput:
    """Render a batch of rays; outputs are flat (R, ...) arrays."""
    origins = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
    directions = np.asarray(directions, dtype=np.float64).reshape(-1, 3)
    background = np.asarray(params.background, dtype=np.float64)
    edges = sample_edges(params.near, params.far, params.n_samples, params.spacing)
    t_mid, deltas = stratified_samples(edges, len(origins), rng if params.jitter else None)

    chunk = max(1, params.chunk_size)
    bounds = [(start, min(start + chunk, len(origins))) for start in range(0, len(origins), chunk)]

    def run(span: tuple[int, int]) -> tuple[np.ndarray, ...]:
        lo, hi = span
        return _composite(voxel_field, origins[lo:hi], directions[lo:hi], t_mid[lo:hi], deltas[lo:hi], background)

    if params.threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=params.threads) as pool:
            parts = list(pool.map(run, bounds))
    else:
        parts = [run(span) for span in bounds]

    positions, rgb, weights, transmittance, color, depth, accumulation = (
        np.concatenate([part[i] for part in parts]) for i in range(7)
    )
    records = RenderRecords(
        positions=positions,
        t_mid=t_mid,
        deltas=deltas,
        rgb=rgb,
        weights=weights,
        transmittance=transmittance,
        background=background,
        near=params.near,
        far=params.far,
        field_id=id(voxel_field),
        field_version=voxel_field.version,
    )
    return RenderOutput(rgb=color, depth=depth, accumulation=accumulation, records=records)


def render_ray(
    voxel_field: VoxelField,
    ray: Ray,
    params: RenderParams,
    rng: Optional[np.random.Generator] = None,
) -> RenderOutput:
    return render_rays(voxel_field, ray.origin[None], ray.direction[None], params, rng)


def render_image(
    voxel_field: VoxelField, pose: CameraPose, params: RenderParams, seed: Optional[int] = 0
) -> RenderOutput:
    """Render every pixel of ``pose``; the seed fixes the stratified jitter."""
    origins, directions = rays_for_image(pose)
    rng = np.random.default_rng(seed) if seed is not None else None
    flat = render_rays(voxel_field, origins, directions, params, rng)
    h, w = pose.height, pose.width
    return RenderOutput(
        rgb=flat.rgb.reshape(h, w, 3),
        depth=flat.depth.reshape(h, w),
        accumulation=flat.accumulation.reshape(h, w),
        records=flat.records,
    )


def _suffix_exclusive(values: np.ndarray) -> np.ndarray:
    """sum_{i>k} values[:, i] for every k."""
    inclusive = np.cumsum(values[:, ::-1], axis=1)[:, ::-1]
    return inclusive - values


def render_backward(
    voxel_field: VoxelField,
    records: RenderRecords,
    d_rgb: np.ndarray,
    d_depth: Optional[np.ndarray] = None,
    d_weights: Optional[np.ndarray] = None,
) -> None:
    """Push upstream gradients on the rendered outputs into the field's grad buffers.

    ``d_weights`` carries gradients taken directly with respect to the ray
    weights (the distortion regularizer).
    """
    if records.field_id != id(voxel_field) or records.field_version != voxel_field.version:
        raise InvalidStateError(
            f"Render records are stale (taken at version {records.field_version}, field is at {voxel_field.version})"
        )
    n_rays = records.n_rays
    d_rgb = np.asarray(d_rgb, dtype=np.float64).reshape(n_rays, 3)
    weights = records.weights
    trans = records.transmittance

    grad_w = np.einsum("rsc,rc->rs", records.rgb, d_rgb)
    if d_depth is not None:
        d_depth = np.asarray(d_depth, dtype=np.float64).reshape(n_rays)
        acc = weights.sum(axis=1)
        numerator = (weights * records.t_mid).sum(axis=1)
        safe = np.maximum(acc, DEPTH_EPS)
        # depth = numerator / acc above the epsilon, numerator / eps below it
        dd_dw = np.where(
            (acc > DEPTH_EPS)[:, None],
            records.t_mid / safe[:, None] - (numerator / safe**2)[:, None],
            records.t_mid / DEPTH_EPS,
        )
        grad_w = grad_w + d_depth[:, None] * dd_dw
    if d_weights is not None:
        grad_w = grad_w + np.asarray(d_weights, dtype=np.float64).reshape(weights.shape)

    grad_final = d_rgb @ records.background
    d_tau = grad_w * trans[:, 1:] - _suffix_exclusive(grad_w * weights) - (grad_final * trans[:, -1])[:, None]
    d_sigma = d_tau * records.deltas
    d_color = d_rgb[:, None, :] * weights[..., None]
    voxel_field.query_points_backward(records.positions.reshape(-1, 3), d_sigma.reshape(-1), d_color.reshape(-1, 3))


@dataclass
class DistortionResult:
    value: float
    d_weights: np.ndarray


def distortion_loss(records: RenderRecords) -> DistortionResult:
    """Mean over rays of sum_ij w_i w_j |s_i - s_j| + 1/3 sum_i w_i^2 ds_i.

    s are sample midpoints normalized to [0, 1] over [near, far]; uses the
    prefix-sum form, exact for midpoints sorted along each ray.
    """
    span = records.far - records.near
    s = (records.t_mid - records.near) / span
    ds = records.deltas / span
    w = records.weights

    w_before = np.cumsum(w, axis=1) - w
    ws_before = np.cumsum(w * s, axis=1) - w * s
    w_after = _suffix_exclusive(w)
    ws_after = _suffix_exclusive(w * s)

    pairwise = 2.0 * np.sum(w * (s * w_before - ws_before), axis=1)
    intra = np.sum(w**2 * ds, axis=1) / 3.0
    value = float(np.mean(pairwise + intra))

    grad = 2.0 * (s * w_before - ws_before + ws_after - s * w_after) + (2.0 / 3.0) * w * ds
    return DistortionResult(value=value, d_weights=grad / records.n_rays)
