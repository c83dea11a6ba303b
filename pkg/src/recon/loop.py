"""The reconstruction loop: observed-view loss plus a diffusion-sampled novel-view loss."""

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from tqdm import tqdm

from ..conditioning.bundle import ConditioningBuilder
from ..diffusion.base import Denoiser
from ..diffusion.sampler import ddim_sample
from ..diffusion.schedule import add_noise
from ..errors import InsufficientDataError, InvalidStateError, IterationError, ReconError
from ..geometry.posedist import sample_novel_pose
from ..losses.objectives import recon_loss, sample_loss, sds_grad
from ..losses.schedules import sample_noise_level, schedule_at
from ..models.camera import CameraPose, PosedImage
from ..models.field import VoxelField, save_checkpoint
from ..models.parameters import ConditioningParams, FieldParams, ReconConfig
from ..models.paths import PerturbSpec, PosePath
from ..render.volume import distortion_loss, render_backward, render_image
from ..utils.formatting import format_db, format_loss, format_ratio, format_seconds
from ..utils.imaging import downsample_area, downsample_area_adjoint
from .evaluate import EvalMetrics, evaluate
from .optimizer import Adam

logger = logging.getLogger(__name__)

LOSS_LOG = "losses.jsonl"
CHECKPOINT = "checkpoint.voxf"


@dataclass
class IterationRecord:
    iter: int
    recon: float
    sample: float
    distortion: float
    t_min: float
    lambda_sample: float


@dataclass(eq=False)
class ReconReport:
    records: list[IterationRecord]
    metrics: Optional[EvalMetrics]
    checkpoint_path: Optional[Path] = None
    voxel_field: Optional[VoxelField] = field(default=None, repr=False)
    elapsed: float = 0.0

    def to_dict(self) -> dict:
        return {
            "iters": len(self.records),
            "final": asdict(self.records[-1]) if self.records else None,
            "checkpoint": str(self.checkpoint_path) if self.checkpoint_path else None,
            "metrics": self.metrics.to_dict() if self.metrics else None,
        }


def latent_pose_for(pose: CameraPose, size: int) -> CameraPose:
    width, height = pose.image_size
    if width == height:
        return pose.resized(size, size)
    scale = size / max(width, height)
    return pose.resized(max(1, round(width * scale)), max(1, round(height * scale)))


def _prior_step(
    voxel_field: VoxelField,
    denoiser: Denoiser,
    builder: ConditioningBuilder,
    path: PosePath,
    perturb: PerturbSpec,
    config: ReconConfig,
    t_min: float,
    weight: float,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Render a perturbed novel view, build its target and push the weighted gradient.

    Returns the sample-loss value before the lambda weight and the novel-view distortion.
    """
    sched = config.effective_schedules
    pose = sample_novel_pose(path, perturb, rng)
    latent_pose = latent_pose_for(pose, config.latent_size)
    render_pose = pose if config.render_then_downsample else latent_pose
    output = render_image(voxel_field, render_pose, config.render, seed=int(rng.integers(2**32)))
    x = output.rgb
    if config.render_then_downsample:
        x = downsample_area(x, latent_pose.height, latent_pose.width)

    t = sample_noise_level(t_min, sched.t_max, rng)
    cond = builder.bundle(latent_pose, pose)
    if config.mode == "sds":
        grad = sds_grad(denoiser, cond, x, t, rng, sched, config.cfg_scale)
        value = float(np.sum(np.abs(grad)))
    else:
        eps = rng.standard_normal(x.shape)
        target = ddim_sample(denoiser, cond, add_noise(x, t, eps), t, config.k_ddim, config.cfg_scale)
        loss = sample_loss(x, target, t, sched, perceptual=config.perceptual)
        value, grad = loss.value, loss.grad

    grad = weight * grad
    if config.render_then_downsample:
        grad = downsample_area_adjoint(grad, render_pose.height, render_pose.width)

    d_weights = None
    distortion = 0.0
    if config.distortion_on_novel and sched.lambda_distortion > 0:
        dist = distortion_loss(output.records)
        distortion = dist.value
        d_weights = sched.lambda_distortion * dist.d_weights
    render_backward(voxel_field, output.records, grad, d_weights=d_weights)
    return value, distortion


def reconstruct(
    observations: Sequence[PosedImage],
    heldout: Sequence[PosedImage],
    path: Optional[PosePath],
    config: ReconConfig,
    denoiser: Optional[Denoiser],
    *,
    perturb: Optional[PerturbSpec] = None,
    cond_params: Optional[ConditioningParams] = None,
    field_params: Optional[FieldParams] = None,
    out_dir: Union[str, Path, None] = None,
) -> ReconReport:
    """Optimize a voxel field from ``observations`` regularized by ``denoiser``.

    With ``denoiser=None`` or a zero sample weight the novel-view step is
    skipped entirely and its random stream is never touched.
    """
    if len(observations) == 0:
        raise InsufficientDataError("Reconstruction needs at least one observation")
    if denoiser is not None and path is None:
        raise InsufficientDataError("A novel-view prior needs a pose path to sample from")
    perturb = perturb or PerturbSpec()
    cond_params = cond_params or ConditioningParams()
    field_params = field_params or FieldParams()
    sched = config.effective_schedules

    recon_seq, prior_seq = np.random.SeedSequence(config.seed).spawn(2)
    recon_rng = np.random.default_rng(recon_seq)
    prior_rng = np.random.default_rng(prior_seq)

    voxel_field = VoxelField.create(
        field_params.resolution,
        field_params.bbox_min,
        field_params.bbox_max,
        field_params.density_init,
        field_params.color_init,
    )
    optimizer = Adam(config.optimizer)
    builder = (
        ConditioningBuilder(observations, config.n_condition_views, cond_params) if denoiser is not None else None
    )
    view_scale = config.reference_views / len(observations) if config.scale_by_view_count else 1.0

    out_path = Path(out_dir) if out_dir is not None else None
    log_file = None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        log_file = (out_path / LOSS_LOG).open("w", encoding="utf-8")

    logger.info(
        "Fitting %d views for %d iterations (mode=%s, prior=%s)",
        len(observations),
        config.iters,
        config.mode,
        "none" if denoiser is None else type(denoiser).__name__,
    )
    records: list[IterationRecord] = []
    started = time.perf_counter()
    try:
        for i in tqdm(range(config.iters), desc="fit", disable=not config.progress, leave=False):
            try:
                voxel_field.zero_grad()
                t_min, lambda_sample = schedule_at(sched, i)
                weight = lambda_sample * view_scale

                recon = recon_loss(voxel_field, observations, config.render, recon_rng)
                distortion = 0.0
                if sched.lambda_distortion > 0:
                    dist = distortion_loss(recon.output.records)
                    distortion = dist.value
                    render_backward(
                        voxel_field,
                        recon.output.records,
                        np.zeros((recon.output.records.n_rays, 3)),
                        d_weights=sched.lambda_distortion * dist.d_weights,
                    )

                sample_value = 0.0
                if builder is not None and weight > 0:
                    sample_value, novel_distortion = _prior_step(
                        voxel_field, denoiser, builder, path, perturb, config, t_min, weight, prior_rng
                    )
                    distortion += novel_distortion

                if not (np.isfinite(recon.value) and np.isfinite(sample_value)):
                    raise InvalidStateError(f"Non-finite loss (recon={recon.value}, sample={sample_value})")
                optimizer.step(voxel_field)
            except IterationError:
                raise
            except (ReconError, ValueError, FloatingPointError) as exc:
                raise IterationError(i, exc) from exc

            record = IterationRecord(
                iter=i,
                recon=recon.value,
                sample=sample_value,
                distortion=distortion,
                t_min=t_min,
                lambda_sample=lambda_sample,
            )
            records.append(record)
            if log_file is not None:
                log_file.write(json.dumps(asdict(record)) + "\n")
            if config.log_every and (i + 1) % config.log_every == 0:
                logger.info(
                    "iter %d: recon %s, sample %s, t_min %s",
                    i + 1,
                    format_loss(record.recon),
                    format_loss(record.sample),
                    format_ratio(t_min),
                )
    finally:
        if log_file is not None:
            log_file.close()

    metrics = evaluate(voxel_field, heldout, config.render) if heldout else None
    checkpoint_path = save_checkpoint(voxel_field, out_path / CHECKPOINT) if out_path is not None else None
    elapsed = time.perf_counter() - started
    if metrics is not None:
        logger.info(
            "Held-out PSNR %s, SSIM %s after %s",
            format_db(metrics.mean_psnr),
            format_ratio(metrics.mean_ssim),
            format_seconds(elapsed),
        )
    return ReconReport(
        records=records,
        metrics=metrics,
        checkpoint_path=checkpoint_path,
        voxel_field=voxel_field,
        elapsed=elapsed,
    )


@dataclass
class Comparison:
    psnr_delta: float
    ssim_delta: float


def compare_reports(baseline: ReconReport, prior: ReconReport) -> Comparison:
    """Mean held-out PSNR and SSIM gain of ``prior`` over ``baseline``."""
    if baseline.metrics is None or prior.metrics is None:
        raise InsufficientDataError("Both reports need held-out metrics to compare")
    return Comparison(
        psnr_delta=prior.metrics.mean_psnr - baseline.metrics.mean_psnr,
        ssim_delta=prior.metrics.mean_ssim - baseline.metrics.mean_ssim,
    )
