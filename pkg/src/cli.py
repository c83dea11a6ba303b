"""Command-line surface: dataset generation, fitting, rendering and diagnostics.

Exit codes: 0 success, 2 usage/config/missing input, 3 runtime failure.
"""

import argparse
import json
import logging
import os
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .conditioning.bundle import ConditioningBuilder
from .diffusion.catalog import priors
from .diffusion.sampler import ddim_sample
from .diffusion.schedule import add_noise
from .errors import ArgumentError, BoundsError, ConfigError, ReconError
from .geometry.cameras import focus_point
from .geometry.posedist import fit_bspline_path, fit_ellipse_path, sample_poses
from .models.camera import CameraPose
from .models.field import load_checkpoint
from .models.parameters import RunConfig, SceneSpec, load_run_config, load_scene_spec
from .models.paths import PerturbSpec, PosePath
from .recon.evaluate import evaluate
from .recon.loop import latent_pose_for, reconstruct
from .render.volume import render_image
from .scenes.dataset import load_dataset, normalize_dataset, read_poses, write_dataset, write_poses
from .scenes.procedural import dataset_path, generate_views, make_scene
from .utils.formatting import format_db, format_ratio
from .utils.imaging import downsample_area, write_pfm, write_png
from .utils.metrics import psnr

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _dump_json(path: Path, payload: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path


def _run_config(args: argparse.Namespace) -> RunConfig:
    """Load --config and apply flag overrides (flags win)."""
    run = load_run_config(args.config)
    recon = run.recon
    if args.seed is not None:
        run = replace(run, seed=args.seed)
        recon = replace(recon, seed=args.seed)
    threads = args.threads if args.threads is not None else (run.threads or os.cpu_count() or 1)
    recon = replace(recon, render=replace(recon.render, threads=threads))
    return replace(run, recon=recon, threads=threads)


def _fit_path(poses: Sequence[CameraPose], kind: str) -> PosePath:
    if kind == "bspline":
        return fit_bspline_path(poses)
    return fit_ellipse_path(poses, focus_point(poses))


def cmd_make_scene(args: argparse.Namespace) -> int:
    spec = load_scene_spec(args.spec) if args.spec else SceneSpec()
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    scene = make_scene(spec.n_primitives, spec.seed)
    path = dataset_path(spec)
    train, test = generate_views(
        scene,
        path,
        spec.n_train,
        spec.n_test,
        resolution=spec.resolution,
        protocol=spec.protocol,
        n_frames=spec.n_frames,
        stride=spec.stride,
    )
    manifest = write_dataset(args.out, scene, spec, path, train, test)
    print(f"Wrote {len(train)} training and {len(test)} held-out views ({manifest})")
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    run = _run_config(args)
    prior_key = args.prior or run.prior.kind
    mode = args.mode or run.recon.mode
    recon_config = replace(run.recon, mode=mode, iters=args.iters or run.recon.iters)
    if args.no_progress:
        recon_config = replace(recon_config, progress=False)

    dataset = normalize_dataset(load_dataset(args.dataset), run.rescale, run.rescale_factor)
    try:
        plan = priors.get_plan(prior_key)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from exc
    denoiser = priors.build(plan.key, dataset.scene, replace(run.prior, kind=plan.key), recon_config.seed)
    path = _fit_path([v.pose for v in dataset.train], run.path_kind) if denoiser is not None else None

    out = Path(args.out)
    report = reconstruct(
        dataset.train,
        dataset.test,
        path,
        recon_config,
        denoiser,
        perturb=run.perturb,
        cond_params=run.conditioning,
        field_params=run.grid,
        out_dir=out,
    )

    if dataset.test:
        render_dir = out / "renders"
        render_dir.mkdir(parents=True, exist_ok=True)
        params = replace(recon_config.render, jitter=False)
        for view in dataset.test:
            write_png(render_dir / f"{view.name}.png", render_image(report.voxel_field, view.pose, params, seed=None).rgb)
    write_poses(out / "poses.json", [v.pose for v in dataset.views], names=[v.name for v in dataset.views])
    _dump_json(
        out / "report.json",
        {
            **report.to_dict(),
            "prior": plan.key,
            "mode": mode,
            "seed": recon_config.seed,
            "scale": dataset.scale,
            "translation": [float(v) for v in dataset.translation],
        },
    )
    if report.metrics is not None:
        print(f"Held-out PSNR {format_db(report.metrics.mean_psnr)}, SSIM {format_ratio(report.metrics.mean_ssim)}")
    return EXIT_OK


def cmd_render(args: argparse.Namespace) -> int:
    run = _run_config(args)
    voxel_field = load_checkpoint(args.checkpoint)
    poses = read_poses(args.poses)
    params = replace(run.recon.render, jitter=False)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for index, pose in enumerate(poses):
        if args.resolution:
            pose = latent_pose_for(pose, args.resolution)
        rendered = render_image(voxel_field, pose, params, seed=None)
        write_png(out / f"{index:03d}.png", rendered.rgb)
        write_pfm(out / f"{index:03d}.pfm", rendered.depth)
    print(f"Rendered {len(poses)} views to {out}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    run = _run_config(args)
    voxel_field = load_checkpoint(args.checkpoint)
    dataset = normalize_dataset(load_dataset(args.dataset), run.rescale, run.rescale_factor)
    payload = {"train": evaluate(voxel_field, dataset.train, run.recon.render).to_dict()}
    if dataset.test:
        payload["test"] = evaluate(voxel_field, dataset.test, run.recon.render).to_dict()
    _dump_json(Path(args.out) / "eval.json", payload)
    for split, metrics in payload.items():
        print(f"{split}: PSNR {format_db(metrics['mean_psnr'])}, SSIM {format_ratio(metrics['mean_ssim'])}")
    return EXIT_OK


def cmd_sample_poses(args: argparse.Namespace) -> int:
    run = _run_config(args)
    poses = read_poses(args.poses)
    path = _fit_path(poses, args.path_kind or run.path_kind)
    perturb = PerturbSpec.zero() if args.zero_perturb else run.perturb
    seed = args.seed if args.seed is not None else run.seed
    sampled = sample_poses(path, perturb, args.n, seed)
    target = write_poses(Path(args.out) / "poses.json", sampled, path=path.to_dict())
    print(f"Sampled {len(sampled)} poses to {target}")
    return EXIT_OK


def cmd_ddim_demo(args: argparse.Namespace) -> int:
    run = _run_config(args)
    dataset = normalize_dataset(load_dataset(args.dataset), run.rescale, run.rescale_factor)
    views = dataset.views
    if not 0 <= args.pose_index < len(views):
        raise BoundsError(f"Pose index {args.pose_index} outside [0, {len(views)})")
    denoiser = priors.build(args.prior, dataset.scene, replace(run.prior, kind=args.prior), run.recon.seed)
    if denoiser is None:
        raise ArgumentError("ddim-demo needs a prior other than 'none'")

    view = views[args.pose_index]
    latent_pose = latent_pose_for(view.pose, run.recon.latent_size)
    clean = downsample_area(view.image, latent_pose.height, latent_pose.width)
    rng = np.random.default_rng(run.seed)
    noisy = add_noise(clean, args.t, rng.standard_normal(clean.shape))

    builder = ConditioningBuilder(dataset.train, run.recon.n_condition_views, run.conditioning)
    bundle = builder.bundle(latent_pose, view.pose)
    sample = ddim_sample(denoiser, bundle, noisy, args.t, args.k, run.recon.cfg_scale)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_png(out / "noisy.png", noisy)
    write_png(out / "sample.png", sample)
    write_png(out / "target.png", clean)
    write_png(out / "conditioning.png", bundle.feature_image[..., :3])
    np.save(out / "sample.npy", sample)
    _dump_json(
        out / "demo.json",
        {"view": view.name, "t": args.t, "k": args.k, "prior": args.prior, "psnr": psnr(sample, clean)},
    )
    print(f"DDIM sample of {view.name}: PSNR {format_db(psnr(sample, clean))} against the observed view")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run config JSON (schema_version required)")
    common.add_argument("--threads", type=int, help="worker threads for rendering (default: all cores)")
    common.add_argument("--seed", type=int, help="override the run seed")
    common.add_argument("--verbose", action="store_true", help="log at DEBUG level")

    parser = argparse.ArgumentParser(prog="fewview", description="Few-view radiance field reconstruction with a diffusion prior.")
    commands = parser.add_subparsers(dest="command", required=True)

    make = commands.add_parser("make-scene", parents=[common], help="generate a synthetic dataset")
    make.add_argument("--spec", help="scene spec JSON; defaults are used when omitted")
    make.add_argument("--out", required=True, help="dataset directory to write")
    make.set_defaults(handler=cmd_make_scene)

    fit = commands.add_parser("fit", parents=[common], help="optimize a voxel field on a dataset")
    fit.add_argument("--dataset", required=True, help="dataset directory with manifest.json")
    fit.add_argument("--prior", choices=[plan.key for plan in priors.available_plans()], help="novel-view prior")
    fit.add_argument("--mode", choices=["sample", "sds"], help="sample loss or score distillation")
    fit.add_argument("--iters", type=int, help="override the iteration count")
    fit.add_argument("--no-progress", action="store_true", help="hide the progress bar")
    fit.add_argument("--out", required=True, help="output directory")
    fit.set_defaults(handler=cmd_fit)

    render = commands.add_parser("render", parents=[common], help="render a checkpoint at given poses")
    render.add_argument("--checkpoint", required=True, help="VOXF1 checkpoint")
    render.add_argument("--poses", required=True, help="poses JSON (list, {'poses': ...} or manifest)")
    render.add_argument("--resolution", type=int, help="longest image side to render at")
    render.add_argument("--out", required=True, help="output directory for PNG images and PFM depths")
    render.set_defaults(handler=cmd_render)

    evaluate_cmd = commands.add_parser("eval", parents=[common], help="score a checkpoint on a dataset")
    evaluate_cmd.add_argument("--checkpoint", required=True, help="VOXF1 checkpoint")
    evaluate_cmd.add_argument("--dataset", required=True, help="dataset directory with manifest.json")
    evaluate_cmd.add_argument("--out", required=True, help="output directory for eval.json")
    evaluate_cmd.set_defaults(handler=cmd_eval)

    sample = commands.add_parser("sample-poses", parents=[common], help="fit a pose path and sample from it")
    sample.add_argument("--poses", required=True, help="poses JSON to fit the path to")
    sample.add_argument("--path-kind", choices=["ellipse", "bspline"], help="path family")
    sample.add_argument("--n", type=int, default=8, help="number of poses to sample")
    sample.add_argument("--zero-perturb", action="store_true", help="sample exactly on the path")
    sample.add_argument("--out", required=True, help="output directory for poses.json")
    sample.set_defaults(handler=cmd_sample_poses)

    demo = commands.add_parser("ddim-demo", parents=[common], help="denoise one noised dataset view")
    demo.add_argument("--dataset", required=True, help="dataset directory with manifest.json")
    demo.add_argument("--pose-index", type=int, default=0, help="view index (training views first)")
    demo.add_argument("--t", type=float, default=0.5, help="starting noise level in (0, 1]")
    demo.add_argument("--k", type=int, default=10, help="number of DDIM steps")
    demo.add_argument("--prior", default="oracle", choices=[plan.key for plan in priors.available_plans()])
    demo.add_argument("--out", required=True, help="output directory")
    demo.set_defaults(handler=cmd_ddim_demo)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)
    try:
        return args.handler(args)
    except (ConfigError, ArgumentError, FileNotFoundError, json.JSONDecodeError) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except (ReconError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_RUNTIME
    except (KeyError, ValueError) as exc:
        logger.error("Invalid input: %s", exc)
        return EXIT_USAGE
