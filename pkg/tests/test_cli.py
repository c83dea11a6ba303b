import hashlib
import json

import numpy as np
import pytest

from src.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from src.recon.loop import latent_pose_for
from src.scenes.dataset import load_dataset, normalize_dataset
from src.scenes.procedural import render_gt
from src.utils.imaging import read_pfm, read_png

SCENE_SPEC = {"n_primitives": 2, "seed": 1, "n_train": 3, "n_test": 1, "resolution": 16}
TINY_RUN = {
    "schema_version": 1,
    "grid": {"resolution": 16},
    "recon": {"iters": 3, "render": {"n_samples": 16}, "latent_size": 16, "log_every": 0, "progress": False},
    "conditioning": {"n_samples": 16},
    "prior": {"kind": "oracle"},
}


def _write_json(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


def _digest(root):
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    spec = _write_json(root / "spec.json", SCENE_SPEC)
    config = _write_json(root / "run.json", TINY_RUN)
    assert main(["make-scene", "--spec", spec, "--out", str(root / "data")]) == EXIT_OK
    fit_args = ["fit", "--dataset", str(root / "data"), "--config", config, "--threads", "1", "--no-progress"]
    assert main([*fit_args, "--out", str(root / "fit")]) == EXIT_OK
    return root, config, fit_args


def test_make_scene_is_reproducible(workspace, tmp_path):
    root, _, _ = workspace
    assert main(["make-scene", "--spec", str(root / "spec.json"), "--out", str(tmp_path / "again")]) == EXIT_OK
    assert _digest(tmp_path / "again") == _digest(root / "data")
    assert len(list((root / "data" / "images").glob("*.png"))) == 4


def test_make_scene_rejects_a_bad_spec(tmp_path):
    unknown = _write_json(tmp_path / "unknown.json", {**SCENE_SPEC, "n_lights": 2})
    assert main(["make-scene", "--spec", unknown, "--out", str(tmp_path / "a")]) == EXIT_USAGE
    (tmp_path / "broken.json").write_text("{not json")
    assert main(["make-scene", "--spec", str(tmp_path / "broken.json"), "--out", str(tmp_path / "b")]) == EXIT_USAGE


def test_help_exits_cleanly(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--help"])
    assert info.value.code == 0
    assert "make-scene" in capsys.readouterr().out


def test_fit_outputs(workspace):
    root, _, _ = workspace
    out = root / "fit"
    for name in ("report.json", "losses.jsonl", "checkpoint.voxf", "poses.json"):
        assert (out / name).is_file()
    report = json.loads((out / "report.json").read_text())
    assert report["iters"] == 3
    assert report["prior"] == "oracle"
    assert set(report["metrics"]) == {"views", "mean_psnr", "mean_ssim"}
    assert len((out / "losses.jsonl").read_text().splitlines()) == 3
    assert read_png(out / "renders" / "test_000.png").shape == (16, 16, 3)


def test_fit_is_deterministic(workspace, tmp_path):
    root, _, fit_args = workspace
    assert main([*fit_args, "--out", str(tmp_path / "rerun")]) == EXIT_OK
    assert (tmp_path / "rerun" / "checkpoint.voxf").read_bytes() == (root / "fit" / "checkpoint.voxf").read_bytes()
    rerun = json.loads((tmp_path / "rerun" / "report.json").read_text())
    assert rerun["metrics"] == json.loads((root / "fit" / "report.json").read_text())["metrics"]


def test_fit_usage_errors(workspace, tmp_path):
    root, config, _ = workspace
    missing = ["fit", "--dataset", str(tmp_path / "nowhere"), "--config", config, "--out", str(tmp_path / "o")]
    assert main(missing) == EXIT_USAGE
    stale = _write_json(tmp_path / "old.json", {**TINY_RUN, "schema_version": 0})
    assert main(["fit", "--dataset", str(root / "data"), "--config", stale, "--out", str(tmp_path / "o")]) == EXIT_USAGE


def test_render_writes_images_and_depths(workspace, tmp_path):
    root, config, _ = workspace
    args = [
        "render", "--checkpoint", str(root / "fit" / "checkpoint.voxf"), "--poses", str(root / "fit" / "poses.json"),
        "--config", config, "--resolution", "8", "--out", str(tmp_path),
    ]
    assert main(args) == EXIT_OK
    assert read_png(tmp_path / "000.png").shape == (8, 8, 3)
    depth = read_pfm(tmp_path / "000.pfm")
    assert depth.shape == (8, 8)
    assert np.all(np.isfinite(depth))
    assert len(list(tmp_path.glob("*.png"))) == 4


def test_corrupt_checkpoint_is_a_runtime_error(workspace, tmp_path):
    root, _, _ = workspace
    bad = tmp_path / "bad.voxf"
    bad.write_bytes(b"VOXF0" + bytes(80))
    args = ["render", "--checkpoint", str(bad), "--poses", str(root / "fit" / "poses.json"), "--out", str(tmp_path)]
    assert main(args) == EXIT_RUNTIME


def test_eval_writes_metrics(workspace, tmp_path):
    root, config, _ = workspace
    args = [
        "eval", "--checkpoint", str(root / "fit" / "checkpoint.voxf"), "--dataset", str(root / "data"),
        "--config", config, "--out", str(tmp_path),
    ]
    assert main(args) == EXIT_OK
    payload = json.loads((tmp_path / "eval.json").read_text())
    assert set(payload) == {"train", "test"}
    assert len(payload["train"]["views"]) == 3
    fit_report = json.loads((root / "fit" / "report.json").read_text())
    assert payload["test"]["mean_psnr"] == pytest.approx(fit_report["metrics"]["mean_psnr"], abs=1e-3)


def test_sample_poses(workspace, tmp_path):
    root, _, _ = workspace
    manifest = str(root / "data" / "manifest.json")
    base = ["sample-poses", "--poses", manifest, "--n", "4", "--seed", "5"]
    assert main([*base, "--zero-perturb", "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main([*base, "--zero-perturb", "--out", str(tmp_path / "b")]) == EXIT_OK
    first = json.loads((tmp_path / "a" / "poses.json").read_text())
    assert len(first["poses"]) == 4
    assert first["path"]["kind"] == "ellipse"
    assert first == json.loads((tmp_path / "b" / "poses.json").read_text())
    assert main([*base, "--path-kind", "bspline", "--out", str(tmp_path / "c")]) == EXIT_OK


def test_ddim_demo_with_the_oracle_reproduces_the_scene(workspace, tmp_path):
    root, config, _ = workspace
    args = [
        "ddim-demo", "--dataset", str(root / "data"), "--config", config,
        "--pose-index", "3", "--t", "0.7", "--k", "1", "--out", str(tmp_path),
    ]
    assert main(args) == EXIT_OK
    dataset = normalize_dataset(load_dataset(root / "data"))
    view = dataset.views[3]
    expected = render_gt(dataset.scene, latent_pose_for(view.pose, 16))
    np.testing.assert_allclose(np.load(tmp_path / "sample.npy"), expected, atol=1e-6)
    assert json.loads((tmp_path / "demo.json").read_text())["view"] == "test_000"
    assert main([*args[:-2], "--pose-index", "9", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main([*args[:-2], "--prior", "none", "--out", str(tmp_path)]) == EXIT_USAGE
