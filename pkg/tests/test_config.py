import json

import pytest

import config as cfg
from src.errors import ConfigError
from src.models.parameters import (
    ReconConfig,
    RenderParams,
    RunConfig,
    SceneSpec,
    load_run_config,
    load_scene_spec,
)
from src.utils.formatting import format_db, format_delta, format_loss, format_ratio, format_seconds


def test_defaults_follow_the_config_module():
    run = RunConfig()
    assert run.schema_version == cfg.SCHEMA_VERSION
    assert run.recon.k_ddim == cfg.DDIM_STEPS
    assert run.recon.cfg_scale == cfg.CFG_SCALE
    assert run.recon.schedules.lambda_sample_end == cfg.LAMBDA_SAMPLE_END
    assert run.grid.resolution == cfg.FIELD_RESOLUTION
    assert run.conditioning.n_samples == cfg.COND_SAMPLES


def test_nested_sections_are_parsed():
    run = RunConfig.from_dict(
        {
            "schema_version": 1,
            "recon": {"iters": 20, "render": {"n_samples": 32, "background": [1, 1, 1]}, "mode": "sds"},
            "perturb": {"position_radius": 0.1},
            "path_kind": "bspline",
        }
    )
    assert run.recon.iters == 20
    assert isinstance(run.recon.render, RenderParams)
    assert run.recon.render.background == (1, 1, 1)
    assert run.recon.mode == "sds"
    assert run.recon.effective_schedules.total_iters == 20
    assert run.perturb.position_radius == 0.1
    assert run.path_kind == "bspline"


@pytest.mark.parametrize(
    "payload",
    [
        {},
        {"schema_version": 2},
        {"schema_version": 1, "learning_rate": 0.1},
        {"schema_version": 1, "recon": {"iters": 0}},
        {"schema_version": 1, "recon": {"mode": "dreamfusion"}},
        {"schema_version": 1, "recon": {"render": {"samples": 4}}},
        {"schema_version": 1, "grid": 64},
    ],
)
def test_invalid_configs_are_rejected(payload):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(payload)


def test_recon_config_validation():
    with pytest.raises(ConfigError):
        ReconConfig(k_ddim=0)
    with pytest.raises(ConfigError):
        ReconConfig(n_condition_views=0)


def test_config_files(tmp_path):
    assert load_run_config(None) == RunConfig()
    path = tmp_path / "run.json"
    path.write_text(json.dumps(RunConfig(seed=7).to_dict()))
    assert load_run_config(path).seed == 7
    path.write_text("{")
    with pytest.raises(ConfigError):
        load_run_config(path)


def test_scene_spec_files(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({"n_primitives": 4, "protocol": "stride"}))
    spec = load_scene_spec(path)
    assert spec == SceneSpec(n_primitives=4, protocol="stride")
    path.write_text(json.dumps({"n_primitives": 4, "lights": 2}))
    with pytest.raises(ConfigError):
        load_scene_spec(path)


def test_formatting():
    assert format_db(31.456) == "31.46 dB"
    assert format_db(float("inf")) == f"{cfg.PSNR_CAP:.2f} dB"
    assert format_db(float("nan")) == "n/a"
    assert format_ratio(0.91234567) == "0.9123"
    assert format_seconds(12.345) == "12.35s"
    assert format_seconds(75.0) == "1m 15.0s"
    assert format_loss(0.25) == "0.2500"
    assert format_loss(2.5e-5) == "2.500e-05"
    assert format_loss(0.0) == "0.0000"
    assert format_delta(3.2) == "+3.20 dB"
    assert format_delta(-0.5) == "-0.50 dB"
