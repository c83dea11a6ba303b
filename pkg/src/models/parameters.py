from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
import json
from pathlib import Path
from typing import Any, Literal, Union, get_type_hints

import config as cfg
from ..errors import ConfigError
from .paths import PerturbSpec

Spacing = Literal["uniform", "uniform-then-disparity"]


@dataclass
class RenderParams:
    """Volume renderer parameters."""
    near: float = cfg.NEAR
    far: float = cfg.FAR
    n_samples: int = cfg.RENDER_SAMPLES
    spacing: Spacing = "uniform"
    background: tuple[float, float, float] = cfg.BACKGROUND
    jitter: bool = True
    chunk_size: int = 8192
    threads: int = 1


@dataclass
class FieldParams:
    """Voxel grid layout and initialization."""
    resolution: int = cfg.FIELD_RESOLUTION
    bbox_min: tuple[float, float, float] = cfg.FIELD_BBOX_MIN
    bbox_max: tuple[float, float, float] = cfg.FIELD_BBOX_MAX
    density_init: float = cfg.DENSITY_INIT
    color_init: float = cfg.COLOR_INIT


@dataclass
class ConditioningParams:
    """Epipolar feature renderer parameters."""
    n_samples: int = cfg.COND_SAMPLES
    n_features: int = cfg.COND_FEATURES
    beta: float = cfg.COND_BETA
    posenc_freqs: int = cfg.COND_POSENC_FREQS
    border_margin: float = cfg.COND_BORDER_MARGIN
    projection_seed: int = cfg.COND_PROJECTION_SEED
    near: float = cfg.NEAR
    far: float = cfg.FAR


@dataclass
class PriorParams:
    """Which novel-view prior to use and how imperfect it is."""
    kind: str = "none"
    blur_sigma: float = 0.0
    noise_floor: float = 0.1
    uncond_target: Literal["gray", "truth"] = "truth"
    dropout_prob: float = cfg.CONDITIONING_DROPOUT
    stochastic_dropout: bool = False


@dataclass
class Schedules:
    """Noise-level and loss-weight schedules over the optimization."""
    total_iters: int = cfg.TOTAL_ITERS
    t_min_start: float = cfg.T_MIN_START
    t_min_end: float = cfg.T_MIN_END
    t_max: float = cfg.T_MAX
    lambda_sample_start: float = cfg.LAMBDA_SAMPLE_START
    lambda_sample_end: float = cfg.LAMBDA_SAMPLE_END
    lambda_distortion: float = cfg.DISTORTION_WEIGHT
    anneal_t_min: bool = True
    fixed_t_min: float = cfg.FIXED_T_MIN
    weighting: Literal["sigma2", "constant"] = "sigma2"
    weighting_scale: float = 1.0


@dataclass
class OptimizerParams:
    """Adam hyperparameters per parameter group."""
    lr_density: float = cfg.LR_DENSITY
    lr_color: float = cfg.LR_COLOR
    beta1: float = cfg.ADAM_BETA1
    beta2: float = cfg.ADAM_BETA2
    eps: float = cfg.ADAM_EPS


@dataclass
class ReconConfig:
    """Optimization loop configuration."""
    iters: int = cfg.TOTAL_ITERS
    optimizer: OptimizerParams = field(default_factory=OptimizerParams)
    k_ddim: int = cfg.DDIM_STEPS
    cfg_scale: float = cfg.CFG_SCALE
    n_condition_views: int = cfg.N_CONDITION_VIEWS
    schedules: Schedules = field(default_factory=Schedules)
    render: RenderParams = field(default_factory=RenderParams)
    latent_size: int = cfg.LATENT_SIZE
    mode: Literal["sample", "sds"] = "sample"
    seed: int = cfg.DEFAULT_SEED
    perceptual: bool = True
    distortion_on_novel: bool = True
    render_then_downsample: bool = False
    scale_by_view_count: bool = False
    reference_views: int = cfg.REFERENCE_VIEWS
    log_every: int = 100
    progress: bool = True

    def __post_init__(self) -> None:
        if self.iters < 1:
            raise ConfigError(f"iters must be >= 1, got {self.iters}")
        if self.k_ddim < 1:
            raise ConfigError(f"k_ddim must be >= 1, got {self.k_ddim}")
        if self.n_condition_views < 1:
            raise ConfigError(f"n_condition_views must be >= 1, got {self.n_condition_views}")
        if self.mode not in ("sample", "sds"):
            raise ConfigError(f"Unknown mode '{self.mode}'")

    @property
    def effective_schedules(self) -> Schedules:
        return replace(self.schedules, total_iters=self.iters)


@dataclass
class SceneSpec:
    """Procedural scene and dataset generation."""
    n_primitives: int = 3
    seed: int = cfg.DEFAULT_SEED
    n_train: int = cfg.DEFAULT_N_TRAIN
    n_test: int = cfg.DEFAULT_N_TEST
    resolution: int = cfg.RENDER_SIZE
    radius: float = cfg.DATASET_RADIUS
    elevation: float = cfg.DATASET_ELEVATION
    fov_deg: float = cfg.DATASET_FOV_DEG
    protocol: Literal["midpoint", "stride"] = "midpoint"
    n_frames: int = 48
    stride: int = cfg.HELDOUT_STRIDE


@dataclass
class RunConfig:
    """Every section of a run, loaded from one JSON file."""
    schema_version: int = cfg.SCHEMA_VERSION
    seed: int = cfg.DEFAULT_SEED
    grid: FieldParams = field(default_factory=FieldParams)
    recon: ReconConfig = field(default_factory=ReconConfig)
    conditioning: ConditioningParams = field(default_factory=ConditioningParams)
    prior: PriorParams = field(default_factory=PriorParams)
    perturb: PerturbSpec = field(default_factory=PerturbSpec)
    scene: SceneSpec = field(default_factory=SceneSpec)
    path_kind: Literal["ellipse", "bspline"] = "ellipse"
    rescale: Literal["focus", "fixed"] = "focus"
    rescale_factor: float = cfg.FIXED_PRESCALE_FACTOR
    threads: int = 0  # 0: all cores

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("Run config must be a JSON object")
        version = data.get("schema_version")
        if version != cfg.SCHEMA_VERSION:
            raise ConfigError(f"Unsupported schema_version {version!r}, expected {cfg.SCHEMA_VERSION}")
        return _build(cls, data, "config")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _build(cls: type, data: dict[str, Any], where: str) -> Any:
    if not isinstance(data, dict):
        raise ConfigError(f"'{where}' must be an object")
    hints = get_type_hints(cls)
    known = {f.name: f for f in fields(cls) if f.init}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"Unknown key(s) in '{where}': {', '.join(unknown)}")

    kwargs: dict[str, Any] = {}
    for name, value in data.items():
        hint = hints[name]
        if is_dataclass(hint):
            kwargs[name] = _build(hint, value, f"{where}.{name}")
        elif isinstance(value, list):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid '{where}': {exc}") from exc


def load_run_config(path: Union[str, Path, None]) -> RunConfig:
    """Load a run config file; no path means all defaults."""
    if path is None:
        return RunConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Config {path} is not valid JSON: {exc}") from exc
    return RunConfig.from_dict(data)


def load_scene_spec(path: Union[str, Path]) -> SceneSpec:
    """Parse a scene spec file; unknown keys are rejected."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Scene spec {path} is not valid JSON: {exc}") from exc
    return _build(SceneSpec, data, "spec")


__all__ = [
    "RenderParams",
    "FieldParams",
    "ConditioningParams",
    "PriorParams",
    "Schedules",
    "OptimizerParams",
    "ReconConfig",
    "SceneSpec",
    "RunConfig",
    "load_run_config",
    "load_scene_spec",
]
