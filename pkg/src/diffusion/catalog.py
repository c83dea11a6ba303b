from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

from ..models.parameters import PriorParams
from ..models.scene import SyntheticScene
from .base import Denoiser
from .oracle import OracleDenoiser

PriorFactory = Callable[[Optional[SyntheticScene], PriorParams, int], Optional[Denoiser]]


@dataclass(frozen=True)
class PriorPlan:
    """A named way of building the novel-view prior."""

    key: str
    label: str
    needs_scene: bool
    factory: PriorFactory
    notes: str = ""


class PriorCatalog:
    """Registry of supported priors."""

    def __init__(self, plans: Dict[str, PriorPlan], default_key: str) -> None:
        if default_key not in plans:
            raise ValueError(f"Default prior key '{default_key}' is not in the provided plan set.")
        self._plans = plans
        self._default_key = default_key

    @property
    def default_key(self) -> str:
        return self._default_key

    def available_plans(self) -> Tuple[PriorPlan, ...]:
        """Return plans sorted by key."""
        return tuple(sorted(self._plans.values(), key=lambda plan: plan.key))

    def get_plan(self, key: Optional[str] = None) -> PriorPlan:
        """Return the plan for the provided key or the default plan."""
        key = key or self._default_key
        try:
            return self._plans[key]
        except KeyError as exc:
            raise KeyError(f"Unknown prior '{key}'") from exc

    def build(
        self, key: Optional[str], scene: Optional[SyntheticScene], params: PriorParams, seed: int
    ) -> Optional[Denoiser]:
        plan = self.get_plan(key)
        if plan.needs_scene and scene is None:
            raise ValueError(f"Prior '{plan.key}' needs the ground-truth scene")
        return plan.factory(scene, params, seed)


def _oracle(scene: Optional[SyntheticScene], params: PriorParams, seed: int) -> Denoiser:
    return OracleDenoiser(
        scene,
        blur_sigma=params.blur_sigma,
        noise_floor=0.0,
        uncond_target=params.uncond_target,
        dropout_prob=params.dropout_prob,
        stochastic_dropout=params.stochastic_dropout,
        seed=seed,
    )


def _oracle_noisy(scene: Optional[SyntheticScene], params: PriorParams, seed: int) -> Denoiser:
    return OracleDenoiser(
        scene,
        blur_sigma=params.blur_sigma,
        noise_floor=params.noise_floor,
        uncond_target=params.uncond_target,
        dropout_prob=params.dropout_prob,
        stochastic_dropout=params.stochastic_dropout,
        seed=seed,
    )


DEFAULT_PRIOR_KEY = "none"

PRIOR_PLANS: Dict[str, PriorPlan] = {
    DEFAULT_PRIOR_KEY: PriorPlan(
        key=DEFAULT_PRIOR_KEY,
        label="No prior (reconstruction only)",
        needs_scene=False,
        factory=lambda scene, params, seed: None,
        notes="Baseline arm: the diffusion regularizer weight is zero.",
    ),
    "oracle": PriorPlan(
        key="oracle",
        label="Oracle prior",
        needs_scene=True,
        factory=_oracle,
        notes="Targets are exact ground-truth renders at the sampled pose.",
    ),
    "oracle-noisy": PriorPlan(
        key="oracle-noisy",
        label="Noisy oracle prior",
        needs_scene=True,
        factory=_oracle_noisy,
        notes="Ground truth corrupted by fresh Gaussian noise (std = noise_floor) on every query.",
    ),
}

# Global prior catalog
priors = PriorCatalog(PRIOR_PLANS, DEFAULT_PRIOR_KEY)

__all__ = [
    "PriorPlan",
    "PriorCatalog",
    "priors",
    "DEFAULT_PRIOR_KEY",
    "PRIOR_PLANS",
]
