"""Reusable UI components for the run viewer."""

import json
from dataclasses import dataclass, field
from functools import cache
from pathlib import Path
from typing import Optional, Union

import streamlit as st

from ..recon.evaluate import EvalMetrics
from ..utils.formatting import format_db, format_delta, format_loss, format_ratio

PROJECT_ROOT = Path(__file__).resolve().parents[2]
RESOURCE_ROOT = PROJECT_ROOT / "resources"

LOSS_COLUMNS = ("recon", "sample", "distortion", "t_min", "lambda_sample")

REFERENCE_DOCS = [
    {
        "key": "method",
        "label": "Method Notes",
        "emoji": "🧭",
        "description": "How the observed-view loss and the diffusion-sampled novel-view loss fit together.",
        "path": RESOURCE_ROOT / "METHOD.md",
    },
    {
        "key": "config",
        "label": "Configuration",
        "emoji": "⚙️",
        "description": "Every run-config section, its defaults and where they come from.",
        "path": RESOURCE_ROOT / "CONFIG.md",
    },
    {
        "key": "protocol",
        "label": "Evaluation Protocol",
        "emoji": "🧪",
        "description": "Synthetic datasets, held-out view selection and the metrics reported.",
        "path": RESOURCE_ROOT / "PROTOCOL.md",
    },
]


@dataclass
class RunSummary:
    """What a finished ``fit`` directory reports."""

    name: str
    path: Path
    prior: str
    mode: str
    seed: int
    iters: int
    metrics: Optional[EvalMetrics] = None
    final: dict = field(default_factory=dict)


def list_run_dirs(root: Union[str, Path]) -> list[Path]:
    """Directories under ``root`` (or ``root`` itself) holding a report.json."""
    root = Path(root)
    if not root.is_dir():
        return []
    candidates = [root, *sorted(p for p in root.iterdir() if p.is_dir())]
    return [p for p in candidates if (p / "report.json").is_file()]


def load_run_summary(run_dir: Union[str, Path]) -> RunSummary:
    run_dir = Path(run_dir)
    report = json.loads((run_dir / "report.json").read_text(encoding="utf-8"))
    metrics = report.get("metrics")
    return RunSummary(
        name=run_dir.name,
        path=run_dir,
        prior=report.get("prior", "none"),
        mode=report.get("mode", "sample"),
        seed=int(report.get("seed", 0)),
        iters=int(report.get("iters", 0)),
        metrics=EvalMetrics.from_dict(metrics) if metrics else None,
        final=report.get("final") or {},
    )


def load_loss_curve(run_dir: Union[str, Path]) -> dict[str, list[float]]:
    """Loss-log columns keyed by name, indexed by iteration; empty when no log exists."""
    log_path = Path(run_dir) / "losses.jsonl"
    curve: dict[str, list[float]] = {name: [] for name in LOSS_COLUMNS}
    if not log_path.is_file():
        return curve
    for line in log_path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        for name in LOSS_COLUMNS:
            curve[name].append(float(record.get(name, 0.0)))
    return curve


def gallery_images(run_dir: Union[str, Path]) -> list[Path]:
    render_dir = Path(run_dir) / "renders"
    return sorted(render_dir.glob("*.png")) if render_dir.is_dir() else []


@cache
def _load_markdown(path: Path) -> str:
    """Load markdown content from disk, caching results for responsiveness."""
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError:
        return f"_Unable to locate {path.name}. Ensure the document is present in `resources/`._"


def build_metric_card_html(
    title: str,
    value: str,
    *,
    subtitle: Optional[str] = None,
    delta: Optional[str] = None,
    variant: str = "default",
) -> str:
    """Build HTML markup for a stylized metric card."""
    base_class = "metric-container"
    variant_classes = {
        "default": "",
        "highlight": "metric-highlight",
        "gain": "metric-gain",
        "loss": "metric-loss",
    }
    classes = " ".join(filter(None, [base_class, variant_classes.get(variant, "")]))

    lines: list[str] = [f'<div class="{classes}">']
    if title:
        lines.append(f'  <div class="metric-title">{title}</div>')
    if value:
        lines.append(f'  <div class="metric-value">{value}</div>')
    if delta:
        lines.append(f'  <div class="metric-delta">{delta}</div>')
    if subtitle:
        lines.append(f'  <div class="metric-subtitle">{subtitle}</div>')
    lines.append("</div>")
    return "\n".join(lines)


def render_metric_card(
    title: str,
    value: str,
    *,
    subtitle: Optional[str] = None,
    delta: Optional[str] = None,
    variant: str = "default",
) -> None:
    st.markdown(build_metric_card_html(title, value, subtitle=subtitle, delta=delta, variant=variant), unsafe_allow_html=True)


def delta_variant(delta: float) -> str:
    if delta > 0:
        return "gain"
    if delta < 0:
        return "loss"
    return "default"


def render_run_column(summary: RunSummary, baseline: Optional[RunSummary] = None) -> None:
    """Metric cards for one run, with deltas against ``baseline`` when given."""
    st.markdown(f'<div class="run-header">{summary.name}</div>', unsafe_allow_html=True)
    render_metric_card("Prior", summary.prior, subtitle=f"mode {summary.mode} · seed {summary.seed} · {summary.iters} iters")
    if summary.metrics is None:
        st.info("This run has no held-out metrics.")
        return

    psnr_delta = None
    variant = "highlight"
    if baseline is not None and baseline.metrics is not None:
        gain = summary.metrics.mean_psnr - baseline.metrics.mean_psnr
        psnr_delta = f"{format_delta(gain)} vs {baseline.name}"
        variant = delta_variant(gain)
    render_metric_card("Held-out PSNR", format_db(summary.metrics.mean_psnr), delta=psnr_delta, variant=variant)
    render_metric_card("Held-out SSIM", format_ratio(summary.metrics.mean_ssim))
    if summary.final:
        render_metric_card(
            "Final losses",
            format_loss(summary.final.get("recon", 0.0)),
            subtitle=f"sample {format_loss(summary.final.get('sample', 0.0))}",
        )

    with st.expander("Per-view metrics"):
        for view in summary.metrics.views:
            st.text(f"{view.name}: {format_db(view.psnr)}, SSIM {format_ratio(view.ssim)}")


def render_loss_chart(curve: dict[str, list[float]]) -> None:
    if not curve["recon"]:
        st.info("No loss log found for this run.")
        return
    st.line_chart({name: curve[name] for name in ("recon", "sample", "distortion")})
    st.caption("Schedules")
    st.line_chart({name: curve[name] for name in ("t_min", "lambda_sample")})


def render_gallery(run_dir: Path, columns: int = 4) -> None:
    images = gallery_images(run_dir)
    if not images:
        st.info("No held-out renders in this run.")
        return
    cols = st.columns(columns)
    for index, image_path in enumerate(images):
        with cols[index % columns]:
            st.image(str(image_path), caption=image_path.stem, use_container_width=True)


def render_reference_library() -> None:
    """Render the markdown notes kept in ``resources/``."""
    st.markdown(
        """
        <div class="reference-hero">
            <div class="reference-hero-icon">📚</div>
            <div class="reference-hero-content">
                <h3>Reference Notes</h3>
                <p>How runs are configured, what the losses do and how held-out views are scored.</p>
            </div>
        </div>
        """,
        unsafe_allow_html=True,
    )

    selected_key = st.session_state.get("reference_selected", REFERENCE_DOCS[0]["key"])
    pending_selected = selected_key

    cols = st.columns(len(REFERENCE_DOCS))
    for col, doc in zip(cols, REFERENCE_DOCS):
        with col:
            if st.button(f"{doc['emoji']} {doc['label']}", key=f"reference-card-{doc['key']}", use_container_width=True):
                pending_selected = doc["key"]
            card_class = "reference-card reference-card-selected" if doc["key"] == pending_selected else "reference-card"
            st.markdown(
                f'<div class="{card_class}"><p class="reference-card-body">{doc["description"]}</p></div>',
                unsafe_allow_html=True,
            )

    if pending_selected != selected_key:
        st.session_state["reference_selected"] = pending_selected
    selected_doc = next((doc for doc in REFERENCE_DOCS if doc["key"] == pending_selected), REFERENCE_DOCS[0])

    st.markdown("---")
    st.markdown(_load_markdown(selected_doc["path"]), unsafe_allow_html=False)
