"""Sidebar run selection."""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import streamlit as st

from .components import list_run_dirs

NO_BASELINE = "(no baseline)"


@dataclass
class ViewerSelection:
    root: Path
    run: Optional[Path]
    baseline: Optional[Path]


def render_sidebar(default_root: str = "runs") -> ViewerSelection:
    """Pick a runs directory, the run to show and an optional baseline run."""
    st.sidebar.header("Runs")
    root = Path(st.sidebar.text_input("Runs directory", value=default_root))
    runs = list_run_dirs(root)
    if not runs:
        st.sidebar.warning(f"No fit outputs (report.json) under {root}")
        return ViewerSelection(root=root, run=None, baseline=None)

    names = [run.name for run in runs]
    run_name = st.sidebar.selectbox("Run", options=names, index=len(names) - 1)
    baseline_name = st.sidebar.selectbox(
        "Compare against",
        options=[NO_BASELINE, *[name for name in names if name != run_name]],
        index=0,
        help="Usually the run fitted with --prior none on the same dataset and seed.",
    )
    by_name = dict(zip(names, runs))
    st.sidebar.markdown("---")
    st.sidebar.caption("Read-only: runs are produced by `python cli.py fit`.")
    return ViewerSelection(
        root=root,
        run=by_name[run_name],
        baseline=None if baseline_name == NO_BASELINE else by_name[baseline_name],
    )
