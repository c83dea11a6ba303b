"""Main Streamlit application entry point."""

import streamlit as st

from src.ui.components import (
    load_loss_curve,
    load_run_summary,
    render_gallery,
    render_loss_chart,
    render_reference_library,
    render_run_column,
)
from src.ui.sidebar import render_sidebar
from src.ui.styles import apply_custom_styles


def main():
    """Main application entry point."""
    st.set_page_config(page_title="Few-View Reconstruction Runs", layout="wide")

    apply_custom_styles()
    st.title("Few-View Reconstruction Runs")

    selection = render_sidebar()

    st.markdown(
        """
        Browse finished `fit` runs: held-out quality, loss curves and renders.
        Pick a baseline in the sidebar to see what the novel-view prior bought.
        """
    )

    runs_tab, curves_tab, gallery_tab, reference_tab = st.tabs(
        ["📊 Metrics", "📈 Losses", "🖼️ Renders", "📚 Reference"]
    )

    if selection.run is None:
        with runs_tab:
            st.info("Select a directory containing fit outputs.")
    else:
        summary = load_run_summary(selection.run)
        baseline = load_run_summary(selection.baseline) if selection.baseline else None

        with runs_tab:
            if baseline is not None:
                col1, col2 = st.columns(2)
                with col1:
                    render_run_column(summary, baseline)
                with col2:
                    render_run_column(baseline)
            else:
                render_run_column(summary)

        with curves_tab:
            render_loss_chart(load_loss_curve(selection.run))

        with gallery_tab:
            render_gallery(selection.run)

    with reference_tab:
        render_reference_library()


if __name__ == "__main__":
    main()
