"""Custom CSS for the run viewer."""

CUSTOM_CSS = """
<style>
:root {
    --fv-ink: #1f2933;
    --fv-muted: #616e7c;
    --fv-rule: #d9e2ec;
    --fv-accent: #2680c2;
    --fv-gain: #27ab83;
    --fv-loss: #d64545;
}

/* Cards in the two run columns line up row by row */
.metric-container {
    min-height: 104px;
    display: flex;
    flex-direction: column;
    justify-content: center;
    gap: 0.3rem;
    padding: 0.9rem 1.1rem;
    margin-bottom: 0.9rem;
    border: 1px solid var(--fv-rule);
    border-left: 4px solid var(--fv-rule);
    border-radius: 6px;
    background: #fff;
}

.metric-title {
    font-size: 0.8rem;
    text-transform: uppercase;
    letter-spacing: 0.06em;
    color: var(--fv-muted);
}

.metric-value {
    font-family: ui-monospace, SFMono-Regular, Menlo, monospace;
    font-size: 1.5rem;
    font-weight: 700;
    color: var(--fv-ink);
}

.metric-delta {
    font-size: 0.85rem;
    font-weight: 600;
}

.metric-subtitle {
    font-size: 0.85rem;
    color: var(--fv-muted);
}

.metric-highlight { border-left-color: var(--fv-accent); }
.metric-highlight .metric-value { color: var(--fv-accent); }
.metric-gain { border-left-color: var(--fv-gain); }
.metric-gain .metric-delta { color: var(--fv-gain); }
.metric-loss { border-left-color: var(--fv-loss); }
.metric-loss .metric-delta { color: var(--fv-loss); }

.run-header {
    font-family: ui-monospace, SFMono-Regular, Menlo, monospace;
    font-size: 1.15em;
    font-weight: 600;
    margin-bottom: 0.8rem;
    padding-bottom: 0.4rem;
    border-bottom: 1px solid var(--fv-rule);
}

.reference-hero {
    display: flex;
    align-items: center;
    gap: 1rem;
    margin: 1.2rem 0;
    padding: 1.2rem 1.4rem;
    border-radius: 8px;
    border: 1px solid var(--fv-rule);
    background: #f5f7fa;
}

.reference-hero-icon { font-size: 2.2rem; }
.reference-hero-content h3 { margin: 0; font-size: 1.3rem; color: var(--fv-ink); }
.reference-hero-content p { margin: 0; color: var(--fv-muted); }

.reference-card {
    min-height: 92px;
    display: flex;
    align-items: center;
    justify-content: center;
    padding: 0.8rem;
    text-align: center;
    border: 1px solid var(--fv-rule);
    border-radius: 6px;
    background: #fff;
}

.reference-card.reference-card-selected { border-color: var(--fv-accent); }

.reference-card-body {
    margin: 0;
    font-size: 0.9rem;
    color: var(--fv-muted);
}
</style>
"""


def apply_custom_styles():
    """Inject the viewer's CSS into the page."""
    import streamlit as st

    st.markdown(CUSTOM_CSS, unsafe_allow_html=True)
