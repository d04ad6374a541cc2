# app.py - Main Streamlit Application
import streamlit as st

from src.components.convergence_view import ConvergenceView
from src.components.patch_view import PatchView
from src.config import configure_logging, load_settings

# Page configuration
st.set_page_config(
    page_title="Two-Grid Explorer",
    layout="wide",
    initial_sidebar_state="expanded"
)


@st.cache_data
def load_cached_settings():
    """Load config.yaml once per session"""
    return load_settings('config.yaml')


def main():
    """Main application entry point"""
    st.title("Two-Grid Explorer")
    st.markdown("""
    Local-and-parallel two-grid finite element sweeps for the Poisson problem
    on the unit square and cube.
    """)

    settings = load_cached_settings()
    configure_logging(settings)

    with st.sidebar:
        st.header("Settings")
        st.metric("Solver", settings.solver.method)
        st.metric("Relative tolerance", f"{settings.solver.rel_tol:.0e}")
        st.metric("Error quadrature degree", settings.quadrature.error_degree)

    tab1, tab2 = st.tabs(["Convergence study", "Patch explorer"])

    with tab1:
        ConvergenceView(settings).render()

    with tab2:
        PatchView().render()


if __name__ == "__main__":
    main()
