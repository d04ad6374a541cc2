# src/components/convergence_view.py
import logging

import pandas as pd
import streamlit as st

from ..analysis.report import CSV_COLUMNS, ConvergenceReport
from ..config import Settings
from ..experiments.runner import run
from ..experiments.spec import SpecError, spec_from_mapping
from ..linalg.sparse import SolverError
from ..problems.registry import PROBLEM_IDS

logger = logging.getLogger(__name__)


class ConvergenceView:
    """Form mirroring the command-line flags; runs one sweep and shows its report"""

    def __init__(self, settings: Settings):
        self.settings = settings

    def render(self):
        st.header("Convergence study")

        with st.form("sweep"):
            col1, col2, col3 = st.columns(3)
            with col1:
                dim = st.selectbox("Dimension", [2, 3])
                problem = st.selectbox("Problem", list(PROBLEM_IDS))
            with col2:
                coupling = st.selectbox("Coupling", ["h2", "h32", "ratio=<k>"])
                ratio = st.number_input("Explicit ratio k", min_value=1, value=4, step=1)
                norm = st.selectbox("Norm", ["h1", "l2"])
            with col3:
                H_text = st.text_input("Coarse subdivisions H_n", value="4,8")
                max_iter = st.number_input("Max sweeps", min_value=1, value=2, step=1)
                threads = st.number_input("Threads", min_value=1, value=self.settings.runtime.threads, step=1)
            submitted = st.form_submit_button("Run")

        if submitted:
            raw = {
                'dim': dim,
                'problem': problem,
                'coupling': f"ratio={int(ratio)}" if coupling.startswith("ratio") else coupling,
                'H': H_text,
                'norm': norm,
                'max_iter': int(max_iter),
                'threads': int(threads),
            }
            try:
                spec = spec_from_mapping(raw)
            except SpecError as e:
                for problem_text in e.problems:
                    st.error(problem_text)
                return
            with st.spinner("Running sweep..."):
                try:
                    st.session_state['report'] = run(spec, self.settings, write=False)
                except (SolverError, FloatingPointError) as e:
                    logger.error(f"Sweep {spec.problem} dim={spec.dim} failed: {e}")
                    st.error(f"Solver failure: {e}")
                    return

        report = st.session_state.get('report')
        if report is not None:
            self._display_report(report)

    def _display_report(self, report: ConvergenceReport):
        frame = report.to_frame()
        st.dataframe(frame, use_container_width=True)
        st.download_button(
            "Download CSV",
            data=frame.to_csv(index=False, lineterminator="\n", columns=CSV_COLUMNS),
            file_name="convergence.csv",
            mime="text/csv",
        )

        st.subheader("Sweep history")
        for row in report.rows:
            with st.expander(f"H = 1/{row.H_n} (ratio {row.ratio})"):
                st.metric("Intermediate error", f"{row.err_intermediate:.4e}")
                st.dataframe(pd.DataFrame(row.history), use_container_width=True)
