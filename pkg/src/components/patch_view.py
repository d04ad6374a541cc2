# src/components/patch_view.py
import logging

import pandas as pd
import streamlit as st

from ..mesh import build_structured, refine_uniform
from ..twogrid.patches import build_patches, overlap_count

logger = logging.getLogger(__name__)

# largest fine subdivision count H_n * ratio the explorer builds, per dimension
MAX_FINE_SUBDIVISIONS = {2: 512, 3: 64}


def check_patch_request(dim: int, H_n: int, ratio: int):
    """Reject mesh pairs too large to build interactively"""
    if dim not in MAX_FINE_SUBDIVISIONS:
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    if H_n < 2 or ratio < 1:
        raise ValueError(f"need H_n >= 2 and ratio >= 1, got H_n={H_n}, ratio={ratio}")
    limit = MAX_FINE_SUBDIVISIONS[dim]
    if H_n * ratio > limit:
        raise ValueError(f"fine mesh with H_n * ratio = {H_n * ratio} exceeds {limit} subdivisions in {dim}-D")


@st.cache_resource
def _patches(dim: int, H_n: int, ratio: int):
    check_patch_request(dim, H_n, ratio)
    coarse = build_structured(dim, H_n)
    fine, refinement = refine_uniform(coarse, ratio)
    return fine, build_patches(coarse, fine, refinement)


def patch_table(patches) -> pd.DataFrame:
    """Per-patch sizes: coarse cells of D_j and Omega_j, local fine dofs"""
    return pd.DataFrame({
        'j': [p.j for p in patches],
        'D_j cells': [p.dj_cells.size for p in patches],
        'Omega_j cells': [p.omega_cells.size for p in patches],
        'local dofs': [p.n_local for p in patches],
    })


class PatchView:
    """Sizes of the supports, their expansions and the overlap constant"""

    def render(self):
        st.header("Patch explorer")
        col1, col2, col3 = st.columns(3)
        with col1:
            dim = st.selectbox("Dimension", [2, 3], key="patch_dim")
        with col2:
            H_n = st.number_input("H_n", min_value=2, max_value=32, value=4, step=1)
        with col3:
            ratio = st.number_input("Ratio", min_value=1, max_value=16, value=2, step=1)

        try:
            check_patch_request(int(dim), int(H_n), int(ratio))
        except ValueError as e:
            logger.warning(f"Patch explorer request rejected: {e}")
            st.error(str(e))
            return

        fine, patches = _patches(int(dim), int(H_n), int(ratio))
        col1, col2 = st.columns(2)
        col1.metric("Patches N", len(patches))
        col2.metric("Overlap kappa", overlap_count(patches, fine))

        j = st.number_input("Coarse vertex j", min_value=0, max_value=len(patches) - 1, value=0, step=1)
        patch = patches[int(j)]
        col1, col2, col3 = st.columns(3)
        col1.metric("|D_j| (coarse cells)", patch.dj_cells.size)
        col2.metric("|Omega_j| (coarse cells)", patch.omega_cells.size)
        col3.metric("Local fine dofs", patch.n_local)

        with st.expander("All patches"):
            st.dataframe(patch_table(patches), use_container_width=True)
