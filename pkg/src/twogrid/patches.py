# src/twogrid/patches.py
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix

from ..fem.space import BARYCENTRIC_TOL, FeSpace
from ..mesh.refinement import RefinementMap
from ..mesh.structured import Mesh
from ..mesh.submesh import extract_submesh

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Patch:
    """Support D_j of the coarse hat at vertex j and its one-layer expansion Omega_j.

    dj_cells and omega_cells are ascending coarse cell indices. Local dofs are
    the fine free vertices strictly inside Omega_j, numbered in ascending
    global free-dof order.
    """
    j: int
    dj_cells: np.ndarray
    omega_cells: np.ndarray
    refinement: RefinementMap = field(repr=False)
    fine_space: FeSpace = field(repr=False)

    @property
    def coarse(self) -> Mesh:
        return self.refinement.coarse

    @property
    def fine(self) -> Mesh:
        return self.refinement.fine

    @property
    def fine_cells(self) -> np.ndarray:
        return np.sort(self.refinement.children[self.omega_cells].ravel())

    @property
    def dj_fine_cells(self) -> np.ndarray:
        return np.sort(self.refinement.children[self.dj_cells].ravel())

    @cached_property
    def local_to_global_free_dof(self) -> np.ndarray:
        submesh, local_to_global, _ = extract_submesh(self.fine, self.fine_cells)
        inside = local_to_global[~submesh.boundary_vertex]
        return self.fine_space.free_dof_of_vertex[inside]

    @property
    def n_local(self) -> int:
        return int(self.local_to_global_free_dof.size)

    @property
    def local_space(self) -> FeSpace:
        """P1 space on the Omega_j submesh with zero trace on its whole boundary (rebuilt on each access)"""
        submesh, _, _ = extract_submesh(self.fine, self.fine_cells)
        return FeSpace(submesh)

    def local_matrix(self, fine_stiffness: csr_matrix) -> csr_matrix:
        """Local stiffness as the submatrix of the global fine stiffness"""
        dofs = self.local_to_global_free_dof
        return fine_stiffness[dofs][:, dofs].tocsr()

    def zero_extend(self, local_values: np.ndarray, out: Optional[np.ndarray] = None) -> np.ndarray:
        """Add a local coefficient vector into a global fine free-dof vector"""
        if local_values.shape != (self.n_local,):
            raise ValueError(f"patch {self.j}: expected {self.n_local} local values, got {local_values.shape}")
        if out is None:
            out = np.zeros(self.fine_space.n_free)
        out[self.local_to_global_free_dof] += local_values
        return out


def build_patches(coarse: Mesh, fine: Mesh, refinement: RefinementMap,
                  fine_space: Optional[FeSpace] = None) -> List[Patch]:
    """One patch per coarse vertex, boundary vertices included"""
    if refinement.coarse is not coarse or refinement.fine is not fine:
        raise ValueError("build_patches needs the mesh pair linked by the refinement map")
    if fine_space is None:
        fine_space = FeSpace(fine)
    elif fine_space.mesh is not fine:
        raise ValueError("fine_space is not built on the fine mesh")

    cells_of = coarse.cells_of_vertex()
    graph = coarse.vertex_graph
    patches = []
    for j in range(coarse.n_vertices):
        members = [j, *graph.neighbors(j)]
        omega = np.unique(np.concatenate([cells_of[i] for i in members]))
        patches.append(Patch(j=j, dj_cells=cells_of[j], omega_cells=omega,
                             refinement=refinement, fine_space=fine_space))
    logger.info(f"Built {len(patches)} patches on coarse mesh n={coarse.n} (ratio {refinement.ratio})")
    return patches


def phi_value(patch: Patch, fine_cell: int, barycentric) -> float:
    """Coarse hat function of vertex j at a point given in a fine cell"""
    fine = patch.fine
    if not 0 <= fine_cell < fine.n_cells:
        raise IndexError(f"fine cell index {fine_cell} out of range [0, {fine.n_cells})")
    bary = np.asarray(barycentric, dtype=float)
    if bary.shape != (fine.dim + 1,) or abs(bary.sum() - 1.0) > BARYCENTRIC_TOL:
        raise ValueError(f"invalid barycentric coordinates {bary.tolist()}")
    parent = patch.refinement.coarse_cell_of_fine_cell[fine_cell]
    if not np.isin(parent, patch.dj_cells):
        return 0.0
    # the hat is linear on the parent cell, so its fine nodal values reproduce it
    return float(patch.refinement.hat_values(patch.j, fine.cells[fine_cell]) @ bary)


def overlap_count(patches: Sequence[Patch], fine: Mesh) -> int:
    """kappa: the largest number of patches sharing one fine cell"""
    counts = np.zeros(fine.n_cells, dtype=np.int64)
    for patch in patches:
        if patch.fine is not fine:
            raise ValueError(f"patch {patch.j} is not built on the given fine mesh")
        counts[patch.fine_cells] += 1
    return int(counts.max()) if counts.size else 0
