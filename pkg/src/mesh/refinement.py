# src/mesh/refinement.py
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Tuple

import numpy as np
from scipy.sparse import csr_matrix

from .structured import Mesh, build_structured, locate_in_cube

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RefinementMap:
    """Links a coarse structured mesh to its uniform refinement.

    prolongation_cell[v] is a coarse cell containing fine vertex v and
    prolongation_barycentric[v] its barycentric coordinates in that cell.
    """
    ratio: int
    coarse: Mesh = field(repr=False)
    fine: Mesh = field(repr=False)
    fine_vertex_of_coarse_vertex: np.ndarray
    coarse_cell_of_fine_cell: np.ndarray
    prolongation_cell: np.ndarray
    prolongation_barycentric: np.ndarray

    @cached_property
    def children(self) -> np.ndarray:
        """Fine cells of every coarse cell, shape (n_coarse_cells, ratio**dim)"""
        order = np.argsort(self.coarse_cell_of_fine_cell, kind="stable")
        return order.reshape(self.coarse.n_cells, -1)

    @cached_property
    def prolongation_matrix(self) -> csr_matrix:
        """Nodal interpolation matrix (n_fine_vertices, n_coarse_vertices)"""
        d1 = self.coarse.dim + 1
        rows = np.repeat(np.arange(self.fine.n_vertices), d1)
        cols = self.coarse.cells[self.prolongation_cell].ravel()
        matrix = csr_matrix(
            (self.prolongation_barycentric.ravel(), (rows, cols)),
            shape=(self.fine.n_vertices, self.coarse.n_vertices),
        )
        matrix.eliminate_zeros()
        matrix.sort_indices()
        return matrix

    def hat_values(self, j: int, fine_vertices: np.ndarray) -> np.ndarray:
        """Values of the coarse hat function of vertex j at the given fine vertices"""
        cells = self.prolongation_cell[fine_vertices]
        match = self.coarse.cells[cells] == j
        return np.where(match, self.prolongation_barycentric[fine_vertices], 0.0).sum(axis=-1)


def refine_uniform(coarse: Mesh, ratio: int) -> Tuple[Mesh, RefinementMap]:
    """Uniform refinement of a structured mesh by an integer ratio"""
    if not isinstance(ratio, (int, np.integer)) or ratio < 1:
        raise ValueError(f"ratio must be a positive integer, got {ratio}")

    dim, n = coarse.dim, coarse.n
    fine_n = n * ratio
    built = build_structured(dim, fine_n)
    fine = Mesh(
        dim=dim,
        vertices=built.vertices,
        cells=built.cells,
        boundary_vertex=built.boundary_vertex,
        n=fine_n,
        parent=coarse,
    )

    fine_strides = (fine_n + 1) ** np.arange(dim)
    fine_vertex_of_coarse = (coarse.grid_index * ratio) @ fine_strides

    # fine vertex -> coarse cell + barycentrics, in exact lattice arithmetic
    lattice = fine.grid_index
    cube = np.minimum(lattice // ratio, n - 1)
    local = (lattice - ratio * cube) / float(ratio)
    prolong_cell, prolong_bary = locate_in_cube(dim, n, cube, local)

    # fine cell -> parent through its centroid, which is interior to the parent
    sums = lattice[fine.cells].sum(axis=1)
    scale = (dim + 1) * ratio
    parent_cube = np.minimum(sums // scale, n - 1)
    parent_local = (sums - scale * parent_cube) / float(scale)
    parent_cell, _ = locate_in_cube(dim, n, parent_cube, parent_local)

    logger.info(
        f"Refined mesh n={n} by ratio {ratio}: {fine.n_vertices} fine vertices, {fine.n_cells} fine cells"
    )
    refinement = RefinementMap(
        ratio=int(ratio),
        coarse=coarse,
        fine=fine,
        fine_vertex_of_coarse_vertex=fine_vertex_of_coarse,
        coarse_cell_of_fine_cell=parent_cell,
        prolongation_cell=prolong_cell,
        prolongation_barycentric=prolong_bary,
    )
    return fine, refinement
