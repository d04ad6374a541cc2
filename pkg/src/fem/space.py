# src/fem/space.py
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix

from ..mesh.refinement import RefinementMap
from ..mesh.structured import Mesh, simplex_geometry

BARYCENTRIC_TOL = 1e-12


class FeSpace:
    """Continuous P1 space with homogeneous Dirichlet values on boundary vertices"""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self.free_vertices = np.flatnonzero(~mesh.boundary_vertex)
        self.free_dof_of_vertex = np.full(mesh.n_vertices, -1, dtype=np.int64)
        self.free_dof_of_vertex[self.free_vertices] = np.arange(self.free_vertices.size)

    @property
    def n_free(self) -> int:
        return int(self.free_vertices.size)

    def is_constrained(self, vertex: int) -> bool:
        return self.free_dof_of_vertex[vertex] < 0

    def zero(self) -> "FeFunction":
        return FeFunction(self, np.zeros(self.n_free))

    def interpolate(self, u) -> "FeFunction":
        """Nodal interpolant of a vectorised scalar field (values at constrained vertices dropped)"""
        values = np.asarray(u(self.mesh.vertices[self.free_vertices]), dtype=float)
        return FeFunction(self, values)

    def __repr__(self) -> str:
        return f"FeSpace(dim={self.mesh.dim}, n={self.mesh.n}, n_free={self.n_free})"


@dataclass
class FeFunction:
    """Coefficient vector over the free dofs of a space"""
    space: FeSpace = field(repr=False)
    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (self.space.n_free,):
            raise ValueError(
                f"coefficient vector has shape {self.coefficients.shape}, expected ({self.space.n_free},)"
            )

    def nodal_values(self) -> np.ndarray:
        """Values at every mesh vertex, zero at constrained ones"""
        values = np.zeros(self.space.mesh.n_vertices)
        values[self.space.free_vertices] = self.coefficients
        return values

    def __add__(self, other: "FeFunction") -> "FeFunction":
        _check_same_space(self, other)
        return FeFunction(self.space, self.coefficients + other.coefficients)

    def __sub__(self, other: "FeFunction") -> "FeFunction":
        _check_same_space(self, other)
        return FeFunction(self.space, self.coefficients - other.coefficients)

    def __mul__(self, scalar: float) -> "FeFunction":
        return FeFunction(self.space, scalar * self.coefficients)

    __rmul__ = __mul__


def _check_same_space(a: FeFunction, b: FeFunction):
    if a.space is not b.space:
        raise ValueError("functions live on different spaces")


def _check_cell(mesh: Mesh, cell: int):
    if not 0 <= cell < mesh.n_cells:
        raise IndexError(f"cell index {cell} out of range [0, {mesh.n_cells})")


def evaluate(f: FeFunction, cell: int, barycentric) -> float:
    """Value of a P1 function at a point given by barycentric coordinates in a cell"""
    mesh = f.space.mesh
    _check_cell(mesh, cell)
    bary = np.asarray(barycentric, dtype=float)
    if bary.shape != (mesh.dim + 1,):
        raise ValueError(f"expected {mesh.dim + 1} barycentric coordinates, got shape {bary.shape}")
    if abs(bary.sum() - 1.0) > BARYCENTRIC_TOL or bary.min() < -BARYCENTRIC_TOL or bary.max() > 1 + BARYCENTRIC_TOL:
        raise ValueError(f"invalid barycentric coordinates {bary.tolist()}")
    vertices = mesh.cells[cell]
    values = np.zeros(mesh.dim + 1)
    dofs = f.space.free_dof_of_vertex[vertices]
    free = dofs >= 0
    values[free] = f.coefficients[dofs[free]]
    return float(values @ bary)


def gradient_on_cell(f: FeFunction, cell: int) -> np.ndarray:
    """Constant gradient of a P1 function on one cell"""
    mesh = f.space.mesh
    _check_cell(mesh, cell)
    vertices = mesh.cells[cell]
    _, grads = simplex_geometry(mesh.vertices[vertices][None, :, :])
    values = f.nodal_values()[vertices]
    return values @ grads[0]


def cell_gradients(f: FeFunction, cell_ids: Optional[np.ndarray] = None) -> np.ndarray:
    """Gradients of a P1 function on many cells at once, shape (m, dim)"""
    mesh = f.space.mesh
    if cell_ids is None:
        cell_ids = np.arange(mesh.n_cells)
    values = f.nodal_values()[mesh.cells[cell_ids]]
    return np.einsum("mk,mkd->md", values, mesh.basis_gradients[cell_ids])


def prolongation_operator(refinement: RefinementMap, coarse_space: FeSpace, fine_space: FeSpace) -> csr_matrix:
    """Prolongation restricted to free dofs, shape (fine n_free, coarse n_free)"""
    _check_pair(refinement, coarse_space, fine_space)
    matrix = refinement.prolongation_matrix[fine_space.free_vertices][:, coarse_space.free_vertices]
    return matrix.tocsr()


def prolongate(coarse_f: FeFunction, refinement: RefinementMap, fine_space: FeSpace) -> FeFunction:
    """Exact embedding of a coarse P1 function into the nested fine space"""
    _check_pair(refinement, coarse_f.space, fine_space)
    fine_values = refinement.prolongation_matrix @ coarse_f.nodal_values()
    return FeFunction(fine_space, fine_values[fine_space.free_vertices])


def _check_pair(refinement: RefinementMap, coarse_space: FeSpace, fine_space: FeSpace):
    if coarse_space.mesh is not refinement.coarse or fine_space.mesh is not refinement.fine:
        raise ValueError("spaces are not built on the mesh pair linked by the refinement map")
