# src/fem/assembly.py
import logging
import math
from typing import Callable, Iterator, Optional

import numpy as np
from scipy.sparse import csr_matrix

from .quadrature import QuadratureRule, quadrature_rule
from .space import FeFunction, FeSpace, prolongation_operator

logger = logging.getLogger(__name__)

ScalarField = Callable[[np.ndarray], np.ndarray]

DEFAULT_CHUNK = 200_000


def iter_chunks(n: int, chunk: int = DEFAULT_CHUNK) -> Iterator[slice]:
    for start in range(0, n, chunk):
        yield slice(start, min(start + chunk, n))


def _restrict_to_free(space: FeSpace, rows: np.ndarray, cols: np.ndarray, values: np.ndarray) -> csr_matrix:
    """CSR matrix over free dofs; duplicates are summed in cell order so (i,j) and (j,i) agree bitwise"""
    n = space.n_free
    dof = space.free_dof_of_vertex
    r, c = dof[rows], dof[cols]
    keep = (r >= 0) & (c >= 0)
    r, c, values = r[keep], c[keep], values[keep]

    if r.size == 0:
        return csr_matrix((n, n))
    keys = r * n + c
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
    data = np.add.reduceat(values[order], starts)
    unique = keys[starts]
    row_of, col_of = unique // n, unique % n

    indptr = np.zeros(n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum(np.bincount(row_of, minlength=n))
    matrix = csr_matrix((data, col_of, indptr), shape=(n, n))
    matrix.eliminate_zeros()
    return matrix


def _local_pairs(mesh, cell_ids):
    d1 = mesh.dim + 1
    cells = mesh.cells[cell_ids]
    rows = np.repeat(cells, d1, axis=1).ravel()
    cols = np.tile(cells, (1, d1)).ravel()
    return rows, cols


def assemble_stiffness(space: FeSpace) -> csr_matrix:
    """Stiffness matrix a(u, v) = (grad u, grad v) over the free dofs"""
    mesh = space.mesh
    grads = mesh.basis_gradients
    local = np.einsum("mkd,mld->mkl", grads, grads) * mesh.volumes[:, None, None]
    rows, cols = _local_pairs(mesh, slice(None))
    matrix = _restrict_to_free(space, rows, cols, local.ravel())
    logger.debug(f"Assembled stiffness: {matrix.shape[0]} dofs, {matrix.nnz} nonzeros")
    return matrix


def assemble_mass(space: FeSpace) -> csr_matrix:
    """Exact P1 mass matrix over the free dofs"""
    mesh = space.mesh
    d1 = mesh.dim + 1
    reference = (np.ones((d1, d1)) + np.eye(d1)) / ((d1) * (d1 + 1))
    local = mesh.volumes[:, None, None] * reference[None, :, :]
    rows, cols = _local_pairs(mesh, slice(None))
    return _restrict_to_free(space, rows, cols, local.ravel())


def evaluate_field(f: ScalarField, points: np.ndarray) -> np.ndarray:
    """Evaluate a vectorised field on points (..., dim), rejecting non-finite values"""
    flat = points.reshape(-1, points.shape[-1])
    values = np.asarray(f(flat), dtype=float).reshape(points.shape[:-1])
    bad = ~np.isfinite(values)
    if bad.any():
        index = np.unravel_index(np.argmax(bad), bad.shape)
        raise ValueError(f"source term is not finite at point {points[index].tolist()}")
    return values


def assemble_load(space: FeSpace, f: ScalarField, quad: Optional[QuadratureRule] = None,
                  chunk: int = DEFAULT_CHUNK) -> np.ndarray:
    """Load vector (f, phi_i) over the free dofs"""
    mesh = space.mesh
    quad = quad or quadrature_rule(mesh.dim, 4)
    full = np.zeros(mesh.n_vertices)
    scale = math.factorial(mesh.dim)
    for part in iter_chunks(mesh.n_cells, chunk):
        ids = np.arange(mesh.n_cells)[part]
        fq = evaluate_field(f, mesh.cell_points(ids, quad.points))
        # (m, q) x (q, k) -> (m, k)
        local = (fq * quad.weights) @ quad.points * (scale * mesh.volumes[ids])[:, None]
        full += np.bincount(mesh.cells[ids].ravel(), weights=local.ravel(), minlength=mesh.n_vertices)
    return full[space.free_vertices]


def assemble_local_rhs(patch, u_H_fine: FeFunction, f: ScalarField,
                       quad: Optional[QuadratureRule] = None,
                       exact_quad: Optional[QuadratureRule] = None) -> np.ndarray:
    """Right-hand side of the local residual problem on one patch.

    For each local free dof v: (f, phi_j v) - a(u_H, phi_j v), integrated
    over the fine cells of D_j = supp phi_j. The second term is affine on
    every fine cell and uses an exact degree-2 rule.
    """
    fine_space = patch.fine_space
    if u_H_fine.space is not fine_space:
        raise ValueError(f"patch {patch.j}: iterate does not live on the patch's fine space")
    mesh = fine_space.mesh
    quad = quad or quadrature_rule(mesh.dim, 4)
    exact_quad = exact_quad or quadrature_rule(mesh.dim, 2)

    dofs = patch.local_to_global_free_dof
    if dofs.size == 0:
        return np.zeros(0)

    cells = patch.dj_fine_cells
    cell_vertices = mesh.cells[cells]
    volumes = mesh.volumes[cells] * math.factorial(mesh.dim)
    grads = mesh.basis_gradients[cells]

    phi = patch.refinement.hat_values(patch.j, cell_vertices)
    grad_phi = np.einsum("mk,mkd->md", phi, grads)
    grad_u = np.einsum("mk,mkd->md", u_H_fine.nodal_values()[cell_vertices], grads)

    # (f, phi_j v)
    fq = evaluate_field(f, mesh.cell_points(cells, quad.points))
    phi_q = phi @ quad.points.T
    load = (fq * phi_q * quad.weights) @ quad.points

    # a(u_H, phi_j v) = grad u . (phi_j grad v + v grad phi_j)
    u_dot_v = np.einsum("md,mkd->mk", grad_u, grads)
    u_dot_phi = np.einsum("md,md->m", grad_u, grad_phi)
    phi_e = phi @ exact_quad.points.T
    stiff = u_dot_v * (phi_e @ exact_quad.weights)[:, None] \
        + u_dot_phi[:, None] * (exact_quad.weights @ exact_quad.points)[None, :]

    local = (load - stiff) * volumes[:, None]

    touched, inverse = np.unique(cell_vertices, return_inverse=True)
    summed = np.bincount(inverse.ravel(), weights=local.ravel(), minlength=touched.size)

    vertices = fine_space.free_vertices[dofs]
    pos = np.searchsorted(touched, vertices)
    pos = np.minimum(pos, touched.size - 1)
    hit = touched[pos] == vertices
    rhs = np.zeros(dofs.size)
    rhs[hit] = summed[pos[hit]]
    return rhs


def restrict_residual(fine_stiffness: csr_matrix, u_HH: FeFunction, f_load_fine: np.ndarray,
                      refinement, coarse_space: Optional[FeSpace] = None,
                      prolongation: Optional[csr_matrix] = None) -> np.ndarray:
    """Coarse right-hand side P^T (b_h - A_h w) of the coarse grid correction"""
    w = u_HH.coefficients
    if fine_stiffness.shape != (w.size, w.size) or f_load_fine.shape != w.shape:
        raise ValueError(
            f"dimension mismatch: stiffness {fine_stiffness.shape}, iterate {w.shape}, load {f_load_fine.shape}"
        )
    if prolongation is None:
        coarse_space = coarse_space or FeSpace(refinement.coarse)
        prolongation = prolongation_operator(refinement, coarse_space, u_HH.space)
    if prolongation.shape[0] != w.size:
        raise ValueError(f"prolongation has {prolongation.shape[0]} rows, iterate has {w.size} dofs")
    return prolongation.T @ (f_load_fine - fine_stiffness @ w)
