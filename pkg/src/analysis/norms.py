# src/analysis/norms.py
import logging
import math
from typing import Callable, Optional

import numpy as np
from scipy.sparse import csr_matrix

from ..fem.assembly import DEFAULT_CHUNK, assemble_load, assemble_stiffness, iter_chunks
from ..fem.quadrature import QuadratureRule, quadrature_rule
from ..fem.space import FeFunction, FeSpace, cell_gradients
from ..linalg.sparse import solve_spd

logger = logging.getLogger(__name__)

MIN_ERROR_DEGREE = 5


def _error_rule(dim: int, quad: Optional[QuadratureRule]) -> QuadratureRule:
    quad = quad or quadrature_rule(dim, MIN_ERROR_DEGREE)
    if quad.degree < MIN_ERROR_DEGREE:
        raise ValueError(f"error norms need a quadrature rule of degree >= {MIN_ERROR_DEGREE}, got {quad.degree}")
    return quad


def _finite(values: np.ndarray, points: np.ndarray, what: str) -> np.ndarray:
    bad = ~np.isfinite(values)
    if bad.any():
        index = np.unravel_index(np.argmax(bad), bad.shape)
        raise ValueError(f"{what} is not finite near point {points[index[:2]].tolist()}")
    return values


def h1_seminorm_error(approx: FeFunction, exact_gradient: Callable[[np.ndarray], np.ndarray],
                      quad: Optional[QuadratureRule] = None, chunk: int = DEFAULT_CHUNK) -> float:
    """||grad(u - approx)||_0 with the exact gradient sampled at quadrature points"""
    mesh = approx.space.mesh
    quad = _error_rule(mesh.dim, quad)
    scale = math.factorial(mesh.dim)
    total = 0.0
    for part in iter_chunks(mesh.n_cells, chunk):
        ids = np.arange(mesh.n_cells)[part]
        points = mesh.cell_points(ids, quad.points)
        exact = np.asarray(exact_gradient(points.reshape(-1, mesh.dim)), dtype=float).reshape(points.shape)
        _finite(exact, points, "exact gradient")
        diff = exact - cell_gradients(approx, ids)[:, None, :]
        total += float(((diff**2).sum(axis=2) @ quad.weights) @ (scale * mesh.volumes[ids]))
    return math.sqrt(total)


def l2_error(approx: FeFunction, exact: Callable[[np.ndarray], np.ndarray],
             quad: Optional[QuadratureRule] = None, chunk: int = DEFAULT_CHUNK) -> float:
    """||u - approx||_0 with u sampled at quadrature points"""
    mesh = approx.space.mesh
    quad = _error_rule(mesh.dim, quad)
    scale = math.factorial(mesh.dim)
    nodal = approx.nodal_values()
    total = 0.0
    for part in iter_chunks(mesh.n_cells, chunk):
        ids = np.arange(mesh.n_cells)[part]
        points = mesh.cell_points(ids, quad.points)
        values = np.asarray(exact(points.reshape(-1, mesh.dim)), dtype=float).reshape(points.shape[:2])
        _finite(values, points, "exact solution")
        diff = values - nodal[mesh.cells[ids]] @ quad.points.T
        total += float(((diff**2) @ quad.weights) @ (scale * mesh.volumes[ids]))
    return math.sqrt(total)


def _quadratic_form_norm(x: np.ndarray, matrix: csr_matrix) -> float:
    return math.sqrt(max(0.0, float(x @ (matrix @ x))))


def h1_seminorm(a: FeFunction, stiffness: csr_matrix) -> float:
    return _quadratic_form_norm(a.coefficients, stiffness)


def h1_seminorm_difference(a: FeFunction, b: FeFunction, stiffness: csr_matrix) -> float:
    """Exact ||grad(a - b)||_0 for two functions on the same space"""
    return _quadratic_form_norm((a - b).coefficients, stiffness)


def l2_difference(a: FeFunction, b: FeFunction, mass: csr_matrix) -> float:
    """Exact ||a - b||_0 for two functions on the same space"""
    return _quadratic_form_norm((a - b).coefficients, mass)


def solve_fine_reference(problem, fine_space: FeSpace,
                         stiffness: Optional[csr_matrix] = None, load: Optional[np.ndarray] = None,
                         rel_tol: float = 1e-12, method: str = 'cg',
                         max_iter_factor: int = 20) -> FeFunction:
    """Standard Galerkin solution on the fine space"""
    stiffness = assemble_stiffness(fine_space) if stiffness is None else stiffness
    load = assemble_load(fine_space, problem.f) if load is None else load
    result = solve_spd(stiffness, load, rel_tol=rel_tol, max_iter=max_iter_factor * max(1, load.size),
                       method=method)
    logger.info(f"Fine reference solve: {load.size} dofs, {result.iterations} iterations")
    return FeFunction(fine_space, result.x)
