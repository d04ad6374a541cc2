# src/linalg/sparse.py
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix, issparse
from scipy.sparse.linalg import splu

logger = logging.getLogger(__name__)

SOLVER_METHODS = ('cg', 'direct')


class SolverError(RuntimeError):
    """Linear solve failed; carries the iteration count, the achieved residual and optionally the patch id"""

    def __init__(self, message: str, iterations: int = 0, residual: float = float('nan'),
                 patch: Optional[int] = None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
        self.patch = patch


@dataclass
class SolveResult:
    x: np.ndarray
    iterations: int
    residual: float
    b_norm: float

    @property
    def relative_residual(self) -> float:
        return self.residual / self.b_norm if self.b_norm > 0 else 0.0


def finalize(matrix) -> csr_matrix:
    """Canonical CSR form: sorted column indices, no duplicates, no stored zeros"""
    if not issparse(matrix):
        matrix = csr_matrix(np.asarray(matrix, dtype=float))
    matrix = csr_matrix(matrix, dtype=float, copy=True)
    matrix.sum_duplicates()
    matrix.eliminate_zeros()
    matrix.sort_indices()
    return matrix


def spmv(A: csr_matrix, x: np.ndarray) -> np.ndarray:
    """y = A x"""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or A.shape[1] != x.size:
        raise ValueError(f"dimension mismatch: matrix {A.shape}, vector {x.shape}")
    return A @ x


def _check_system(A, b: np.ndarray, rel_tol: float):
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    if b.ndim != 1 or b.size != A.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {A.shape}, right-hand side {b.shape}")
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")


def solve_spd(A: csr_matrix, b: np.ndarray, rel_tol: float = 1e-12, max_iter: Optional[int] = None,
              method: str = 'cg') -> SolveResult:
    """Solve A x = b for symmetric positive definite A.

    Accepted results satisfy ||b - A x||_2 <= rel_tol * ||b||_2. 'cg' runs
    Jacobi-preconditioned conjugate gradients (default max_iter = 20 n),
    'direct' a sparse LU factorisation.
    """
    b = np.asarray(b, dtype=float)
    _check_system(A, b, rel_tol)
    if method not in SOLVER_METHODS:
        raise ValueError(f"unknown solver method '{method}', expected one of {SOLVER_METHODS}")

    n = b.size
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return SolveResult(np.zeros(n), 0, 0.0, 0.0)

    diag = A.diagonal()
    if np.any(diag == 0.0):
        index = int(np.flatnonzero(diag == 0.0)[0])
        raise SolverError(f"zero diagonal entry at row {index}", iterations=0, residual=b_norm)

    if method == 'direct':
        return _solve_direct(A, b, b_norm, rel_tol)
    if max_iter is None:
        max_iter = 20 * n
    return _solve_pcg(A, b, b_norm, diag, rel_tol, max(1, int(max_iter)))


def _solve_direct(A, b, b_norm, rel_tol) -> SolveResult:
    try:
        x = splu(A.tocsc()).solve(b)
    except RuntimeError as e:
        raise SolverError(f"sparse LU failed: {e}", iterations=1, residual=b_norm) from e
    residual = float(np.linalg.norm(b - A @ x))
    if not residual <= rel_tol * b_norm:
        raise SolverError(
            f"direct solve residual {residual / b_norm:.3e} exceeds tolerance {rel_tol:.1e}",
            iterations=1, residual=residual,
        )
    return SolveResult(x, 1, residual, b_norm)


def _solve_pcg(A, b, b_norm, diag, rel_tol, max_iter) -> SolveResult:
    inv_diag = 1.0 / diag
    target = rel_tol * b_norm

    x = np.zeros_like(b)
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    iterations = 0
    replacements = 0
    last_true = np.inf

    while iterations < max_iter:
        Ap = A @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise SolverError(
                f"matrix is not positive definite (p'Ap = {pAp:.3e})",
                iterations=iterations, residual=float(np.linalg.norm(r)),
            )
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        iterations += 1

        if np.linalg.norm(r) <= target:
            true_r = b - A @ x
            true_norm = float(np.linalg.norm(true_r))
            if true_norm <= target:
                logger.debug(f"PCG converged: n={b.size}, {iterations} iterations, "
                             f"{replacements} residual replacements, rel residual {true_norm / b_norm:.2e}")
                return SolveResult(x, iterations, true_norm, b_norm)
            if true_norm >= last_true:
                raise SolverError(
                    f"PCG stagnated at relative residual {true_norm / b_norm:.3e} > {rel_tol:.1e} "
                    f"after {iterations} iterations",
                    iterations=iterations, residual=true_norm,
                )
            # recursive residual drifted: restart from the true one
            last_true = true_norm
            replacements += 1
            r = true_r
            z = inv_diag * r
            p = z.copy()
            rz = float(r @ z)
            continue

        z = inv_diag * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new

    residual = float(np.linalg.norm(b - A @ x))
    raise SolverError(
        f"PCG did not converge in {iterations} iterations: relative residual "
        f"{residual / b_norm:.3e} > {rel_tol:.1e}",
        iterations=iterations, residual=residual,
    )
