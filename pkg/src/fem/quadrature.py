# src/fem/quadrature.py
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Rule on the reference simplex.

    points are barycentric (n_q, dim+1); weights sum to the reference
    volume 1/dim!. A rule of degree p integrates polynomials of total degree
    <= p exactly.
    """
    dim: int
    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def n_points(self) -> int:
        return self.weights.size

    @property
    def reference_volume(self) -> float:
        return 1.0 / math.factorial(self.dim)


@lru_cache(maxsize=None)
def quadrature_rule(dim: int, degree: int) -> QuadratureRule:
    """Collapsed (Duffy) Gauss-Jacobi product rule on the reference simplex.

    With m = ceil((degree+1)/2) points per direction the rule is exact for
    total degree 2m-1 >= degree.
    """
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    if degree < 0:
        raise ValueError(f"degree must be nonnegative, got {degree}")
    m = max(1, math.ceil((degree + 1) / 2))

    # direction k of the collapse carries the weight (1-s)^k on [0, 1]
    nodes, weights = [], []
    for k in range(dim):
        x, w = roots_jacobi(m, k, 0)
        nodes.append((1.0 + x) / 2.0)
        weights.append(w / 2.0 ** (k + 1))

    grids = np.meshgrid(*nodes, indexing="ij")
    wgrids = np.meshgrid(*weights, indexing="ij")
    s = [g.ravel() for g in grids]
    w = np.prod([g.ravel() for g in wgrids], axis=0)

    if dim == 2:
        a, b = s
        xi, eta = a * (1.0 - b), b
        ref = np.stack([xi, eta], axis=1)
    else:
        a, b, c = s
        zeta = c
        eta = b * (1.0 - c)
        xi = a * (1.0 - b) * (1.0 - c)
        ref = np.stack([xi, eta, zeta], axis=1)

    bary = np.column_stack([1.0 - ref.sum(axis=1), ref])
    return QuadratureRule(dim=dim, points=bary, weights=w, degree=degree)


def default_rules(dim: int, load_degree: int = 4, error_degree: int = 5, local_stiffness_degree: int = 2):
    """Rules used for loads, error norms and the local residual stiffness term"""
    return {
        'load': quadrature_rule(dim, load_degree),
        'error': quadrature_rule(dim, error_degree),
        'local_stiffness': quadrature_rule(dim, local_stiffness_degree),
    }
