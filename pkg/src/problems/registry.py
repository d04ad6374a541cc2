# src/problems/registry.py
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np

ScalarField = Callable[[np.ndarray], np.ndarray]
VectorField = Callable[[np.ndarray], np.ndarray]

PROBLEM_IDS = ('example1', 'example2')


@dataclass(frozen=True)
class Problem:
    """-Laplace(u) = f on the unit square/cube with u = 0 on the boundary.

    Fields are vectorised over points of shape (m, dim); exact_grad_u returns
    (m, dim).
    """
    name: str
    dim: int
    f: ScalarField
    exact_u: Optional[ScalarField] = None
    exact_grad_u: Optional[VectorField] = None

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if (self.exact_u is None) != (self.exact_grad_u is None):
            raise ValueError(f"problem '{self.name}': exact_u and exact_grad_u must be given together")

    @property
    def has_exact_solution(self) -> bool:
        return self.exact_u is not None


# polynomial factors of the smooth solution and their derivatives
def _x_factor(t):
    return t**2 - 2 * t**3 + t**4, 2 * t - 6 * t**2 + 4 * t**3, 2 - 12 * t + 12 * t**2


def _y_factor(t):
    return t - 3 * t**2 + 2 * t**3, 1 - 6 * t + 6 * t**2, -6 + 12 * t


def _z_factor(t):
    return t**3 - t, 3 * t**2 - 1, 6 * t


def _smooth_factors(points: np.ndarray):
    factors = [_x_factor(points[:, 0]), _y_factor(points[:, 1])]
    if points.shape[1] == 3:
        factors.append(_z_factor(points[:, 2]))
    return factors


def _smooth_u(points: np.ndarray) -> np.ndarray:
    return 100.0 * np.prod([value for value, _, _ in _smooth_factors(points)], axis=0)


def _smooth_grad(points: np.ndarray) -> np.ndarray:
    factors = _smooth_factors(points)
    columns = []
    for k in range(len(factors)):
        terms = [d1 if i == k else value for i, (value, d1, _) in enumerate(factors)]
        columns.append(100.0 * np.prod(terms, axis=0))
    return np.stack(columns, axis=1)


def _smooth_f(points: np.ndarray) -> np.ndarray:
    factors = _smooth_factors(points)
    laplacian = np.zeros(points.shape[0])
    for k in range(len(factors)):
        laplacian += np.prod([d2 if i == k else value for i, (value, _, d2) in enumerate(factors)], axis=0)
    return -100.0 * laplacian


def _log_f(points: np.ndarray) -> np.ndarray:
    x, y = points[:, 0], points[:, 1]
    arg = (x + 0.1) * (np.sin(np.pi * y) + 1.0)
    if points.shape[1] == 3:
        z = points[:, 2]
        arg = arg * (z + 0.1) * (np.sin(np.pi * z) + 1.0)
    return 70.0 * np.log(arg)


_REGISTRY: Dict[str, Tuple[ScalarField, Optional[ScalarField], Optional[VectorField]]] = {
    'example1': (_smooth_f, _smooth_u, _smooth_grad),
    'example2': (_log_f, None, None),
}


def get(problem_id: str, dim: int) -> Problem:
    """Look up a test problem by id and dimension"""
    if problem_id not in _REGISTRY:
        raise ValueError(f"unknown problem id '{problem_id}', expected one of {PROBLEM_IDS}")
    f, u, grad = _REGISTRY[problem_id]
    return Problem(name=problem_id, dim=dim, f=f, exact_u=u, exact_grad_u=grad)
