# src/twogrid/solver.py
import logging
import math
from concurrent.futures import Executor, ThreadPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix

from ..analysis.norms import h1_seminorm, h1_seminorm_difference
from ..config import Settings, SolverSettings
from ..fem.assembly import (
    ScalarField,
    assemble_load,
    assemble_local_rhs,
    assemble_stiffness,
    restrict_residual,
)
from ..fem.quadrature import QuadratureRule, quadrature_rule
from ..fem.space import FeFunction, FeSpace, prolongate, prolongation_operator
from ..linalg.sparse import SolverError, solve_spd
from ..mesh.refinement import RefinementMap, refine_uniform
from ..mesh.structured import Mesh, build_structured
from ..problems.registry import Problem
from .patches import Patch, build_patches

logger = logging.getLogger(__name__)


@dataclass
class IterationConfig:
    """Stopping rule of the two-grid iteration.

    Iteration stops after max_iterations sweeps or once the relative H1
    change drops below stop_rel_change. With k_formula_enabled the sweep
    count follows K = [1/alpha_d + 0.5] with alpha_d = c/|ln H|^2 (2-D) or
    c/|ln H| (3-D), and the loop stops once k+1 > K.
    """
    max_iterations: int = 5
    stop_rel_change: float = 1e-10
    k_formula_enabled: bool = False
    k_constant: float = 1.0

    def __post_init__(self):
        if isinstance(self.max_iterations, bool) or not isinstance(self.max_iterations, int) \
                or self.max_iterations < 1:
            raise ValueError(f"max_iterations must be an integer >= 1, got {self.max_iterations!r}")
        if not self.stop_rel_change >= 0.0:
            raise ValueError(f"stop_rel_change must be nonnegative, got {self.stop_rel_change}")
        if not self.k_constant > 0.0:
            raise ValueError(f"k_constant must be positive, got {self.k_constant}")

    def k_value(self, dim: int, H: float) -> int:
        log_h = abs(math.log(H))
        alpha = self.k_constant / log_h**2 if dim == 2 else self.k_constant / log_h
        return int(math.floor(1.0 / alpha + 0.5))

    def resolve_max_iterations(self, dim: int, H: float) -> int:
        """Number of sweeps to run at most"""
        if not self.k_formula_enabled:
            return self.max_iterations
        return self.k_value(dim, H) + 1


@dataclass
class IterationRecord:
    """One sweep; the reference errors are energy (H1 seminorm) distances whatever norm the sweep reports"""
    iteration: int
    w_hat_norm: float
    correction_norm: float
    change_norm: float
    rel_change: float
    h1_err_ref_intermediate: Optional[float] = None
    h1_err_ref_final: Optional[float] = None


@dataclass(eq=False)
class Discretization:
    """Everything shared by the coarse solve, the fine reference and the sweeps"""
    problem: Problem = field(repr=False)
    H_n: int
    ratio: int
    coarse: Mesh = field(repr=False)
    fine: Mesh = field(repr=False)
    refinement: RefinementMap = field(repr=False)
    coarse_space: FeSpace = field(repr=False)
    fine_space: FeSpace = field(repr=False)
    coarse_stiffness: csr_matrix = field(repr=False)
    fine_stiffness: csr_matrix = field(repr=False)
    fine_load: np.ndarray = field(repr=False)
    prolongation: csr_matrix = field(repr=False)
    patches: List[Patch] = field(repr=False)
    settings: Settings = field(default_factory=Settings, repr=False)

    @property
    def dim(self) -> int:
        return self.coarse.dim

    @property
    def H(self) -> float:
        return self.coarse.h

    @property
    def h(self) -> float:
        return self.fine.h

    @property
    def load_rule(self) -> QuadratureRule:
        return quadrature_rule(self.dim, self.settings.quadrature.load_degree)

    @property
    def local_stiffness_rule(self) -> QuadratureRule:
        return quadrature_rule(self.dim, self.settings.quadrature.local_stiffness_degree)


@dataclass
class TwoGridState:
    """Iterates of the most recent sweep.

    u_final = u_H_image + w_hat + prolongate(E_H) holds after each sweep.
    """
    discretization: Discretization = field(repr=False)
    u_H: FeFunction = field(repr=False)
    u_H_image: FeFunction = field(repr=False)
    w_hat: FeFunction = field(repr=False)
    E_H: FeFunction = field(repr=False)
    u_intermediate: FeFunction = field(repr=False)
    u_final: FeFunction = field(repr=False)
    first_intermediate: Optional[FeFunction] = field(default=None, repr=False)
    history: List[IterationRecord] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.history)


def _solve(A: csr_matrix, b: np.ndarray, solver: SolverSettings):
    return solve_spd(A, b, rel_tol=solver.rel_tol, max_iter=solver.max_iter_factor * max(1, b.size),
                     method=solver.method)


def discretize(problem: Problem, H_n: int, ratio: int, settings: Optional[Settings] = None) -> Discretization:
    """Build meshes, spaces, matrices, the fine load and the patches once"""
    settings = settings or Settings()
    coarse = build_structured(problem.dim, H_n)
    fine, refinement = refine_uniform(coarse, ratio)
    coarse_space, fine_space = FeSpace(coarse), FeSpace(fine)

    load_rule = quadrature_rule(problem.dim, settings.quadrature.load_degree)
    fine_load = assemble_load(fine_space, problem.f, load_rule, chunk=settings.runtime.chunk_cells)
    disc = Discretization(
        problem=problem,
        H_n=H_n,
        ratio=ratio,
        coarse=coarse,
        fine=fine,
        refinement=refinement,
        coarse_space=coarse_space,
        fine_space=fine_space,
        coarse_stiffness=assemble_stiffness(coarse_space),
        fine_stiffness=assemble_stiffness(fine_space),
        fine_load=fine_load,
        prolongation=prolongation_operator(refinement, coarse_space, fine_space),
        patches=build_patches(coarse, fine, refinement, fine_space),
        settings=settings,
    )
    logger.info(f"Discretized {problem.name} dim={problem.dim}: H=1/{H_n}, h=1/{fine.n}, "
                f"{coarse_space.n_free} coarse and {fine_space.n_free} fine dofs")
    return disc


def solve_coarse(problem: Problem, coarse_space: FeSpace, stiffness: Optional[csr_matrix] = None,
                 quad: Optional[QuadratureRule] = None, solver: Optional[SolverSettings] = None) -> FeFunction:
    """Standard Galerkin solution on the coarse space"""
    solver = solver or SolverSettings()
    stiffness = assemble_stiffness(coarse_space) if stiffness is None else stiffness
    load = assemble_load(coarse_space, problem.f, quad)
    result = _solve(stiffness, load, solver)
    logger.info(f"Coarse solve: {coarse_space.n_free} dofs, {result.iterations} iterations")
    return FeFunction(coarse_space, result.x)


def _solve_patch(patch: Patch, u_H_fine: FeFunction, f: ScalarField, fine_stiffness: csr_matrix,
                 quad: Optional[QuadratureRule], exact_quad: Optional[QuadratureRule],
                 solver: SolverSettings) -> np.ndarray:
    if patch.n_local == 0:
        return np.zeros(0)
    rhs = assemble_local_rhs(patch, u_H_fine, f, quad, exact_quad)
    try:
        result = _solve(patch.local_matrix(fine_stiffness), rhs, solver)
    except SolverError as e:
        raise SolverError(f"patch {patch.j}: {e}", iterations=e.iterations, residual=e.residual,
                          patch=patch.j) from e
    logger.debug(f"Patch {patch.j}: {patch.n_local} local dofs, {result.iterations} iterations")
    return result.x


def local_solve_all(patches: Sequence[Patch], u_H_fine: FeFunction, f: ScalarField, fine_stiffness: csr_matrix,
                    executor: Optional[Executor] = None, quad: Optional[QuadratureRule] = None,
                    exact_quad: Optional[QuadratureRule] = None,
                    solver: Optional[SolverSettings] = None) -> FeFunction:
    """Solve every local residual problem and superpose the zero extensions.

    Contributions are added in ascending patch order whatever the executor,
    so the result does not depend on the thread count.
    """
    solver = solver or SolverSettings()
    ordered = sorted(patches, key=lambda p: p.j)

    def task(patch: Patch) -> np.ndarray:
        return _solve_patch(patch, u_H_fine, f, fine_stiffness, quad, exact_quad, solver)

    if executor is None:
        solutions = map(task, ordered)
    else:
        solutions = executor.map(task, ordered)

    total = np.zeros(u_H_fine.space.n_free)
    for patch, local in zip(ordered, solutions):
        if local.size:
            patch.zero_extend(local, out=total)
    return FeFunction(u_H_fine.space, total)


def coarse_correction(u_HH: FeFunction, fine_stiffness: csr_matrix, fine_load: np.ndarray,
                      coarse_stiffness: csr_matrix, refinement: RefinementMap,
                      coarse_space: Optional[FeSpace] = None, prolongation: Optional[csr_matrix] = None,
                      solver: Optional[SolverSettings] = None) -> FeFunction:
    """Coarse solve of the residual of the intermediate solution"""
    solver = solver or SolverSettings()
    coarse_space = coarse_space or FeSpace(refinement.coarse)
    rhs = restrict_residual(fine_stiffness, u_HH, fine_load, refinement, coarse_space, prolongation)
    result = _solve(coarse_stiffness, rhs, solver)
    return FeFunction(coarse_space, result.x)


def two_grid_step(disc: Discretization, u_fine: FeFunction,
                  executor: Optional[Executor] = None) -> Tuple[FeFunction, FeFunction, FeFunction, FeFunction]:
    """One sweep from a fine iterate: returns (w_hat, u_intermediate, E_H, u_next)"""
    solver = disc.settings.solver
    w_hat = local_solve_all(disc.patches, u_fine, disc.problem.f, disc.fine_stiffness, executor,
                            disc.load_rule, disc.local_stiffness_rule, solver)
    u_intermediate = u_fine + w_hat
    E_H = coarse_correction(u_intermediate, disc.fine_stiffness, disc.fine_load, disc.coarse_stiffness,
                            disc.refinement, disc.coarse_space, disc.prolongation, solver)
    u_next = u_intermediate + FeFunction(disc.fine_space, disc.prolongation @ E_H.coefficients)
    return w_hat, u_intermediate, E_H, u_next


def _relative_change(change: float, size: float) -> float:
    if change == 0.0:
        return 0.0
    return change / size if size > 0.0 else math.inf


def iterate(problem: Problem, H_n: int, ratio: int, config: Optional[IterationConfig] = None,
            settings: Optional[Settings] = None, reference: Optional[FeFunction] = None,
            disc: Optional[Discretization] = None, executor: Optional[Executor] = None) -> TwoGridState:
    """Coarse solve followed by two-grid sweeps until the stopping rule fires"""
    config = config or IterationConfig()
    settings = settings or (disc.settings if disc is not None else Settings())
    if disc is None:
        disc = discretize(problem, H_n, ratio, settings)
    elif disc.H_n != H_n or disc.ratio != ratio or disc.problem is not problem:
        raise ValueError("discretization does not match problem, H_n and ratio")
    if reference is not None and reference.space is not disc.fine_space:
        raise ValueError("reference solution must live on the discretization's fine space")

    u_H = solve_coarse(problem, disc.coarse_space, disc.coarse_stiffness, disc.load_rule, settings.solver)
    u_k = prolongate(u_H, disc.refinement, disc.fine_space)
    max_sweeps = config.resolve_max_iterations(disc.dim, disc.H)

    threads = settings.runtime.threads
    owned = ThreadPoolExecutor(max_workers=threads) if executor is None and threads > 1 else None
    state = None
    with owned or nullcontext():
        pool = executor or owned
        for k in range(max_sweeps):
            w_hat, u_intermediate, E_H, u_next = two_grid_step(disc, u_k, pool)

            change = h1_seminorm_difference(u_next, u_k, disc.fine_stiffness)
            rel_change = _relative_change(change, h1_seminorm(u_next, disc.fine_stiffness))
            record = IterationRecord(
                iteration=k + 1,
                w_hat_norm=h1_seminorm(w_hat, disc.fine_stiffness),
                correction_norm=h1_seminorm(E_H, disc.coarse_stiffness),
                change_norm=change,
                rel_change=rel_change,
            )
            if reference is not None:
                record.h1_err_ref_intermediate = h1_seminorm_difference(reference, u_intermediate,
                                                                        disc.fine_stiffness)
                record.h1_err_ref_final = h1_seminorm_difference(reference, u_next, disc.fine_stiffness)
            if not all(np.isfinite([record.w_hat_norm, record.correction_norm, change])):
                raise FloatingPointError(f"non-finite norm in sweep {k + 1}: {record}")

            if state is None:
                state = TwoGridState(disc, u_H, u_k, w_hat, E_H, u_intermediate, u_next,
                                     first_intermediate=u_intermediate)
            else:
                state.u_H_image, state.w_hat, state.E_H = u_k, w_hat, E_H
                state.u_intermediate, state.u_final = u_intermediate, u_next
            state.history.append(record)
            logger.info(f"Sweep {k + 1}: |grad w_hat|={record.w_hat_norm:.4e}, "
                        f"|grad E_H|={record.correction_norm:.4e}, relative change {rel_change:.3e}")

            u_k = u_next
            if rel_change < config.stop_rel_change:
                break
        else:
            if not config.k_formula_enabled:
                logger.warning(f"Stopped after max_iterations={max_sweeps} with relative change "
                               f"{state.history[-1].rel_change:.3e} >= {config.stop_rel_change:.1e}")
    return state
