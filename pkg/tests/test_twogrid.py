# tests/test_twogrid.py
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np
import pytest

from src.analysis import h1_seminorm_difference, h1_seminorm_error, solve_fine_reference
from src.config import Settings
from src.fem import FeFunction, assemble_local_rhs, prolongate
from src.linalg import solve_spd
from src.problems import get
from src.twogrid import (
    IterationConfig,
    coarse_correction,
    discretize,
    iterate,
    local_solve_all,
    solve_coarse,
    two_grid_step,
)

from conftest import zero_problem


@pytest.fixture(scope="module")
def disc_2d():
    return discretize(get('example1', 2), 4, 4)


@pytest.fixture(scope="module")
def reference_2d(disc_2d):
    return solve_fine_reference(disc_2d.problem, disc_2d.fine_space, disc_2d.fine_stiffness, disc_2d.fine_load)


def test_iteration_config_validation():
    with pytest.raises(ValueError):
        IterationConfig(max_iterations=0)
    with pytest.raises(ValueError):
        IterationConfig(stop_rel_change=-1.0)
    assert IterationConfig().resolve_max_iterations(2, 1 / 16) == 5


def test_k_formula():
    config = IterationConfig(k_formula_enabled=True, k_constant=1.0)
    # |ln 16|^2 = 7.69 -> K = 8 ; |ln 8| = 2.08 -> K = 2
    assert config.k_value(2, 1 / 16) == 8
    assert config.k_value(3, 1 / 8) == 2
    assert config.resolve_max_iterations(3, 1 / 8) == 3


def test_coarse_solve_of_zero_source(disc_2d):
    u_H = solve_coarse(zero_problem(2), disc_2d.coarse_space)
    np.testing.assert_array_equal(u_H.coefficients, 0.0)


def test_local_rhs_sum_vanishes_at_fine_solution(disc_2d, reference_2d):
    f = disc_2d.problem.f
    total = np.zeros(disc_2d.fine_space.n_free)
    largest = 0.0
    for patch in disc_2d.patches:
        local = assemble_local_rhs(patch, reference_2d, f)
        largest = max(largest, np.abs(local).max(initial=0.0))
        patch.zero_extend(local, out=total)
    scale = np.abs(disc_2d.fine_load).max()
    assert np.abs(total).max() <= 1e-10 * scale
    # phi_j v is not a fine P1 function, so single patches keep a residual
    assert largest > 1e-6 * scale


def test_local_solves_of_zero_data(disc_2d):
    zero = zero_problem(2)
    w_hat = local_solve_all(disc_2d.patches, disc_2d.fine_space.zero(), zero.f, disc_2d.fine_stiffness)
    np.testing.assert_array_equal(w_hat.coefficients, 0.0)


def test_local_solves_independent_of_threads(disc_2d):
    u_H = solve_coarse(disc_2d.problem, disc_2d.coarse_space)
    u_fine = FeFunction(disc_2d.fine_space, disc_2d.prolongation @ u_H.coefficients)
    serial = local_solve_all(disc_2d.patches, u_fine, disc_2d.problem.f, disc_2d.fine_stiffness)
    with ThreadPoolExecutor(max_workers=8) as pool:
        threaded = local_solve_all(disc_2d.patches, u_fine, disc_2d.problem.f, disc_2d.fine_stiffness, pool)
    np.testing.assert_array_equal(serial.coefficients, threaded.coefficients)


def test_coarse_correction_vanishes_at_fine_solution(disc_2d, reference_2d):
    E_H = coarse_correction(reference_2d, disc_2d.fine_stiffness, disc_2d.fine_load, disc_2d.coarse_stiffness,
                            disc_2d.refinement, disc_2d.coarse_space)
    assert np.abs(E_H.coefficients).max() <= 1e-9


def test_coarse_correction_of_zero_iterate(disc_2d):
    zero_load = np.zeros(disc_2d.fine_space.n_free)
    E_H = coarse_correction(disc_2d.fine_space.zero(), disc_2d.fine_stiffness, zero_load,
                            disc_2d.coarse_stiffness, disc_2d.refinement, disc_2d.coarse_space)
    np.testing.assert_array_equal(E_H.coefficients, 0.0)

    E_H = coarse_correction(disc_2d.fine_space.zero(), disc_2d.fine_stiffness, disc_2d.fine_load,
                            disc_2d.coarse_stiffness, disc_2d.refinement, disc_2d.coarse_space)
    oracle = solve_spd(disc_2d.coarse_stiffness, disc_2d.prolongation.T @ disc_2d.fine_load, method='direct').x
    np.testing.assert_allclose(E_H.coefficients, oracle, rtol=1e-9, atol=1e-12)


def _fixed_point_defect(H_n: int) -> float:
    """Energy distance moved by one sweep started at u_h, relative to the coarse error"""
    disc = discretize(get('example1', 2), H_n, H_n)
    A = disc.fine_stiffness
    reference = solve_fine_reference(disc.problem, disc.fine_space, A, disc.fine_load)
    u_H = solve_coarse(disc.problem, disc.coarse_space, disc.coarse_stiffness)
    _, _, _, u_next = two_grid_step(disc, reference)
    coarse_gap = h1_seminorm_difference(reference, prolongate(u_H, disc.refinement, disc.fine_space), A)
    return h1_seminorm_difference(u_next, reference, A) / coarse_gap


def test_fine_solution_is_nearly_a_fixed_point():
    defects = [_fixed_point_defect(H_n) for H_n in (4, 8)]
    assert defects[0] < 0.05
    assert defects[1] < defects[0]


def test_zero_source_stops_after_one_sweep():
    state = iterate(zero_problem(2), 4, 2)
    assert state.iterations == 1
    assert state.history[0].rel_change == 0.0
    np.testing.assert_array_equal(state.u_final.coefficients, 0.0)


def test_state_decomposition(disc_2d):
    state = iterate(disc_2d.problem, 4, 4, IterationConfig(max_iterations=2, stop_rel_change=0.0), disc=disc_2d)
    assert state.iterations == 2
    recomposed = state.u_H_image + state.w_hat + FeFunction(disc_2d.fine_space,
                                                             disc_2d.prolongation @ state.E_H.coefficients)
    np.testing.assert_allclose(recomposed.coefficients, state.u_final.coefficients, atol=1e-13)
    np.testing.assert_allclose((state.u_intermediate - state.u_H_image).coefficients, state.w_hat.coefficients,
                               atol=1e-15)
    assert state.first_intermediate is not None


def test_sweeps_contract_towards_fine_solution(disc_2d, reference_2d):
    config = IterationConfig(max_iterations=2, stop_rel_change=0.0)
    state = iterate(disc_2d.problem, 4, 4, config, reference=reference_2d, disc=disc_2d)
    u_H_fine = FeFunction(disc_2d.fine_space, disc_2d.prolongation @ state.u_H.coefficients)
    errors = [h1_seminorm_difference(reference_2d, u_H_fine, disc_2d.fine_stiffness)]
    errors += [record.h1_err_ref_final for record in state.history]
    assert errors[1] < errors[0]
    assert errors[2] < errors[0]


def test_final_error_close_to_fine_error(disc_2d, reference_2d):
    problem = disc_2d.problem
    state = iterate(problem, 4, 4, IterationConfig(max_iterations=2), disc=disc_2d)
    coarse_error = h1_seminorm_error(state.u_H, problem.exact_grad_u)
    final_error = h1_seminorm_error(state.u_final, problem.exact_grad_u)
    fine_error = h1_seminorm_error(reference_2d, problem.exact_grad_u)
    assert final_error < coarse_error
    assert fine_error <= 1.01 * final_error


def test_runs_are_reproducible_across_thread_counts():
    problem = get('example2', 2)
    config = IterationConfig(max_iterations=2, stop_rel_change=0.0)
    serial = iterate(problem, 4, 2, config)
    settings = Settings()
    threaded = iterate(problem, 4, 2, config, replace(settings, runtime=replace(settings.runtime, threads=4)))
    np.testing.assert_array_equal(serial.u_final.coefficients, threaded.u_final.coefficients)
    assert serial.history == threaded.history


def test_direct_solver_agrees_with_cg():
    problem = get('example1', 2)
    settings = Settings()
    direct = replace(settings, solver=replace(settings.solver, method='direct'))
    config = IterationConfig(max_iterations=1)
    a = iterate(problem, 4, 2, config)
    b = iterate(problem, 4, 2, config, direct)
    np.testing.assert_allclose(a.u_final.coefficients, b.u_final.coefficients, rtol=1e-9, atol=1e-12)


def test_three_dimensional_sweep():
    problem = get('example1', 3)
    state = iterate(problem, 2, 2, IterationConfig(max_iterations=1))
    assert state.iterations == 1
    assert np.isfinite(state.u_final.coefficients).all()


def test_mismatched_discretization_rejected(disc_2d):
    with pytest.raises(ValueError):
        iterate(disc_2d.problem, 8, 4, disc=disc_2d)


@pytest.mark.slow
def test_h1_regression_h_equals_H_squared():
    problem = get('example1', 2)
    disc = discretize(problem, 16, 16)
    reference = solve_fine_reference(problem, disc.fine_space, disc.fine_stiffness, disc.fine_load)
    state = iterate(problem, 16, 16, IterationConfig(max_iterations=2, stop_rel_change=0.0),
                    reference=reference, disc=disc)
    final = h1_seminorm_error(state.u_final, problem.exact_grad_u)
    fine = h1_seminorm_error(reference, problem.exact_grad_u)
    assert final == pytest.approx(2.2041e-2, rel=0.2)
    assert final <= 1.05 * fine

    u_H_fine = FeFunction(disc.fine_space, disc.prolongation @ state.u_H.coefficients)
    errors = [h1_seminorm_difference(reference, u_H_fine, disc.fine_stiffness)]
    errors += [record.h1_err_ref_final for record in state.history]
    assert errors[1] / errors[0] < 0.5
    assert errors[2] / errors[1] < 0.5


@pytest.mark.slow
def test_three_dimensional_regression():
    problem = get('example1', 3)
    state = iterate(problem, 6, 6, IterationConfig(max_iterations=2, stop_rel_change=0.0))
    assert h1_seminorm_error(state.u_final, problem.exact_grad_u) == pytest.approx(5.9436e-2, rel=0.2)


@pytest.mark.slow
@pytest.mark.skipif((os.cpu_count() or 1) < 8, reason="needs 8 cores")
def test_local_solves_scale_with_threads():
    settings = Settings()
    settings = replace(settings, solver=replace(settings.solver, rel_tol=1e-9))
    disc = discretize(get('example1', 2), 32, 32, settings)
    u_H = solve_coarse(disc.problem, disc.coarse_space, disc.coarse_stiffness, solver=settings.solver)
    u_fine = prolongate(u_H, disc.refinement, disc.fine_space)

    def step_one(executor=None):
        start = time.perf_counter()
        w_hat = local_solve_all(disc.patches, u_fine, disc.problem.f, disc.fine_stiffness, executor,
                                disc.load_rule, disc.local_stiffness_rule, settings.solver)
        return w_hat, time.perf_counter() - start

    step_one()  # fills the per-patch dof caches
    serial, serial_seconds = step_one()
    with ThreadPoolExecutor(max_workers=8) as pool:
        threaded, threaded_seconds = step_one(pool)
    np.testing.assert_array_equal(serial.coefficients, threaded.coefficients)
    assert serial_seconds >= 3.0 * threaded_seconds
