# src/experiments/runner.py
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from dataclasses import asdict, replace
from pathlib import Path
from typing import Callable, Optional

from ..analysis.norms import (
    h1_seminorm_difference,
    h1_seminorm_error,
    l2_difference,
    l2_error,
    solve_fine_reference,
)
from ..analysis.orders import order1, order2
from ..analysis.report import ConvergenceReport, ReportRow
from ..config import Settings
from ..fem.assembly import assemble_mass
from ..fem.quadrature import quadrature_rule
from ..fem.space import FeFunction, prolongate
from ..problems import registry
from ..twogrid.solver import discretize, iterate
from .spec import RunSpec, spec_to_mapping

logger = logging.getLogger(__name__)


def _safe(order: Callable[..., float], *args) -> float:
    try:
        return order(*args)
    except ValueError:
        # a zero error (e.g. an exactly reproduced solution) has no order
        return math.nan


def default_output_path(spec: RunSpec, settings: Settings) -> Path:
    if spec.out:
        return Path(spec.out)
    name = f"{spec.problem}_{spec.dim}d_{spec.coupling.replace('=', '')}_{spec.norm}.csv"
    return Path(settings.output.directory) / name


def run(spec: RunSpec, settings: Optional[Settings] = None, write: bool = True) -> ConvergenceReport:
    """Run one sweep over spec.H_values and return (and by default write) the report"""
    settings = settings or Settings()
    settings = replace(settings, runtime=replace(settings.runtime, threads=spec.threads))
    problem = registry.get(spec.problem, spec.dim)
    config = spec.iteration_config()
    error_rule = quadrature_rule(spec.dim, settings.quadrature.error_degree)
    chunk = settings.runtime.chunk_cells
    report = ConvergenceReport()

    pool = ThreadPoolExecutor(max_workers=spec.threads) if spec.threads > 1 else None
    with pool or nullcontext():
        for H_n in spec.H_values:
            ratio = spec.ratio_for(H_n)
            H = 1.0 / H_n
            logger.info(f"Running {spec.problem} dim={spec.dim} H=1/{H_n} ratio={ratio} norm={spec.norm}")

            start = time.perf_counter()
            disc = discretize(problem, H_n, ratio, settings)
            setup_seconds = time.perf_counter() - start
            reference = solve_fine_reference(problem, disc.fine_space, disc.fine_stiffness, disc.fine_load,
                                             rel_tol=settings.solver.rel_tol, method=settings.solver.method,
                                             max_iter_factor=settings.solver.max_iter_factor)
            start = time.perf_counter()
            state = iterate(problem, H_n, ratio, config, settings, reference=reference, disc=disc, executor=pool)
            seconds = setup_seconds + time.perf_counter() - start

            u_H_fine = prolongate(state.u_H, disc.refinement, disc.fine_space)
            if spec.norm == 'h1':
                def exact_error(fn: FeFunction) -> float:
                    return h1_seminorm_error(fn, problem.exact_grad_u, error_rule, chunk)
                stiffness = disc.fine_stiffness

                def reference_error(fn: FeFunction) -> float:
                    return h1_seminorm_difference(reference, fn, stiffness)
            else:
                def exact_error(fn: FeFunction) -> float:
                    return l2_error(fn, problem.exact_u, error_rule, chunk)
                mass = assemble_mass(disc.fine_space)

                def reference_error(fn: FeFunction) -> float:
                    return l2_difference(reference, fn, mass)

            ref_coarse = reference_error(u_H_fine)
            ref_final = reference_error(state.u_final)
            if problem.has_exact_solution:
                err_coarse = exact_error(state.u_H)
                err_fine_ref = exact_error(reference)
                err_final = exact_error(state.u_final)
                err_intermediate = exact_error(state.first_intermediate)
                first_order = _safe(order1, err_coarse, err_final, H, spec.norm)
                order_intermediate = _safe(order1, err_coarse, err_intermediate, H, spec.norm)
            else:
                err_coarse = ref_coarse
                err_fine_ref = math.nan
                err_final = ref_final
                err_intermediate = reference_error(state.first_intermediate)
                first_order = math.nan
                order_intermediate = _safe(order2, err_coarse, err_intermediate, H, spec.norm)

            row = ReportRow(
                dim=spec.dim,
                problem=spec.problem,
                norm=spec.norm,
                H_n=H_n,
                ratio=ratio,
                err_coarse=err_coarse,
                err_fine_ref=err_fine_ref,
                err_final=err_final,
                order1=first_order,
                order2=_safe(order2, ref_coarse, ref_final, H, spec.norm),
                iterations=state.iterations,
                seconds=seconds,
                err_intermediate=err_intermediate,
                order_intermediate=order_intermediate,
                history=[asdict(record) for record in state.history],
            )
            report.append(row)
            logger.info(f"H=1/{H_n}: coarse {err_coarse:.4e}, final {err_final:.4e}, "
                        f"order1 {row.order1:.4f}, order2 {row.order2:.4f}, "
                        f"{row.iterations} sweeps, {seconds:.1f}s")

    if write:
        csv_path = default_output_path(spec, settings)
        report.write_csv(csv_path)
        report.write_json(csv_path.with_suffix('.json'), metadata={'spec': spec_to_mapping(spec)})
    return report
