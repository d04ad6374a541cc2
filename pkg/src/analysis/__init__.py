# src/analysis/__init__.py
"""Error norms, convergence orders and reports"""
from .norms import (
    h1_seminorm,
    h1_seminorm_error,
    l2_error,
    h1_seminorm_difference,
    l2_difference,
    solve_fine_reference,
)
from .orders import NORM_KINDS, order1, order2
from .report import CSV_COLUMNS, ConvergenceReport, ReportRow

__all__ = [
    'h1_seminorm', 'h1_seminorm_error', 'l2_error', 'h1_seminorm_difference', 'l2_difference',
    'solve_fine_reference', 'NORM_KINDS', 'order1', 'order2', 'CSV_COLUMNS', 'ConvergenceReport', 'ReportRow',
]
