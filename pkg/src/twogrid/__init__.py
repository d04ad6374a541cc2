# src/twogrid/__init__.py
"""Local-and-parallel two-grid iteration"""
from .patches import Patch, build_patches, phi_value, overlap_count
from .solver import (
    IterationConfig,
    IterationRecord,
    Discretization,
    TwoGridState,
    discretize,
    solve_coarse,
    local_solve_all,
    coarse_correction,
    two_grid_step,
    iterate,
)

__all__ = [
    'Patch', 'build_patches', 'phi_value', 'overlap_count',
    'IterationConfig', 'IterationRecord', 'Discretization', 'TwoGridState',
    'discretize', 'solve_coarse', 'local_solve_all', 'coarse_correction', 'two_grid_step', 'iterate',
]
