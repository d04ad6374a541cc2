# src/fem/__init__.py
"""P1 finite-element spaces, quadrature and assembly"""
from .space import (
    FeSpace,
    FeFunction,
    evaluate,
    gradient_on_cell,
    cell_gradients,
    prolongate,
    prolongation_operator,
)
from .quadrature import QuadratureRule, quadrature_rule, default_rules
from .assembly import (
    assemble_stiffness,
    assemble_mass,
    assemble_load,
    assemble_local_rhs,
    restrict_residual,
    evaluate_field,
)

__all__ = [
    'FeSpace', 'FeFunction', 'evaluate', 'gradient_on_cell', 'cell_gradients',
    'prolongate', 'prolongation_operator',
    'QuadratureRule', 'quadrature_rule', 'default_rules',
    'assemble_stiffness', 'assemble_mass', 'assemble_load', 'assemble_local_rhs',
    'restrict_residual', 'evaluate_field',
]
