# src/components/__init__.py
"""UI component modules"""
from .convergence_view import ConvergenceView
from .patch_view import PatchView

__all__ = ['ConvergenceView', 'PatchView']
