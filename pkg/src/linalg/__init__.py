# src/linalg/__init__.py
"""Sparse storage helpers and the SPD solver"""
from .sparse import SolverError, SolveResult, finalize, spmv, solve_spd

__all__ = ['SolverError', 'SolveResult', 'finalize', 'spmv', 'solve_spd']
