# src/problems/__init__.py
"""Poisson test problems on the unit square and cube"""
from .registry import PROBLEM_IDS, Problem, get

__all__ = ['PROBLEM_IDS', 'Problem', 'get']
