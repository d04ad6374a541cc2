# src/experiments/__init__.py
"""Convergence sweeps driven from the command line"""
from .spec import RunSpec, SpecError, parse_spec, spec_from_mapping
from .runner import run
from .cli import main

__all__ = ['RunSpec', 'SpecError', 'parse_spec', 'spec_from_mapping', 'run', 'main']
