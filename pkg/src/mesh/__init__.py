# src/mesh/__init__.py
"""Structured simplicial meshes and nested refinement"""
from .structured import Mesh, build_structured
from .refinement import RefinementMap, refine_uniform
from .submesh import extract_submesh

__all__ = ['Mesh', 'build_structured', 'RefinementMap', 'refine_uniform', 'extract_submesh']
