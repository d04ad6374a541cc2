# src/config.py
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Union

import yaml

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverSettings:
    method: str = 'cg'
    rel_tol: float = 1e-12
    max_iter_factor: int = 20


@dataclass(frozen=True)
class QuadratureSettings:
    load_degree: int = 4
    error_degree: int = 5
    local_stiffness_degree: int = 2


@dataclass(frozen=True)
class RuntimeSettings:
    threads: int = 1
    chunk_cells: int = 200_000


@dataclass(frozen=True)
class LoggingSettings:
    level: str = 'INFO'
    format: str = '%(asctime)s %(levelname)s %(name)s: %(message)s'


@dataclass(frozen=True)
class OutputSettings:
    directory: str = 'results'


@dataclass(frozen=True)
class Settings:
    """Runtime settings read from config.yaml"""
    solver: SolverSettings = field(default_factory=SolverSettings)
    quadrature: QuadratureSettings = field(default_factory=QuadratureSettings)
    runtime: RuntimeSettings = field(default_factory=RuntimeSettings)
    logging: LoggingSettings = field(default_factory=LoggingSettings)
    output: OutputSettings = field(default_factory=OutputSettings)


def _check_positive_int(path: str, value: Any):
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ValueError(f"{path}: expected a positive integer, got {value!r}")


def _validate(settings: Settings):
    solver = settings.solver
    if solver.method not in ('cg', 'direct'):
        raise ValueError(f"solver.method: expected 'cg' or 'direct', got {solver.method!r}")
    if isinstance(solver.rel_tol, bool) or not isinstance(solver.rel_tol, (int, float)) \
            or not 0.0 < solver.rel_tol < 1.0:
        raise ValueError(f"solver.rel_tol: expected a number in (0, 1), got {solver.rel_tol!r}")
    _check_positive_int('solver.max_iter_factor', solver.max_iter_factor)
    for name in ('load_degree', 'error_degree', 'local_stiffness_degree'):
        _check_positive_int(f"quadrature.{name}", getattr(settings.quadrature, name))
    if settings.quadrature.error_degree < 5:
        raise ValueError(f"quadrature.error_degree: must be >= 5, got {settings.quadrature.error_degree}")
    if settings.quadrature.local_stiffness_degree < 2:
        raise ValueError("quadrature.local_stiffness_degree: must be >= 2 to integrate the local residual exactly")
    _check_positive_int('runtime.threads', settings.runtime.threads)
    _check_positive_int('runtime.chunk_cells', settings.runtime.chunk_cells)
    if logging.getLevelName(str(settings.logging.level).upper()) not in (
            logging.DEBUG, logging.INFO, logging.WARNING, logging.ERROR, logging.CRITICAL):
        raise ValueError(f"logging.level: unknown level {settings.logging.level!r}")


def settings_from_dict(raw: Dict[str, Any]) -> Settings:
    """Build Settings from a nested mapping, rejecting unknown sections and keys"""
    if not isinstance(raw, dict):
        raise ValueError(f"settings must be a mapping, got {type(raw).__name__}")
    sections = {f.name: f for f in fields(Settings)}
    values = {}
    for section, content in raw.items():
        if section not in sections:
            raise ValueError(f"{section}: unknown settings section")
        if content is None:
            continue
        if not isinstance(content, dict):
            raise ValueError(f"{section}: expected a mapping")
        section_type = sections[section].default_factory
        known = {f.name for f in fields(section_type)}
        for key in content:
            if key not in known:
                raise ValueError(f"{section}.{key}: unknown setting")
        values[section] = replace(section_type(), **content)
    settings = Settings(**values)
    _validate(settings)
    return settings


def load_settings(path: Union[str, Path] = 'config.yaml') -> Settings:
    """Load config.yaml; a missing file yields the defaults"""
    path = Path(path)
    if not path.exists():
        logger.info(f"No settings file at {path}, using defaults")
        return Settings()
    with open(path, 'r') as f:
        raw = yaml.safe_load(f) or {}
    return settings_from_dict(raw)


def configure_logging(settings: Settings):
    """Configure the root logger once from the logging section"""
    logging.basicConfig(level=str(settings.logging.level).upper(), format=settings.logging.format)
