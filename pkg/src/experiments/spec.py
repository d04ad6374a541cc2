# src/experiments/spec.py
import argparse
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import yaml

from ..analysis.orders import NORM_KINDS
from ..problems.registry import PROBLEM_IDS
from ..twogrid.solver import IterationConfig

REQUIRED_KEYS = ('dim', 'problem', 'coupling', 'H', 'norm')
OPTIONAL_KEYS = ('max_iter', 'stop_tol', 'k_formula', 'k_constant', 'threads', 'out')


class SpecError(ValueError):
    """Invalid run specification; problems holds one 'key: message' entry per offending key"""

    def __init__(self, problems: List[str]):
        self.problems = list(problems)
        super().__init__("invalid run specification:\n  " + "\n  ".join(self.problems))


@dataclass(frozen=True)
class RunSpec:
    """A convergence sweep: one report row per coarse subdivision count in H_values"""
    dim: int
    problem: str
    coupling: str
    H_values: List[int]
    norm: str
    max_iterations: int = 5
    stop_rel_change: float = 1e-10
    k_formula: bool = False
    k_constant: float = 1.0
    threads: int = 1
    out: Optional[str] = None

    def ratio_for(self, H_n: int) -> int:
        """Refinement ratio h = H / ratio given by the coupling"""
        if self.coupling == 'h2':
            return H_n
        if self.coupling == 'h32':
            return math.isqrt(H_n)
        return int(self.coupling.split('=', 1)[1])

    def iteration_config(self) -> IterationConfig:
        return IterationConfig(
            max_iterations=self.max_iterations,
            stop_rel_change=self.stop_rel_change,
            k_formula_enabled=self.k_formula,
            k_constant=self.k_constant,
        )


class _SpecArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise SpecError([f"arguments: {message}"])


def build_parser() -> argparse.ArgumentParser:
    parser = _SpecArgumentParser(description="Two-grid convergence sweeps for the Poisson problem")
    parser.add_argument('--dim', type=int, help='space dimension (2 or 3)')
    parser.add_argument('--problem', help=f"test problem, one of {', '.join(PROBLEM_IDS)}")
    parser.add_argument('--coupling', help='h2 (h = H^2), h32 (h = H^(3/2)) or ratio=<int>')
    parser.add_argument('--H', help='comma separated coarse subdivision counts, e.g. 8,16,32')
    parser.add_argument('--norm', help='h1 or l2')
    parser.add_argument('--max-iter', dest='max_iter', type=int, help='maximum number of two-grid sweeps')
    parser.add_argument('--stop-tol', dest='stop_tol', type=float, help='relative H1 change that stops the sweeps')
    parser.add_argument('--k-formula', dest='k_formula', action='store_const', const=True,
                        help='set the sweep count from the logarithmic K formula')
    parser.add_argument('--k-constant', dest='k_constant', type=float, help='constant c of the K formula')
    parser.add_argument('--threads', type=int, help='worker threads for the local solves')
    parser.add_argument('--out', help='CSV report path (a .json report is written next to it)')
    parser.add_argument('--config', help='JSON or YAML run specification; flags override its values')
    parser.add_argument('--settings', default='config.yaml', help='runtime settings file')
    return parser


def _read_spec_file(path: str) -> Dict[str, Any]:
    file = Path(path)
    if not file.exists():
        raise SpecError([f"config: file not found: {path}"])
    try:
        with open(file, 'r') as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise SpecError([f"config: cannot parse {path}: {e}"]) from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise SpecError([f"config: expected a mapping at the top level, got {type(data).__name__}"])
    return data


def _as_int(value, key: str, problems: List[str], minimum: int = 1) -> Optional[int]:
    if isinstance(value, bool):
        problems.append(f"{key}: expected an integer, got {value!r}")
        return None
    try:
        number = int(str(value).strip()) if isinstance(value, str) else value
    except ValueError:
        number = None
    if not isinstance(number, int):
        problems.append(f"{key}: expected an integer, got {value!r}")
        return None
    if number < minimum:
        problems.append(f"{key}: must be >= {minimum}, got {number}")
        return None
    return number


def _as_float(value, key: str, problems: List[str]) -> Optional[float]:
    if isinstance(value, bool):
        problems.append(f"{key}: expected a number, got {value!r}")
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        problems.append(f"{key}: expected a number, got {value!r}")
        return None


def _parse_H(value, problems: List[str]) -> Optional[List[int]]:
    items = value.split(',') if isinstance(value, str) else value
    if isinstance(items, int) and not isinstance(items, bool):
        items = [items]
    if not isinstance(items, (list, tuple)) or len(items) == 0:
        problems.append(f"H: expected a nonempty list of integers, got {value!r}")
        return None
    values = []
    for i, item in enumerate(items):
        number = _as_int(item, f"H[{i}]", problems, minimum=2)
        if number is not None:
            values.append(number)
    return values if len(values) == len(items) else None


def _check_coupling(value, problems: List[str]) -> Optional[str]:
    coupling = str(value).strip().lower()
    if coupling in ('h2', 'h32'):
        return coupling
    if coupling.startswith('ratio='):
        ratio = _as_int(coupling.split('=', 1)[1], 'coupling', problems)
        return f"ratio={ratio}" if ratio is not None else None
    problems.append(f"coupling: expected h2, h32 or ratio=<int>, got {value!r}")
    return None


def spec_from_mapping(data: Dict[str, Any]) -> RunSpec:
    """Validate a flat mapping of run-specification keys"""
    problems = []
    for key in data:
        if key not in REQUIRED_KEYS + OPTIONAL_KEYS:
            problems.append(f"{key}: unknown key")
    missing = [key for key in REQUIRED_KEYS if data.get(key) is None]
    if missing:
        problems.append(f"missing required fields: {', '.join(missing)}")

    values = {}
    if data.get('dim') is not None:
        dim = _as_int(data['dim'], 'dim', problems)
        if dim is not None and dim not in (2, 3):
            problems.append(f"dim: must be 2 or 3, got {dim}")
        values['dim'] = dim
    if data.get('problem') is not None:
        if data['problem'] not in PROBLEM_IDS:
            problems.append(f"problem: expected one of {', '.join(PROBLEM_IDS)}, got {data['problem']!r}")
        values['problem'] = data['problem']
    if data.get('coupling') is not None:
        values['coupling'] = _check_coupling(data['coupling'], problems)
    if data.get('H') is not None:
        values['H_values'] = _parse_H(data['H'], problems)
    if data.get('norm') is not None:
        norm = str(data['norm']).strip().lower()
        if norm not in NORM_KINDS:
            problems.append(f"norm: expected one of {', '.join(NORM_KINDS)}, got {data['norm']!r}")
        values['norm'] = norm

    if data.get('max_iter') is not None:
        values['max_iterations'] = _as_int(data['max_iter'], 'max_iter', problems)
    if data.get('stop_tol') is not None:
        tol = _as_float(data['stop_tol'], 'stop_tol', problems)
        if tol is not None and tol < 0:
            problems.append(f"stop_tol: must be nonnegative, got {tol}")
        values['stop_rel_change'] = tol
    if data.get('k_formula') is not None:
        if not isinstance(data['k_formula'], bool):
            problems.append(f"k_formula: expected true or false, got {data['k_formula']!r}")
        values['k_formula'] = data['k_formula']
    if data.get('k_constant') is not None:
        c = _as_float(data['k_constant'], 'k_constant', problems)
        if c is not None and c <= 0:
            problems.append(f"k_constant: must be positive, got {c}")
        values['k_constant'] = c
    if data.get('threads') is not None:
        values['threads'] = _as_int(data['threads'], 'threads', problems)
    if data.get('out') is not None:
        values['out'] = str(data['out'])

    if values.get('coupling') == 'h32' and values.get('H_values'):
        for i, H_n in enumerate(values['H_values']):
            if math.isqrt(H_n) ** 2 != H_n:
                problems.append(f"H[{i}]: coupling h32 needs perfect squares, {H_n} is not one")

    if problems:
        raise SpecError(problems)
    return RunSpec(**values)


def parse_spec(argv: Optional[Sequence[str]] = None, path: Optional[str] = None) -> RunSpec:
    """RunSpec from command-line flags and an optional spec file; flags override the file"""
    args = parse_args(argv)
    return spec_from_args(args, path)


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def spec_from_args(args: argparse.Namespace, path: Optional[str] = None) -> RunSpec:
    data = {}
    config_path = path or args.config
    if config_path:
        data.update(_read_spec_file(config_path))
    flags = {key: getattr(args, key) for key in REQUIRED_KEYS + OPTIONAL_KEYS}
    data.update({key: value for key, value in flags.items() if value is not None})
    return spec_from_mapping(data)


def spec_to_mapping(spec: RunSpec) -> Dict[str, Any]:
    """Inverse of spec_from_mapping, used to save a sweep next to its report"""
    names = {'H_values': 'H', 'max_iterations': 'max_iter', 'stop_rel_change': 'stop_tol'}
    return {names.get(f.name, f.name): getattr(spec, f.name) for f in fields(spec)
            if getattr(spec, f.name) is not None}
