# src/analysis/report.py
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    'dim', 'problem', 'norm', 'H_n', 'ratio', 'err_coarse', 'err_fine_ref', 'err_final',
    'order1', 'order2', 'iterations', 'seconds',
]


@dataclass
class ReportRow:
    """One H_n of a convergence sweep; NaN marks a quantity without an exact solution to compare to"""
    dim: int
    problem: str
    norm: str
    H_n: int
    ratio: int
    err_coarse: float
    err_fine_ref: float
    err_final: float
    order1: float
    order2: float
    iterations: int
    seconds: float
    err_intermediate: float = math.nan
    order_intermediate: float = math.nan
    history: List[Dict[str, Any]] = field(default_factory=list)

    def __post_init__(self):
        for name in ('err_coarse', 'err_fine_ref', 'err_final', 'err_intermediate'):
            value = getattr(self, name)
            if value < 0:
                raise ValueError(f"{name} must be nonnegative, got {value}")


@dataclass
class ConvergenceReport:
    rows: List[ReportRow] = field(default_factory=list)

    def append(self, row: ReportRow):
        self.rows.append(row)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{c: getattr(r, c) for c in CSV_COLUMNS} for r in self.rows], columns=CSV_COLUMNS)

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, lineterminator="\n", float_format="%.10g")
        logger.info(f"Wrote {len(self.rows)} report rows to {path}")
        return path

    def to_records(self) -> List[Dict[str, Any]]:
        return [{k: _json_value(v) for k, v in asdict(r).items()} for r in self.rows]

    def write_json(self, path: Union[str, Path], metadata: Optional[Dict[str, Any]] = None) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = dict(metadata or {})
        payload["rows"] = self.to_records()
        with open(path, "w") as f:
            json.dump(payload, f, indent=2)
        logger.info(f"Wrote JSON report to {path}")
        return path


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, list):
        return [{k: _json_value(v) for k, v in item.items()} if isinstance(item, dict) else _json_value(item)
                for item in value]
    return value
