# src/analysis/orders.py
import math

NORM_KINDS = ('h1', 'l2')
_BASE = {'h1': 1.0, 'l2': 2.0}
_CAP = {'h1': 2.0, 'l2': 3.0}


def _check(err_coarse: float, err_final: float, H: float, norm_kind: str):
    if norm_kind not in NORM_KINDS:
        raise ValueError(f"norm_kind must be one of {NORM_KINDS}, got {norm_kind!r}")
    if not err_coarse > 0 or not err_final > 0:
        raise ValueError(f"errors must be positive, got coarse={err_coarse}, final={err_final}")
    if not 0.0 < H < 1.0:
        raise ValueError(f"H must lie in (0, 1), got {H}")


def order1(err_coarse: float, err_final: float, H: float, norm_kind: str) -> float:
    """Observed order against the exact solution: base + ln(err_coarse/err_final)/|ln H|"""
    _check(err_coarse, err_final, H, norm_kind)
    return _BASE[norm_kind] + math.log(err_coarse / err_final) / abs(math.log(H))


def order2(err_ref_coarse: float, err_ref_final: float, H: float, norm_kind: str) -> float:
    """Observed order against the fine Galerkin reference, capped at 2 (H1) or 3 (L2)"""
    value = order1(err_ref_coarse, err_ref_final, H, norm_kind)
    return min(_CAP[norm_kind], value)
