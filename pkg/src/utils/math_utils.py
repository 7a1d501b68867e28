"""
Math utilities shared by the grid, quadrature and sweep modules.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Any, Iterable, List, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss


def json_float(value: Any) -> Any:
    """Plain float for JSON output; non-finite values become 'inf'/'-inf'/'nan'."""
    f = float(value)
    if np.isnan(f):
        return "nan"
    if np.isinf(f):
        return "inf" if f > 0 else "-inf"
    return f


def ordered_sum(values: Any) -> float:
    """
    Sum in a fixed order.

    numpy reduces a contiguous 1D float64 buffer with pairwise summation in
    memory order, so the result does not depend on how the values were produced.
    """
    arr = np.ascontiguousarray(np.ravel(values), dtype=np.float64)
    return float(np.add.reduce(arr))


def relative_change(old: float, new: float) -> float:
    """|new - old| / max(|old|, |new|), 0 when both vanish."""
    scale = max(abs(old), abs(new))
    if scale == 0.0:
        return 0.0
    return abs(new - old) / scale


@lru_cache(maxsize=32)
def _leggauss(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre_mesh(a: float, b: float, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss–Legendre nodes and weights mapped from [-1, 1] to [a, b]."""
    y, w = _leggauss(order)
    x = 0.5 * (y + 1.0) * (b - a) + a
    return x, 0.5 * (b - a) * w


def composite_mesh(breaks: Sequence[float], order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Concatenated Gauss–Legendre meshes over consecutive intervals of ``breaks``."""
    xs: List[np.ndarray] = []
    ws: List[np.ndarray] = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b <= a:
            continue
        x, w = gauss_legendre_mesh(a, b, order)
        xs.append(x)
        ws.append(w)
    if not xs:
        return np.empty(0), np.empty(0)
    return np.concatenate(xs), np.concatenate(ws)


def dyadic_breaks(lo: float, hi: float) -> List[float]:
    """Split [lo, hi] (0 < lo < hi) at the powers of two strictly inside it."""
    if not (0.0 < lo < hi):
        raise ValueError(f"dyadic_breaks needs 0 < lo < hi, got ({lo}, {hi})")
    first = int(np.floor(np.log2(lo))) + 1
    last = int(np.ceil(np.log2(hi))) - 1
    inner = [2.0 ** m for m in range(first, last + 1) if lo < 2.0 ** m < hi]
    return [lo, *inner, hi]


def is_monotone_nondecreasing(values: Iterable[float], tol: float = 0.0) -> bool:
    vals = list(values)
    return all(b >= a - tol * max(abs(a), 1.0) for a, b in zip(vals[:-1], vals[1:]))
