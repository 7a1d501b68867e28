"""
Annulus and box quadrature used by the condition checkers and lemma verifiers.

Every integrated axis runs over {lo <= |x| <= hi}: Gauss-Legendre panels on
the positive side (dyadic below the scale of the integrand, optionally split
further), evaluated once per sign octant. Octant sums are combined with
math.fsum, so an integrand that is exactly odd in an integrated variable
integrates to exactly 0.0.

Ricci-Stein kernels are finite sums of separable terms over a product
region, so their integrals factor term by term; ``integrate_kernel`` takes
that route automatically and caches the one- and two-variable factors.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.config.lab_defaults import GL_ORDER, QUAD_MAX_REFINE, QUAD_REL_TOL
from src.kernels.bumps import Bump1D, Bump2D
from src.kernels.kernels import KernelSpec, RicciSteinDyadic
from src.utils.errors import PreconditionError
from src.utils.math_utils import _leggauss, dyadic_breaks, ordered_sum

logger = logging.getLogger(__name__)

Range = Optional[Tuple[float, float]]
Stencil = List[Tuple[float, Tuple[float, float, float]]]

# 单个 octant 的最大节点数，超出后按行分块求和
_CHUNK_NODES = 2_000_000
# 可分离路径中 bump 尾部截断的相对阈值
_TAIL_REL = 1e-15


@dataclass
class QuadResult:
    """
    Outcome of one adaptive integral.

    Attributes
    ----------
    value : float
        Integral at the final panel split
    mass : float
        Integral of |integrand| on the same nodes
    error : float
        |I(order) - I(order/2)| / mass at the final split
    converged : bool
        error <= tolerance
    splits : int
        Panel subdivision factor that was reached
    """
    value: float
    mass: float
    error: float
    converged: bool
    splits: int = 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "mass": self.mass,
            "error": self.error,
            "converged": self.converged,
            "splits": self.splits,
        }


@dataclass(frozen=True)
class QuadratureSettings:
    """Knobs shared by every integral of a sweep."""
    order: int = GL_ORDER
    tol: float = QUAD_REL_TOL
    max_refine: int = QUAD_MAX_REFINE
    node_budget: int = 8_000_000

    def __post_init__(self) -> None:
        if self.order < 2:
            raise PreconditionError(f"quadrature order must be >= 2, got {self.order}")
        if self.tol <= 0:
            raise PreconditionError(f"quadrature tolerance must be positive, got {self.tol}")
        if self.max_refine < 0:
            raise PreconditionError("max_refine must be >= 0")

    def to_dict(self) -> Dict[str, Any]:
        return {"order": self.order, "tol": self.tol,
                "max_refine": self.max_refine, "node_budget": self.node_budget}


# ========== 网格 ==========

def _panel_mesh(breaks: Sequence[float], order: int, split: int) -> Tuple[np.ndarray, np.ndarray]:
    y, w = _leggauss(order)
    xs: List[np.ndarray] = []
    ws: List[np.ndarray] = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b <= a:
            continue
        edges = np.linspace(a, b, split + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            half = 0.5 * (hi - lo)
            xs.append(lo + half * (y + 1.0))
            ws.append(half * w)
    if not xs:
        return np.empty(0), np.empty(0)
    return np.concatenate(xs), np.concatenate(ws)


def half_mesh(lo: float, hi: float, order: int = GL_ORDER, split: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Positive-side nodes of {lo <= |x| <= hi}: dyadic panels, each cut into ``split``."""
    return _panel_mesh(dyadic_breaks(lo, hi), order, split)


def _bump_breaks(lo: float, hi: float, width: float = 1.0) -> List[float]:
    """Dyadic panels below 1, panels of ``width`` above; the bump's own scale is 1."""
    if hi <= lo:
        return []
    if hi <= 1.0:
        return dyadic_breaks(lo, hi)
    low = dyadic_breaks(lo, 1.0) if lo < 1.0 else [lo]
    start = max(lo, 1.0)
    n = max(1, int(math.ceil((hi - start) / width)))
    return low[:-1] + list(np.linspace(start, hi, n + 1))


def box_ranges(half_widths: Sequence[float], depth: int) -> List[Tuple[float, float]]:
    """Symmetric principal-value ranges b*2^-depth <= |x| <= b for a box of half widths b."""
    return [(b * 2.0 ** (-depth), b) for b in half_widths]


# ========== 张量积求和 ==========

def _octant_sums(fn: Callable[..., Any], ranges: Sequence[Range], fixed: Sequence[float],
                 order: int, split: int) -> Tuple[float, float]:
    axes = [i for i in range(3) if ranges[i] is not None]
    meshes = [half_mesh(ranges[i][0], ranges[i][1], order, split) for i in axes]
    if any(m[0].size == 0 for m in meshes):
        return 0.0, 0.0
    weights = None
    for _, w in meshes:
        weights = w if weights is None else np.multiply.outer(weights, w)
    ndim = len(axes)
    row_len = int(np.prod([m[0].size for m in meshes[1:]])) if ndim > 1 else 1
    rows = meshes[0][0].size if ndim else 1
    step = max(1, _CHUNK_NODES // max(row_len, 1))

    sums: List[float] = []
    masses: List[float] = []
    for signs in itertools.product((1.0, -1.0), repeat=ndim):
        for start in range(0, rows, step):
            stop = min(rows, start + step)
            coords: List[Any] = []
            for i in range(3):
                if ranges[i] is None:
                    coords.append(np.asarray(float(fixed[i])))
                    continue
                pos = axes.index(i)
                x = meshes[pos][0]
                if pos == 0:
                    x = x[start:stop]
                shape = [1] * ndim
                shape[pos] = x.size
                coords.append((signs[pos] * x).reshape(shape))
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                vals = np.asarray(fn(*coords), dtype=np.float64)
            w = weights[start:stop] if ndim else np.asarray(1.0)
            vals = np.broadcast_to(vals, np.shape(w))
            sums.append(ordered_sum(vals * w))
            masses.append(ordered_sum(np.abs(vals) * w))
    return math.fsum(sums), math.fsum(masses)


def _node_count(ranges: Sequence[Range], order: int, split: int) -> int:
    total = 1
    for r in ranges:
        if r is not None:
            total *= 2 * order * split * (len(dyadic_breaks(r[0], r[1])) - 1)
    return total


def _adaptive(evaluate: Callable[[int, int], Tuple[float, float]],
              settings: QuadratureSettings,
              budget_check: Callable[[int], bool]) -> QuadResult:
    low_order = max(2, settings.order // 2)
    split = 1
    result = QuadResult(0.0, 0.0, math.inf, False, split)
    for level in range(settings.max_refine + 1):
        if level and not budget_check(split):
            break
        value, mass = evaluate(settings.order, split)
        coarse, _ = evaluate(low_order, split)
        if not (math.isfinite(value) and math.isfinite(mass)):
            return QuadResult(value, mass, math.inf, False, split)
        err = abs(value - coarse) / mass if mass > 0 else 0.0
        result = QuadResult(value, mass, err, err <= settings.tol, split)
        if result.converged:
            return result
        split *= 2
    logger.debug("quadrature stopped at split %d with error %.3g", result.splits, result.error)
    return result


def integrate(fn: Callable[..., Any], ranges: Sequence[Range], fixed: Sequence[float] = (0.0, 0.0, 0.0),
              settings: Optional[QuadratureSettings] = None) -> QuadResult:
    """
    Integrate fn(x1, x2, x3) over the product of the annuli in ``ranges``.

    ``ranges[i]`` is (lo, hi) for an integrated axis and None for a fixed one,
    whose coordinate is taken from ``fixed[i]``. fn receives broadcastable arrays.
    """
    settings = settings or QuadratureSettings()
    if len(ranges) != 3:
        raise PreconditionError("ranges must name all three axes")
    for r in ranges:
        if r is not None and not (0.0 < r[0] < r[1]):
            raise PreconditionError(f"annulus needs 0 < lo < hi, got {r}")

    def evaluate(order: int, split: int) -> Tuple[float, float]:
        return _octant_sums(fn, ranges, fixed, order, split)

    def within_budget(split: int) -> bool:
        return _node_count(ranges, settings.order, split) <= settings.node_budget

    return _adaptive(evaluate, settings, within_budget)


# ========== 差分模板 ==========

def difference_stencil(h: Sequence[float], orders: Sequence[int]) -> Stencil:
    """
    Evaluation points of the composed difference operator.

    Each axis contributes (e * T_h - I): e = 1 is a forward difference and
    e = 0 negates, so the result is sum over S subset of the active axes of
    (-1)^(3 - |S|) K(x + h_S).
    """
    active = [i for i in range(3) if orders[i]]
    out: Stencil = []
    for size in range(len(active) + 1):
        for subset in itertools.combinations(active, size):
            offset = tuple(float(h[i]) if i in subset else 0.0 for i in range(3))
            out.append(((-1.0) ** (3 - size), offset))
    return out


def stencil_integrand(kernel: KernelSpec, stencil: Stencil,
                      weight: Optional[Callable[..., Any]] = None) -> Callable[..., Any]:
    def fn(x1, x2, x3):
        total = 0.0
        for coef, (o1, o2, o3) in stencil:
            total = total + coef * kernel(x1 + o1, x2 + o2, x3 + o3)
        if weight is not None:
            total = total * weight(x1, x2, x3)
        return total
    return fn


# ========== Ricci-Stein 可分离路径 ==========

@lru_cache(maxsize=64)
def _effective_extent(bump: Any) -> float:
    """Radius past which the bump's tail envelope is negligible."""
    ext = float(bump.extent)
    r = np.linspace(0.0, ext, 4097)
    env = np.asarray(bump.envelope(r), dtype=float)
    peak = float(env[0]) if env.size else 0.0
    if peak <= 0.0:
        return ext
    small = np.flatnonzero(env <= _TAIL_REL * peak)
    return float(r[small[0]]) if small.size else ext


class SeparableIntegrator:
    """
    Term-by-term integrals of a RicciSteinDyadic kernel over product regions.

    Factor integrals are cached on their scaled limits, so sweeping many
    fixed-variable samples against the same annuli reuses every 2D factor.
    """

    def __init__(self, kernel: RicciSteinDyadic) -> None:
        self.kernel = kernel
        self.phi1: Bump1D = kernel.bumps.phi1
        self.phi2: Bump2D = kernel.bumps.phi2
        self.lone_axis = 0 if kernel.orientation == "x1" else 1
        self.pair_axis = 1 - self.lone_axis
        self._e1 = _effective_extent(self.phi1)
        self._e2 = _effective_extent(self.phi2)
        self._lone_cache: Dict[Tuple, Tuple[float, float]] = {}
        self._pair_cache: Dict[Tuple, Tuple[float, float]] = {}

    def _lone_integral(self, a: float, b: float, order: int, split: int) -> Tuple[float, float]:
        """int over a <= |v| <= b of phi1(v) dv, with its mass."""
        key = (a, b, order, split)
        if key in self._lone_cache:
            return self._lone_cache[key]
        hi = min(b, self._e1)
        if hi <= a:
            out = (0.0, 0.0)
        else:
            x, w = _panel_mesh(_bump_breaks(a, hi), order, split)
            v = self.phi1.spatial(x)
            out = (2.0 * ordered_sum(v * w), 2.0 * ordered_sum(np.abs(v) * w))
        self._lone_cache[key] = out
        return out

    def _pair_integral(self, p: Range, q: Range, p0: float, q0: float,
                       order: int, split: int) -> Tuple[float, float]:
        """phi2 integrated over the scaled annuli p (first arg) and q (second arg)."""
        key = (p, q, p0 if p is None else None, q0 if q is None else None, order, split)
        if key in self._pair_cache:
            return self._pair_cache[key]
        E = self._e2
        if p is None and q is None:
            val = float(self.phi2.spatial(np.asarray(p0), np.asarray(q0)))
            out = (val, abs(val))
        else:
            lo_p = p[0] if p is not None else abs(p0)
            lo_q = q[0] if q is not None else abs(q0)
            if math.hypot(lo_p, lo_q) >= E:
                out = (0.0, 0.0)
            else:
                def mesh(r: Range, pinned: float) -> Tuple[np.ndarray, np.ndarray, float]:
                    if r is None:
                        return np.asarray([pinned]), np.asarray([1.0]), 1.0
                    hi = min(r[1], E)
                    if hi <= r[0]:
                        return np.empty(0), np.empty(0), 2.0
                    x, w = _panel_mesh(_bump_breaks(r[0], hi), order, split)
                    return x, w, 2.0
                xp, wp, fp = mesh(p, p0)
                xq, wq, fq = mesh(q, q0)
                if xp.size == 0 or xq.size == 0:
                    out = (0.0, 0.0)
                else:
                    vals = self.phi2.spatial(xp[:, None], xq[None, :])
                    W = np.multiply.outer(wp, wq)
                    out = (fp * fq * ordered_sum(vals * W),
                           fp * fq * ordered_sum(np.abs(vals) * W))
        self._pair_cache[key] = out
        return out

    def integral(self, ranges: Sequence[Range], fixed: Sequence[float],
                 order: int, split: int) -> Tuple[float, float]:
        """(value, mass) of the kernel over the product region at one node set."""
        L, P = self.lone_axis, self.pair_axis
        j_lo, j_hi = self.kernel.j_range
        k_lo, k_hi = self.kernel.k_range
        terms: List[float] = []
        masses: List[float] = []
        for j in range(j_lo, j_hi + 1):
            sj = 2.0 ** j
            if ranges[L] is not None:
                a, b = ranges[L]
                lone, lone_mass = self._lone_integral(sj * a, sj * b, order, split)
                lone, lone_mass = lone / sj, lone_mass / sj
            else:
                lone = float(self.phi1.spatial(np.asarray(abs(sj * fixed[L]))))
                lone_mass = abs(lone)
            if lone_mass == 0.0:
                continue
            for k in range(k_lo, k_hi + 1):
                sk = 2.0 ** k
                s3 = sj * sk
                jac = 1.0
                p = q = None
                if ranges[P] is not None:
                    p = (sk * ranges[P][0], sk * ranges[P][1])
                    jac /= sk
                if ranges[2] is not None:
                    q = (s3 * ranges[2][0], s3 * ranges[2][1])
                    jac /= s3
                pair, pair_mass = self._pair_integral(p, q, sk * fixed[P], s3 * fixed[2], order, split)
                if pair_mass == 0.0:
                    continue
                weight = 2.0 ** (2 * j + 2 * k) * jac
                terms.append(weight * lone * pair)
                masses.append(weight * lone_mass * pair_mass)
        return math.fsum(terms), math.fsum(masses)


def integrate_kernel(kernel: KernelSpec, ranges: Sequence[Range], fixed: Sequence[float] = (0.0, 0.0, 0.0),
                     stencil: Optional[Stencil] = None,
                     weight: Optional[Callable[..., Any]] = None,
                     settings: Optional[QuadratureSettings] = None,
                     separable: Optional[SeparableIntegrator] = None) -> QuadResult:
    """
    Integrate sum_c coef * K(x + offset) (times ``weight``) over ``ranges``.

    Offsets may only move fixed axes. Unweighted Ricci-Stein integrands go
    through the separable path; pass ``separable`` to share its caches.
    """
    settings = settings or QuadratureSettings()
    stencil = stencil if stencil is not None else [(1.0, (0.0, 0.0, 0.0))]
    for _, off in stencil:
        for i in range(3):
            if off[i] != 0.0 and ranges[i] is not None:
                raise PreconditionError(f"stencil shifts integrated axis {i}")

    if isinstance(kernel, RicciSteinDyadic) and weight is None:
        sep = separable if separable is not None and separable.kernel is kernel else SeparableIntegrator(kernel)

        def evaluate(order: int, split: int) -> Tuple[float, float]:
            vals: List[float] = []
            mass = 0.0
            for coef, off in stencil:
                point = tuple(fixed[i] + off[i] for i in range(3))
                v, m = sep.integral(ranges, point, order, split)
                vals.append(coef * v)
                mass += abs(coef) * m
            return math.fsum(vals), mass

        return _adaptive(evaluate, settings, lambda split: True)

    return integrate(stencil_integrand(kernel, stencil, weight), ranges, fixed, settings)
