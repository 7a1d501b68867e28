"""
Inequality verifiers: each measures both sides of a known estimate and
reports lhs / rhs, the implied constant.

- oscillation bound: |int_{8<=|x|<=N} f e^{-ix}| against boundary and
  pi-shift terms
- dyadic sum bound: sum_j 2^{ja} (1 + 2^j r1)^-b (r2 + 2^j r3)^-c
- decay integral bound: int (1 + 2^k |x|)^-N over |x| <= r and |x| > r
- Ricci–Stein estimates: size / derivative bounds and annulus integrals of
  the dyadic synthesis

Sweeps tag every sample with a density level; the report history is the sup
ratio over each level and the stability flag uses the condition checkers' rule.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import integrate as sint

from src.config.lab_defaults import (
    DECAY_INTEGRAL_AGREEMENT,
    DEFAULT_THETA2,
    DYADIC_SUM_BOUNDARY_TOL,
    DYADIC_SUM_MAX_WINDOW,
    DYADIC_SUM_WINDOW,
    RS_ESTIMATE_FD_STEP,
)
from src.kernels.kernels import KernelSpec, RicciSteinDyadic, ZeroKernel
from src.research.conditions import AnnulusSweep, CancellationPlan, SamplePlan, is_stable, nested_grid
from src.research.quadrature import SeparableIntegrator, Stencil, integrate_kernel
from src.services.sweep_runner import run_sweep
from src.utils.errors import DomainError, InvariantViolation, NonConvergenceError, PreconditionError
from src.utils.math_utils import json_float

logger = logging.getLogger(__name__)

INNER = "inner"
OUTER = "outer"

# 振荡积分的 quad 参数
_QUAD_LIMIT = 2000
_QUAD_EPSREL = 1e-11
_QUAD_EPSABS = 1e-13


# ========== 报告 ==========

@dataclass
class SlackReport:
    """
    One evaluation of an estimate.

    Attributes
    ----------
    estimate : str
        Which inequality was measured
    lhs, rhs : float
        Measured side and the bound without its constant, both >= 0
    ratio : float
        lhs / rhs; 0 when both vanish, inf when only rhs does
    parameters : dict
        Full parameter tuple
    extras : dict
        Estimate-specific diagnostics
    """
    estimate: str
    lhs: float
    rhs: float
    parameters: Dict[str, Any]
    extras: Dict[str, Any] = field(default_factory=dict)
    ratio: float = field(init=False)

    def __post_init__(self) -> None:
        if self.lhs < 0 or self.rhs < 0:
            raise InvariantViolation(f"{self.estimate}: negative side lhs={self.lhs} rhs={self.rhs}")
        if self.rhs > 0:
            self.ratio = self.lhs / self.rhs
        else:
            self.ratio = 0.0 if self.lhs == 0 else math.inf

    def row(self) -> Dict[str, Any]:
        out = dict(self.parameters)
        out.update({"lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio})
        for k, v in self.extras.items():
            if isinstance(v, (int, float, str, bool)):
                out[k] = v
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "estimate": self.estimate,
            "lhs": json_float(self.lhs),
            "rhs": json_float(self.rhs),
            "ratio": json_float(self.ratio),
            "parameters": {k: json_float(v) if isinstance(v, float) else v
                           for k, v in self.parameters.items()},
            "extras": {k: json_float(v) if isinstance(v, float) else v for k, v in self.extras.items()},
        }


@dataclass
class InequalitySweep:
    """Slack reports of one estimate, each tagged with its density level."""
    estimate: str
    reports: List[SlackReport]
    levels: List[int]

    def __post_init__(self) -> None:
        if len(self.reports) != len(self.levels):
            raise PreconditionError("every slack report needs a level")

    @property
    def n_levels(self) -> int:
        return max(self.levels) + 1 if self.levels else 0

    @property
    def sup_ratio(self) -> float:
        return max((r.ratio for r in self.reports), default=0.0)

    @property
    def history(self) -> List[float]:
        out = []
        for li in range(self.n_levels):
            out.append(max((r.ratio for r, lv in zip(self.reports, self.levels) if lv <= li), default=0.0))
        return out

    @property
    def stable(self) -> bool:
        return is_stable(self.history)

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for r, lv in zip(self.reports, self.levels):
            row = r.row()
            row["level"] = lv
            rows.append(row)
        return pd.DataFrame(rows)

    def to_dict(self) -> Dict[str, Any]:
        worst = max(self.reports, key=lambda r: r.ratio) if self.reports else None
        return {
            "estimate": self.estimate,
            "count": len(self.reports),
            "sup_ratio": json_float(self.sup_ratio),
            "history": [json_float(h) for h in self.history],
            "stable": self.stable,
            "worst": worst.to_dict() if worst else None,
        }


def _summarize(estimate: str, reports: List[SlackReport], levels: List[int]) -> InequalitySweep:
    sweep = InequalitySweep(estimate, reports, levels)
    logger.info("%s: sup ratio %.6g over %d samples, history=%s, stable=%s", estimate,
                sweep.sup_ratio, len(reports), [f"{h:.4g}" for h in sweep.history], sweep.stable)
    return sweep


# ========== 振荡积分 ==========

@dataclass(frozen=True)
class PiecewiseFunction:
    """Piecewise polynomial on [-R, R] (zero outside), breakpoints exposed for quadrature."""
    breakpoints: Tuple[float, ...]
    coefficients: Tuple[Tuple[float, ...], ...]
    scale: float = 1.0

    def __call__(self, x: Any) -> Any:
        xa = np.asarray(x, dtype=float)
        edges = np.asarray(self.breakpoints)
        idx = np.searchsorted(edges, xa, side="right") - 1
        out = np.zeros_like(xa)
        inside = (idx >= 0) & (idx < len(self.coefficients))
        for piece, coef in enumerate(self.coefficients):
            m = inside & (idx == piece)
            if np.any(m):
                out[m] = np.polynomial.polynomial.polyval(xa[m] / self.scale, coef)
        return out if out.ndim else float(out)


def random_piecewise(rng: np.random.Generator, radius: float, pieces: int = 8,
                     degree: int = 3) -> PiecewiseFunction:
    """Random piecewise cubic on [-radius, radius] with jumps at random breakpoints."""
    inner = np.sort(rng.uniform(-radius, radius, size=pieces - 1))
    edges = (-radius,) + tuple(float(b) for b in inner) + (radius,)
    coefs = tuple(tuple(float(c) for c in rng.normal(size=degree + 1)) for _ in range(pieces))
    return PiecewiseFunction(edges, coefs, float(radius))


def _quad(fn: Callable[[float], float], lo: float, hi: float, points: Sequence[float]) -> float:
    if hi <= lo:
        return 0.0
    inner = sorted({p for p in points if lo < p < hi})
    value, _ = sint.quad(fn, lo, hi, points=inner or None, limit=_QUAD_LIMIT,
                         epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSREL)
    return float(value)


def _merge(intervals: Sequence[Tuple[float, float]]) -> List[Tuple[float, float]]:
    out: List[Tuple[float, float]] = []
    for a, b in sorted(intervals):
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def verify_oscillation_bound(f: Callable[[Any], Any], N: float,
                             breakpoints: Optional[Sequence[float]] = None) -> SlackReport:
    """
    |int_{8<=|x|<=N} f(x) e^{-ix} dx| against
    1/2 int_{E_N} |f| + 1/2 int_{8<=|x|<=N} |f(x) - f(x + pi)|,
    E_N = {4 <= |x| <= 12} u {N - pi <= |x| <= N + pi}.
    """
    if not N > 8:
        raise PreconditionError(f"oscillation bound needs N > 8, got {N}")
    pts = list(breakpoints if breakpoints is not None else getattr(f, "breakpoints", ()))
    mirror = [abs(p) for p in pts]
    shifted = [abs(p - math.pi) for p in pts] + [abs(p + math.pi) for p in pts]

    def g(x: float) -> float:
        return float(f(x))

    # 正负两侧合并到 [8, N]
    re = _quad(lambda x: (g(x) + g(-x)) * math.cos(x), 8.0, N, mirror)
    im = _quad(lambda x: (g(-x) - g(x)) * math.sin(x), 8.0, N, mirror)
    lhs = math.hypot(re, im)

    boundary = 0.0
    for a, b in _merge([(4.0, 12.0), (N - math.pi, N + math.pi)]):
        boundary += _quad(lambda x: abs(g(x)) + abs(g(-x)), a, b, mirror)
    shift = _quad(lambda x: abs(g(x) - g(x + math.pi)) + abs(g(-x) - g(-x + math.pi)),
                  8.0, N, mirror + shifted)
    rhs = 0.5 * boundary + 0.5 * shift
    return SlackReport("oscillation", lhs, rhs, {"N": float(N)},
                       {"boundary_term": 0.5 * boundary, "shift_term": 0.5 * shift})


def oscillation_sweep(count: int = 100, Ns: Sequence[float] = (10.0, 50.0, 200.0),
                      seed: int = 0, refinement: Sequence[int] = (1, 2)) -> InequalitySweep:
    """``count`` random piecewise cubics per level and per N; later levels add fresh draws."""
    rng = np.random.default_rng(seed)
    reports: List[SlackReport] = []
    levels: List[int] = []
    drawn = 0
    for level, factor in enumerate(refinement):
        target = count * factor
        for _ in range(target - drawn):
            for N in Ns:
                f = random_piecewise(rng, N + math.pi + 1.0)
                rep = verify_oscillation_bound(f, N)
                rep.parameters["draw"] = len(reports)
                reports.append(rep)
                levels.append(level)
        drawn = target
    return _summarize("oscillation", reports, levels)


# ========== 二进求和 ==========

_BRANCHES = ("both_large", "r1_large", "ratio_large", "both_small")


def _dyadic_terms(a: float, b: float, c: float, r1: float, r2: float, r3: float,
                  js: np.ndarray) -> np.ndarray:
    t = js * math.log(2.0)
    log = a * t - b * np.logaddexp(0.0, t + math.log(r1)) \
        - c * np.logaddexp(math.log(r2), t + math.log(r3))
    return np.exp(log)


def _branch_masks(js: np.ndarray, r1: float, r2: float, r3: float) -> Dict[str, np.ndarray]:
    t = js * math.log(2.0)
    big1 = t + math.log(r1) > 0          # 2^j > 1 / r1
    big2 = t + math.log(r3) - math.log(r2) > 0   # 2^j > r2 / r3
    return {
        "both_large": big1 & big2,
        "r1_large": big1 & ~big2,
        "ratio_large": ~big1 & big2,
        "both_small": ~big1 & ~big2,
    }


def dyadic_sharp_bound(a: float, c: float, r1: float, r2: float, r3: float) -> float:
    """r1^-a r2^-c (1 + rho)^-(a ^ c), times (1 + log(1 + rho)) when a = c; rho = r3 / (r1 r2)."""
    rho = r3 / (r1 * r2)
    out = r1 ** -a * r2 ** -c * (1.0 + rho) ** -min(a, c)
    if a == c:
        out *= 1.0 + math.log1p(rho)
    return out


def verify_dyadic_sum_bound(a: float, b: float, c: float, r1: float, r2: float, r3: float,
                            epsilon: float,
                            j_window: Tuple[int, int] = DYADIC_SUM_WINDOW) -> SlackReport:
    """
    Brute-force sum over j in the window against
    r1^-a r2^-c (1 + r3 / (r1 r2))^(-(a ^ c) + 1 - epsilon).

    The window is doubled until both boundary terms fall below
    DYADIC_SUM_BOUNDARY_TOL of the sum.
    """
    if not (a > 0 and b > 0 and c > 0):
        raise PreconditionError("dyadic sum needs a, b, c > 0")
    if not b > a:
        raise PreconditionError(f"dyadic sum needs b > a, got a={a}, b={b}")
    if not (r1 > 0 and r2 > 0 and r3 > 0):
        raise PreconditionError("dyadic sum needs r1, r2, r3 > 0")
    if not (0.0 < epsilon < 1.0):
        raise PreconditionError(f"epsilon must lie in (0, 1), got {epsilon}")
    lo, hi = int(j_window[0]), int(j_window[1])
    if lo > DYADIC_SUM_WINDOW[0] or hi < DYADIC_SUM_WINDOW[1]:
        raise PreconditionError(f"j window {j_window} must contain {DYADIC_SUM_WINDOW}")

    while True:
        js = np.arange(lo, hi + 1, dtype=float)
        terms = _dyadic_terms(a, b, c, r1, r2, r3, js)
        total = math.fsum(terms)
        edge = max(terms[0], terms[-1])
        if edge <= DYADIC_SUM_BOUNDARY_TOL * total:
            break
        if max(-lo, hi) >= DYADIC_SUM_MAX_WINDOW:
            raise NonConvergenceError(
                f"dyadic sum boundary terms still {edge / total:.3e} of the sum at window ({lo}, {hi})",
                detail={"a": a, "b": b, "c": c, "r": (r1, r2, r3)},
            )
        lo, hi = 2 * lo, 2 * hi
        logger.debug("dyadic sum: widening window to (%d, %d)", lo, hi)

    rho = r3 / (r1 * r2)
    rhs = r1 ** -a * r2 ** -c * (1.0 + rho) ** (-min(a, c) + 1.0 - epsilon)
    branches = {name: math.fsum(terms[m]) for name, m in _branch_masks(js, r1, r2, r3).items()}
    sharp = dyadic_sharp_bound(a, c, r1, r2, r3)
    extras: Dict[str, Any] = {f"branch_{k}": v for k, v in branches.items()}
    extras.update({
        "dominant_branch": max(_BRANCHES, key=lambda k: branches[k]),
        "sharp_bound": sharp,
        "sharp_ratio": total / sharp,
        "j_lo": lo,
        "j_hi": hi,
    })
    params = {"a": float(a), "b": float(b), "c": float(c), "r1": float(r1), "r2": float(r2),
              "r3": float(r3), "epsilon": float(epsilon)}
    return SlackReport("dyadic_sum", total, rhs, params, extras)


def dyadic_sum_sweep(count: int = 100, epsilon: float = 0.25, seed: int = 0,
                     refinement: Sequence[int] = (1, 2)) -> InequalitySweep:
    """
    Random admissible tuples: r_i log-uniform in [2^-4, 2^4], a and c
    uniform in [0.5, 3], b = a + 1. Each level extends the previous draws.
    """
    rng = np.random.default_rng(seed)
    reports: List[SlackReport] = []
    levels: List[int] = []
    drawn = 0
    for level, factor in enumerate(refinement):
        target = count * factor
        for _ in range(target - drawn):
            r1, r2, r3 = np.exp2(rng.uniform(-4.0, 4.0, size=3))
            a, c = rng.uniform(0.5, 3.0, size=2)
            reports.append(verify_dyadic_sum_bound(a, a + 1.0, c, r1, r2, r3, epsilon))
            levels.append(level)
        drawn = target
    return _summarize("dyadic_sum", reports, levels)


# ========== 衰减积分 ==========

def decay_integral_closed_form(N: float, r: float, k: int, branch: str) -> float:
    u = 2.0 ** k * r
    scale = 2.0 ** (1 - k)  # 两侧对称, 替换 u = 2^k |x|
    if branch == INNER:
        if N == 1:
            return scale * math.log1p(u)
        return scale * -math.expm1((1.0 - N) * math.log1p(u)) / (N - 1.0)
    return scale * (1.0 + u) ** (1.0 - N) / (N - 1.0)


def decay_integral_quadrature(N: float, r: float, k: int, branch: str) -> float:
    u = 2.0 ** k * r
    scale = 2.0 ** (1 - k)
    fn = lambda v: (1.0 + v) ** -N  # noqa: E731
    if branch == INNER:
        value, _ = sint.quad(fn, 0.0, u, limit=_QUAD_LIMIT, epsabs=0.0, epsrel=1e-13)
    else:
        value, _ = sint.quad(fn, u, math.inf, limit=_QUAD_LIMIT, epsabs=0.0, epsrel=1e-13)
    return scale * float(value)


def verify_decay_integral_bound(N: float, r: float, k: int, branch: str = INNER) -> SlackReport:
    """
    inner: int_{|x|<=r} (1 + 2^k |x|)^-N dx against r / (1 + 2^k r);
    outer: int_{|x|>r} (1 + 2^k |x|)^-N dx against 2^-k (1 + 2^k r)^-(N-1).
    """
    if branch not in (INNER, OUTER):
        raise PreconditionError(f"unknown branch {branch!r}")
    if not r > 0:
        raise PreconditionError(f"r must be positive, got {r}")
    if int(k) != k:
        raise PreconditionError(f"k must be an integer, got {k}")
    if not N > 0:
        raise PreconditionError(f"N must be positive, got {N}")
    if branch == OUTER and not N > 1:
        raise PreconditionError(f"outer branch needs N > 1, got {N}")
    k = int(k)
    lhs = decay_integral_closed_form(N, r, k, branch)
    check = decay_integral_quadrature(N, r, k, branch)
    agreement = abs(lhs - check) / abs(lhs) if lhs else abs(check)
    if agreement > DECAY_INTEGRAL_AGREEMENT:
        logger.warning("decay integral N=%g r=%g k=%d %s: closed form and quadrature differ by %.2e",
                       N, r, k, branch, agreement)
    u = 2.0 ** k * r
    rhs = r / (1.0 + u) if branch == INNER else 2.0 ** -k * (1.0 + u) ** (1.0 - N)
    return SlackReport("decay_integral", lhs, rhs,
                       {"N": float(N), "r": float(r), "k": k, "branch": branch},
                       {"quadrature": check, "agreement": agreement})


def decay_integral_sweep(Ns: Sequence[float] = (2.0, 3.0, 5.0), r_log2_range: Tuple[float, float] = (-5.0, 5.0),
                         r_points: int = 11, k_range: Tuple[int, int] = (-10, 10),
                         refinement: Sequence[int] = (1, 2)) -> InequalitySweep:
    """Both branches over N x r x k; refinement densifies the r exponents."""
    exps, level = nested_grid(r_log2_range[0], r_log2_range[1], r_points, refinement)
    reports: List[SlackReport] = []
    levels: List[int] = []
    for N in Ns:
        for e, lv in zip(exps, level):
            for k in range(k_range[0], k_range[1] + 1):
                for branch in (INNER, OUTER):
                    reports.append(verify_decay_integral_bound(N, float(2.0 ** e), k, branch))
                    levels.append(int(lv))
    return _summarize("decay_integral", reports, levels)


# ========== Ricci–Stein 估计 ==========

# 中心差分: 阶数 -> ((系数, 步长倍数), ...), 系数再除以 step^order
_CENTRAL = {
    0: ((1.0, 0.0),),
    1: ((0.5, 1.0), (-0.5, -1.0)),
    2: ((1.0, 1.0), (-2.0, 0.0), (1.0, -1.0)),
}

SIZE = "size_derivative"
SIZE_SHARP = "size_derivative_sharp"
TRIPLE = "triple_integral"
X1_INTEGRAL = "x1_integral"
X1_INTEGRAL_SHARP = "x1_integral_sharp"
X23_INTEGRAL = "x2x3_integral"
RS_ESTIMATES = (SIZE, SIZE_SHARP, TRIPLE, X1_INTEGRAL, X1_INTEGRAL_SHARP, X23_INTEGRAL)

_DEFAULT_DERIVATIVES: Tuple[Tuple[int, int, int], ...] = tuple(
    o for o in itertools.product((0, 1, 2), repeat=3) if sum(o) <= 2
)


def central_stencil(steps: Sequence[float], orders: Sequence[int]) -> Stencil:
    """Tensor-product central difference for d^orders, steps per axis."""
    for o in orders:
        if o not in _CENTRAL:
            raise PreconditionError(f"central differences support orders 0..2, got {tuple(orders)}")
    out: Stencil = []
    for combo in itertools.product(*(_CENTRAL[o] for o in orders)):
        coef = 1.0
        offset = []
        for i, (c, m) in enumerate(combo):
            coef *= c / steps[i] ** orders[i] if orders[i] else c
            offset.append(m * steps[i])
        out.append((coef, tuple(offset)))
    return out


def central_derivative(kernel: KernelSpec, points: np.ndarray, orders: Sequence[int],
                       step: float = RS_ESTIMATE_FD_STEP) -> np.ndarray:
    """d^orders K at each row of ``points`` with per-point steps step * |x_i|."""
    P = np.asarray(points, dtype=float)
    s = step * np.abs(P)
    total = np.zeros(len(P))
    for combo in itertools.product(*(_CENTRAL[o] for o in orders)):
        coef = np.ones(len(P))
        shifted = P.copy()
        for i, (c, m) in enumerate(combo):
            coef *= c / s[:, i] ** orders[i] if orders[i] else c
            shifted[:, i] += m * s[:, i]
        total += coef * kernel(shifted[:, 0], shifted[:, 1], shifted[:, 2])
    return total


@dataclass(frozen=True)
class RSEstimatePlan:
    """
    Samples for the Ricci–Stein estimate suite.

    Attributes
    ----------
    sample_plan : SamplePlan
        Points for the pointwise derivative bounds
    derivative_orders : tuple of (a, b, c)
        Derivative orders, each <= 2
    annulus : AnnulusSweep
        Integration limits for the integral estimates
    fixed : CancellationPlan
        Fixed-coordinate samples and quadrature settings for the integrals
    integral_orders : tuple of int
        Derivative orders per differentiated axis under the integrals
    """
    sample_plan: SamplePlan = field(default_factory=lambda: SamplePlan(
        log2_range=(-4.0, 4.0), base_points=3, refinement=(1, 2)))
    derivative_orders: Tuple[Tuple[int, int, int], ...] = _DEFAULT_DERIVATIVES
    annulus: AnnulusSweep = field(default_factory=lambda: AnnulusSweep.geometric(1.0, 3.0, 2, (1, 2)))
    fixed: CancellationPlan = field(default_factory=lambda: CancellationPlan(
        fixed_log2_range=(-2.0, 2.0), fixed_points=2, signs=(1.0, -1.0), refinement=(1, 2)))
    integral_orders: Tuple[int, ...] = (0, 1)
    theta2: float = DEFAULT_THETA2
    step: float = RS_ESTIMATE_FD_STEP

    def __post_init__(self) -> None:
        for o in self.derivative_orders:
            if len(o) != 3 or any(v not in _CENTRAL for v in o):
                raise PreconditionError(f"derivative orders must be three values in 0..2, got {o}")
        if any(v not in _CENTRAL for v in self.integral_orders):
            raise PreconditionError(f"integral orders must lie in 0..2, got {self.integral_orders}")
        if not (0.0 < self.theta2 < 1.0):
            raise PreconditionError(f"theta2 must lie in (0, 1), got {self.theta2}")
        if not (0.0 < self.step <= 0.25):
            raise PreconditionError(f"difference step must lie in (0, 1/4], got {self.step}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sample_plan": self.sample_plan.to_dict(),
            "derivative_orders": [list(o) for o in self.derivative_orders],
            "annulus": self.annulus.to_dict(),
            "fixed": self.fixed.to_dict(),
            "integral_orders": list(self.integral_orders),
            "theta2": self.theta2,
            "step": self.step,
        }


def _pointwise_reports(kernel: KernelSpec, plan: RSEstimatePlan):
    P, level = plan.sample_plan.points()
    a1, a2, a3 = (np.abs(P[:, i]) for i in range(3))
    t2 = plan.theta2
    size, sharp, levels = [], [], []
    for orders in plan.derivative_orders:
        a, b, c = orders
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            d = np.abs(central_derivative(kernel, P, orders, plan.step))
        if not np.all(np.isfinite(d)):
            bad = int(np.flatnonzero(~np.isfinite(d))[0])
            raise DomainError(f"derivative {orders} not finite", tuple(P[bad]))
        rhs_size = 1.0 / (a1 ** (a + 1) * a2 ** (b + 1) * a3 ** (c + 1)) \
            * (np.abs(P[:, 0] * P[:, 1] / P[:, 2]) + np.abs(P[:, 2] / (P[:, 0] * P[:, 1]))) ** -t2
        rhs_sharp = 1.0 / (a1 ** (a + c + 2) * a2 ** (b + c + 2)
                           * (1.0 + a3 / (a1 * a2)) ** (min(a, b) + c + 1 + t2))
        for n in range(len(P)):
            params = {"x1": float(P[n, 0]), "x2": float(P[n, 1]), "x3": float(P[n, 2]),
                      "alpha": a, "beta": b, "gamma": c}
            size.append(SlackReport(SIZE, float(d[n]), float(rhs_size[n]), params))
            sharp.append(SlackReport(SIZE_SHARP, float(d[n]), float(rhs_sharp[n]), dict(params)))
            levels.append(int(level[n]))
    return size, sharp, levels


def _x1_integral_rhs(delta: float, r: float, x2: float, x3: float, beta: int, gamma: int,
                     theta2: float) -> Tuple[float, float]:
    """(bound with the balance factor, sharper bound) for int over x1 of d2^b d3^c K."""
    def bal(u: float) -> float:
        u = abs(u)
        return u + 1.0 / u

    plain = (bal(r * x2 / x3) ** -theta2 + bal(delta * x2 / x3) ** -theta2) \
        / (abs(x2) ** (beta + 1) * abs(x3) ** (gamma + 1))
    sharp = 0.0
    for s in (r, delta):
        sharp += 1.0 / (s ** (gamma + 1) * abs(x2) ** (beta + gamma + 2)
                        * (1.0 + abs(x3 / (s * x2))) ** (gamma + 1 + theta2))
    return plain, sharp


def _integral_tasks(plan: RSEstimatePlan):
    tasks = []
    for t, t_level in plan.annulus.tagged():
        tasks.append((TRIPLE, t, {}, (), t_level))
        for x, x_level in plan.fixed.fixed_samples((1, 2)):
            for beta in plan.integral_orders:
                for gamma in plan.integral_orders:
                    tasks.append((X1_INTEGRAL, t, x, (0, beta, gamma), max(t_level, x_level)))
        for x, x_level in plan.fixed.fixed_samples((0,)):
            for alpha in plan.integral_orders:
                tasks.append((X23_INTEGRAL, t, x, (alpha, 0, 0), max(t_level, x_level)))
    return tasks


def verify_rs_estimates(kernel: KernelSpec, plan: Optional[RSEstimatePlan] = None,
                        workers: Optional[int] = 1) -> List[InequalitySweep]:
    """
    Size, derivative and annulus-integral estimates of a dyadic Ricci–Stein
    synthesis, one sweep per estimate in RS_ESTIMATES order.

    Derivatives are central differences with step ``plan.step * |x_i|``;
    integrals use the annulus quadrature with the same stencil on the fixed
    axes. The integral estimates have no sharper counterpart except the
    single-variable one, whose sharp form is reported separately.
    """
    if not isinstance(kernel, (RicciSteinDyadic, ZeroKernel)):
        raise PreconditionError(f"estimate suite needs a Ricci–Stein synthesis, got {type(kernel).__name__}")
    plan = plan or RSEstimatePlan()
    size, sharp, p_levels = _pointwise_reports(kernel, plan)

    separable = SeparableIntegrator(kernel) if isinstance(kernel, RicciSteinDyadic) else None
    settings = plan.fixed.quadrature

    def run(task):
        kind, t, x, orders, _ = task
        if kind == TRIPLE:
            q = integrate_kernel(kernel, list(t), settings=settings, separable=separable)
            return [SlackReport(TRIPLE, abs(q.value), 1.0, _annulus_params(t),
                                {"quad_error": q.error, "converged": q.converged})]
        if kind == X1_INTEGRAL:
            delta, r = t[0]
            x2, x3 = x[1], x[2]
            steps = (0.0, plan.step * abs(x2), plan.step * abs(x3))
            q = integrate_kernel(kernel, [t[0], None, None], (0.0, x2, x3),
                                 stencil=central_stencil(steps, orders),
                                 settings=settings, separable=separable)
            plain, sharp_rhs = _x1_integral_rhs(delta, r, x2, x3, orders[1], orders[2], plan.theta2)
            params = {"delta1": delta, "r1": r, "x2": x2, "x3": x3, "beta": orders[1], "gamma": orders[2]}
            extras = {"quad_error": q.error, "converged": q.converged}
            return [SlackReport(X1_INTEGRAL, abs(q.value), plain, params, extras),
                    SlackReport(X1_INTEGRAL_SHARP, abs(q.value), sharp_rhs, dict(params), dict(extras))]
        x1 = x[0]
        steps = (plan.step * abs(x1), 0.0, 0.0)
        q = integrate_kernel(kernel, [None, t[1], t[2]], (x1, 0.0, 0.0),
                             stencil=central_stencil(steps, orders),
                             settings=settings, separable=separable)
        params = {"delta2": t[1][0], "r2": t[1][1], "delta3": t[2][0], "r3": t[2][1],
                  "x1": x1, "alpha": orders[0]}
        return [SlackReport(X23_INTEGRAL, abs(q.value), 1.0 / abs(x1) ** (orders[0] + 1), params,
                            {"quad_error": q.error, "converged": q.converged})]

    tasks = _integral_tasks(plan)
    results = run_sweep(run, tasks, workers, label="rs_estimates")
    grouped: Dict[str, Tuple[List[SlackReport], List[int]]] = {
        SIZE: (size, p_levels), SIZE_SHARP: (sharp, list(p_levels)),
    }
    for est in (TRIPLE, X1_INTEGRAL, X1_INTEGRAL_SHARP, X23_INTEGRAL):
        grouped[est] = ([], [])
    for task, reps in zip(tasks, results):
        for rep in reps:
            grouped[rep.estimate][0].append(rep)
            grouped[rep.estimate][1].append(task[4])
    bad = sum(1 for reps in results for r in reps if not r.extras.get("converged", True))
    if bad:
        logger.warning(f"[rs_estimates] {bad} integrals did not converge")
    return [_summarize(est, *grouped[est]) for est in RS_ESTIMATES]


def _annulus_params(t) -> Dict[str, float]:
    out = {}
    for i, (d, r) in enumerate(t, start=1):
        out[f"delta{i}"] = d
        out[f"r{i}"] = r
    return out
