"""
Numerical checks of the regularity condition (R) and the cancellation families.

Each check sweeps a parameter grid, divides the measured quantity by the
family's right-hand side without its constant, and reports the supremum
C_hat together with its history over nested sample densities. Grids are
nested (every coarse sample is also a fine sample), so the history is
nondecreasing and the last two entries decide the stability flag.

Conventions
-----------
- Difference operators follow the literal definition
  Delta^e_h K(x) = e K(x + h) - K(x), so Delta^0 negates.
- Finite-difference offsets are h_i = ratio * |x_i| with ratio in (0, 1/2].
- Annulus integrals run over both sign components, see ``quadrature``.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.config.lab_defaults import (
    CANCELLATION_FAMILIES,
    C3_FAMILIES,
    DEFAULT_THETA1,
    DEFAULT_THETA2,
    FD_RATIOS,
    IMPROPER_SCHEDULE_DEPTH,
    LOG2_SAMPLE_RANGE,
    REFINEMENT_FACTORS,
    STABILITY_TOL,
)
from src.kernels.bumps import NormalizedBump, make_nbf
from src.kernels.kernels import KernelSpec, RicciSteinDyadic, eval_kernel
from src.research.quadrature import (
    QuadratureSettings,
    SeparableIntegrator,
    box_ranges,
    difference_stencil,
    integrate_kernel,
)
from src.services.sweep_runner import run_sweep
from src.utils.errors import DomainError, PreconditionError
from src.utils.math_utils import json_float, relative_change

logger = logging.getLogger(__name__)

Vec3 = Tuple[float, float, float]


# ========== 参数类型 ==========

@dataclass(frozen=True)
class HolderParams:
    """Hölder exponent theta1 in (0, 1] and dilation-balance exponent theta2 in (0, 1)."""
    theta1: float = DEFAULT_THETA1
    theta2: float = DEFAULT_THETA2

    def __post_init__(self) -> None:
        if not (0.0 < self.theta1 <= 1.0):
            raise PreconditionError(f"theta1 must lie in (0, 1], got {self.theta1}")
        if not (0.0 < self.theta2 < 1.0):
            raise PreconditionError(f"theta2 must lie in (0, 1), got {self.theta2}")

    def to_dict(self) -> Dict[str, float]:
        return {"theta1": self.theta1, "theta2": self.theta2}


def is_admissible(alpha: int, beta: int, gamma: int) -> bool:
    return (alpha <= 1 and beta + gamma <= 1) or (alpha + gamma <= 1 and beta <= 1)


ADMISSIBLE_INDICES: Tuple[Tuple[int, int, int], ...] = tuple(
    e for e in itertools.product((0, 1), repeat=3) if is_admissible(*e)
)


@dataclass(frozen=True)
class DiffIndex:
    """Difference orders (alpha, beta, gamma) in {0, 1} with offsets h."""
    alpha: int = 0
    beta: int = 0
    gamma: int = 0
    h: Vec3 = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma"):
            if getattr(self, name) not in (0, 1):
                raise PreconditionError(f"{name} must be 0 or 1, got {getattr(self, name)}")
        if not is_admissible(self.alpha, self.beta, self.gamma):
            raise PreconditionError(
                f"inadmissible difference orders ({self.alpha}, {self.beta}, {self.gamma})"
            )
        object.__setattr__(self, "h", tuple(float(v) for v in self.h))

    @property
    def orders(self) -> Tuple[int, int, int]:
        return (self.alpha, self.beta, self.gamma)

    def check_offsets(self, point: Sequence[float]) -> None:
        for i, e in enumerate(self.orders):
            if not e:
                continue
            if self.h[i] == 0.0 or abs(point[i]) < 2.0 * abs(self.h[i]):
                raise PreconditionError(
                    f"offset violates |x{i + 1}| >= 2|h{i + 1}| > 0: x={point[i]}, h={self.h[i]}"
                )


def finite_difference(kernel: KernelSpec, point: Sequence[float], idx: DiffIndex) -> float:
    """Delta^alpha_{x1,h1} Delta^beta_{x2,h2} Delta^gamma_{x3,h3} K at ``point``."""
    x = tuple(float(v) for v in point)
    idx.check_offsets(x)
    terms = []
    for coef, off in difference_stencil(idx.h, idx.orders):
        terms.append(coef * eval_kernel(kernel, tuple(x[i] + off[i] for i in range(3))))
    return math.fsum(terms)


# ========== 嵌套采样网格 ==========

def _validate_refinement(refinement: Sequence[int]) -> Tuple[int, ...]:
    ref = tuple(int(f) for f in refinement)
    if not ref or ref[0] < 1 or any(b <= a for a, b in zip(ref[:-1], ref[1:])):
        raise PreconditionError(f"refinement factors must increase from >= 1, got {refinement}")
    if any(ref[-1] % f for f in ref):
        raise PreconditionError(f"refinement factors must divide {ref[-1]}, got {ref}")
    return ref


def nested_grid(lo: float, hi: float, base_points: int,
                refinement: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Evenly spaced values on [lo, hi] at the finest density, with the index of
    the coarsest refinement level that already contains each value.
    """
    ref = _validate_refinement(refinement)
    if base_points < 2:
        raise PreconditionError("a nested grid needs at least 2 base points")
    finest = ref[-1]
    n = (base_points - 1) * finest + 1
    idx = np.arange(n)
    level = np.full(n, len(ref) - 1, dtype=int)
    for li in reversed(range(len(ref))):
        level[idx % (finest // ref[li]) == 0] = li
    return np.linspace(lo, hi, n), level


@dataclass(frozen=True)
class SamplePlan:
    """
    Sample design for the regularity check.

    Attributes
    ----------
    log2_range : (float, float)
        |x_i| = 2^e for e evenly spaced over this range
    base_points : int
        Magnitudes per axis at the coarsest density
    fd_ratios : tuple of float
        h_i / |x_i| ratios tried at every point
    refinement : tuple of int
        Density multipliers; the report history has one entry per factor
    sign_patterns : tuple of sign triples
        Sign octants sampled
    scale : (float, float, float)
        Per-axis factor applied to every point (see ``dilated``)
    """
    log2_range: Tuple[float, float] = LOG2_SAMPLE_RANGE
    base_points: int = 5
    fd_ratios: Tuple[float, ...] = FD_RATIOS
    refinement: Tuple[int, ...] = REFINEMENT_FACTORS
    sign_patterns: Tuple[Vec3, ...] = ((1.0, 1.0, 1.0), (-1.0, 1.0, 1.0), (1.0, -1.0, -1.0))
    scale: Vec3 = (1.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        _validate_refinement(self.refinement)
        if not self.fd_ratios or any(not (0.0 < r <= 0.5) for r in self.fd_ratios):
            raise PreconditionError(f"fd ratios must lie in (0, 1/2], got {self.fd_ratios}")
        if not self.sign_patterns:
            raise PreconditionError("sample plan needs at least one sign pattern")

    def dilated(self, s: float, t: float) -> "SamplePlan":
        """Plan whose points are x / (s, t, st), matching zygmund_dilate(K, s, t)."""
        a, b, c = self.scale
        return replace(self, scale=(a / s, b / t, c / (s * t)))

    def points(self) -> Tuple[np.ndarray, np.ndarray]:
        """(N, 3) sample points at the finest density and their refinement level."""
        exps, level = nested_grid(*self.log2_range, self.base_points, self.refinement)
        mags = np.exp2(exps)
        rows, levels = [], []
        for signs in self.sign_patterns:
            for i, j, k in itertools.product(range(mags.size), repeat=3):
                rows.append((signs[0] * mags[i] * self.scale[0],
                             signs[1] * mags[j] * self.scale[1],
                             signs[2] * mags[k] * self.scale[2]))
                levels.append(max(level[i], level[j], level[k]))
        return np.asarray(rows, dtype=float), np.asarray(levels, dtype=int)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "log2_range": list(self.log2_range),
            "base_points": self.base_points,
            "fd_ratios": list(self.fd_ratios),
            "refinement": list(self.refinement),
            "sign_patterns": [list(s) for s in self.sign_patterns],
            "scale": list(self.scale),
        }


# ========== 报告 ==========

@dataclass
class ConditionReport:
    """
    Result of one condition sweep.

    Attributes
    ----------
    condition_id : str
        "R", a cancellation family id such as "C2b", or a C3 family id
    worst_ratio : float
        C_hat, the sup of |measured| / bound-without-C
    worst_sample : dict
        Full parameter tuple at which C_hat was attained
    refinement_history : list of float
        C_hat at each nested sample density
    stable : bool
        Last two history entries agree within STABILITY_TOL
    converged : bool
        Every quadrature met its tolerance
    """
    condition_id: str
    theta1: float
    theta2: float
    sample_count: int
    worst_ratio: float
    worst_sample: Dict[str, Any]
    refinement_history: List[float]
    stable: bool
    converged: bool = True
    nonconverged: int = 0
    options: Dict[str, Any] = field(default_factory=dict)
    samples: Optional[pd.DataFrame] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "condition_id": self.condition_id,
            "theta1": self.theta1,
            "theta2": self.theta2,
            "C_hat": json_float(self.worst_ratio),
            "worst_sample": {k: (json_float(v) if isinstance(v, float) else v)
                             for k, v in self.worst_sample.items()},
            "history": [json_float(v) for v in self.refinement_history],
            "stable": self.stable,
            "sample_count": self.sample_count,
            "converged": self.converged,
            "nonconverged": self.nonconverged,
            "options": self.options,
        }


def is_stable(history: Sequence[float]) -> bool:
    if len(history) < 2:
        return True
    a, b = history[-2], history[-1]
    if not (math.isfinite(a) and math.isfinite(b)):
        return False
    return relative_change(a, b) <= STABILITY_TOL


def _build_report(condition_id: str, params: HolderParams, frame: pd.DataFrame,
                  n_levels: int, options: Optional[Dict[str, Any]] = None) -> ConditionReport:
    if frame.empty:
        raise PreconditionError(f"{condition_id}: sweep produced no samples")
    history = []
    for li in range(n_levels):
        sub = frame.loc[frame["level"] <= li, "ratio"]
        history.append(float(sub.max()) if len(sub) else 0.0)
    worst_pos = int(np.argmax(frame["ratio"].to_numpy()))
    worst = {k: (v.item() if hasattr(v, "item") else v)
             for k, v in frame.iloc[worst_pos].to_dict().items()}
    converged_col = frame["converged"] if "converged" in frame else pd.Series([True] * len(frame))
    bad = int((~converged_col.astype(bool)).sum())
    report = ConditionReport(
        condition_id=condition_id,
        theta1=params.theta1,
        theta2=params.theta2,
        sample_count=int(len(frame)),
        worst_ratio=float(frame["ratio"].max()),
        worst_sample=worst,
        refinement_history=history,
        stable=is_stable(history),
        converged=bad == 0,
        nonconverged=bad,
        options=dict(options or {}),
        samples=frame,
    )
    if bad:
        logger.warning("%s: %d of %d quadratures did not converge", condition_id, bad, len(frame))
    logger.info("%s: C_hat=%.6g over %d samples, history=%s, stable=%s",
                condition_id, report.worst_ratio, report.sample_count,
                [f"{h:.4g}" for h in history], report.stable)
    return report


def _balance(u: Any) -> Any:
    u = np.abs(u)
    return u + 1.0 / u


# ========== (R) ==========

def check_R(kernel: KernelSpec, params: Optional[HolderParams] = None,
            sample_plan: Optional[SamplePlan] = None) -> ConditionReport:
    """
    Sup over the plan of

        |Delta^a Delta^b Delta^c K| |x1|^(a t1 + 1) |x2|^(b t1 + 1) |x3|^(c t1 + 1)
        (|x1 x2 / x3| + |x3 / x1 x2|)^t2 / (|h1|^(a t1) |h2|^(b t1) |h3|^(c t1))

    over every admissible (a, b, c) and every offset ratio.
    """
    params = params or HolderParams()
    plan = sample_plan or SamplePlan()
    P, level = plan.points()
    x1, x2, x3 = P[:, 0], P[:, 1], P[:, 2]
    ax = np.abs(P)
    theta, theta2 = params.theta1, params.theta2
    balance = _balance(x1 * x2 / x3) ** theta2

    def evaluate(pts: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            vals = np.asarray(kernel(pts[:, 0], pts[:, 1], pts[:, 2]), dtype=float)
        finite = np.isfinite(vals)
        if not np.all(finite):
            bad = int(np.flatnonzero(~finite)[0])
            raise DomainError("kernel evaluation failed during the (R) sweep", tuple(pts[bad]))
        return vals

    base = evaluate(P)
    frames = []
    for ratio in plan.fd_ratios:
        h = ratio * ax
        shifted: Dict[Tuple[int, ...], np.ndarray] = {(): base}
        for orders in ADMISSIBLE_INDICES:
            if not any(orders) and ratio != plan.fd_ratios[0]:
                continue
            active = [i for i in range(3) if orders[i]]
            delta = np.zeros(len(P))
            for size in range(len(active) + 1):
                for subset in itertools.combinations(active, size):
                    if subset not in shifted:
                        offset = np.zeros_like(P)
                        offset[:, list(subset)] = h[:, list(subset)]
                        shifted[subset] = evaluate(P + offset)
                    delta = delta + (-1.0) ** (3 - size) * shifted[subset]
            weight = balance.copy()
            for i in range(3):
                e = orders[i]
                weight = weight * ax[:, i] ** (e * theta + 1.0)
                if e:
                    weight = weight / h[:, i] ** (e * theta)
            frames.append(pd.DataFrame({
                "x1": x1, "x2": x2, "x3": x3,
                "h1": h[:, 0] if orders[0] else 0.0,
                "h2": h[:, 1] if orders[1] else 0.0,
                "h3": h[:, 2] if orders[2] else 0.0,
                "alpha": orders[0], "beta": orders[1], "gamma": orders[2],
                "value": delta,
                "ratio": np.abs(delta) * weight,
                "level": level,
                "converged": True,
            }))
    frame = pd.concat(frames, ignore_index=True)
    return _build_report("R", params, frame, len(plan.refinement),
                         {"plan": plan.to_dict()})


# ========== 环形域扫描 ==========

Annulus3 = Tuple[Tuple[float, float], Tuple[float, float], Tuple[float, float]]


@dataclass(frozen=True)
class AnnulusSweep:
    """
    Parameter tuples ((delta_i, r_i) for i = 1, 2, 3); axes a family does not
    integrate over are ignored.

    Sweeps built by ``geometric`` remember their exponent grid and can be
    refined; an explicit list of tuples is a single density level.
    """
    tuples: Tuple[Annulus3, ...]
    grid: Optional[Tuple[float, float, int]] = None
    refinement: Tuple[int, ...] = (1,)

    def __post_init__(self) -> None:
        if not self.tuples:
            raise PreconditionError("annulus sweep is empty")
        for t in self.tuples:
            if len(t) != 3:
                raise PreconditionError("each sweep tuple needs (delta, r) for three axes")
            for d, r in t:
                if not (d > 0 and r > 0):
                    raise PreconditionError(f"annulus limits must be positive, got ({d}, {r})")
                if d > r:
                    raise PreconditionError(f"annulus needs delta <= r, got ({d}, {r})")

    @classmethod
    def geometric(cls, lo: float = 1.0, hi: float = 3.0, points: int = 3,
                  refinement: Sequence[int] = (1,)) -> "AnnulusSweep":
        """
        delta = 2^-a, r = 2^a on x1 and x2 and delta = 2^-b, r = 2^b on x3, for
        every pair (a, b) of exponents evenly spaced on [lo, hi].
        """
        exps, _ = nested_grid(lo, hi, points, refinement)
        tuples = []
        for a, b in itertools.product(exps, repeat=2):
            ra, rb = (2.0 ** -a, 2.0 ** a), (2.0 ** -b, 2.0 ** b)
            tuples.append((ra, ra, rb))
        return cls(tuple(tuples), (float(lo), float(hi), int(points)), tuple(refinement))

    @classmethod
    def improper(cls, depth: int = IMPROPER_SCHEDULE_DEPTH) -> "AnnulusSweep":
        """delta = 2^-m, r = 2^m on every axis for m = 1..depth."""
        return cls(tuple(((2.0 ** -m, 2.0 ** m),) * 3 for m in range(1, depth + 1)))

    def refined(self, refinement: Sequence[int]) -> "AnnulusSweep":
        if self.grid is None:
            return self
        lo, hi, n = self.grid
        return AnnulusSweep.geometric(lo, hi, n, refinement)

    def tagged(self) -> List[Tuple[Annulus3, int]]:
        """Tuples with the coarsest refinement level containing them."""
        if self.grid is None:
            return [(t, 0) for t in self.tuples]
        _, level = nested_grid(self.grid[0], self.grid[1], self.grid[2], self.refinement)
        n = len(level)
        return [(t, int(max(level[i // n], level[i % n]))) for i, t in enumerate(self.tuples)]

    def to_dict(self) -> Dict[str, Any]:
        return {"tuples": [[list(p) for p in t] for t in self.tuples],
                "grid": list(self.grid) if self.grid else None,
                "refinement": list(self.refinement)}


@dataclass(frozen=True)
class CancellationPlan:
    """
    Fixed-variable samples, offsets and quadrature settings for the
    annulus and bump-tested families.

    ``orders`` lists difference-order vectors over the family's differenced
    axes; None means every vector with at most one nonzero entry.
    ``plus_one_c2pb`` adds the +1 to the |x3| exponent of the C2'.b bound.
    """
    fixed_log2_range: Tuple[float, float] = (-4.0, 4.0)
    fixed_points: int = 3
    signs: Tuple[float, ...] = (1.0, -1.0)
    fd_ratios: Tuple[float, ...] = FD_RATIOS
    refinement: Tuple[int, ...] = REFINEMENT_FACTORS
    orders: Optional[Tuple[Tuple[int, ...], ...]] = None
    plus_one_c2pb: bool = False
    quadrature: QuadratureSettings = field(default_factory=QuadratureSettings)
    box_depth: int = 8
    even_axes: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        _validate_refinement(self.refinement)
        if not self.fd_ratios or any(not (0.0 < r <= 0.5) for r in self.fd_ratios):
            raise PreconditionError(f"fd ratios must lie in (0, 1/2], got {self.fd_ratios}")
        if self.box_depth < 1:
            raise PreconditionError("box_depth must be >= 1")

    def order_vectors(self, n_axes: int) -> List[Tuple[int, ...]]:
        if self.orders is not None:
            out = [tuple(int(v) for v in o) for o in self.orders]
            for o in out:
                if len(o) != n_axes or any(v not in (0, 1) for v in o) or sum(o) > 1:
                    raise PreconditionError(f"order vector {o} invalid for {n_axes} differenced axes")
            return out
        return [o for o in itertools.product((0, 1), repeat=n_axes) if sum(o) <= 1]

    def fixed_samples(self, axes: Sequence[int]) -> List[Tuple[Dict[int, float], int]]:
        """Fixed-coordinate assignments for ``axes`` with their refinement level."""
        if not axes:
            return [({}, 0)]
        exps, level = nested_grid(*self.fixed_log2_range, self.fixed_points, self.refinement)
        mags = np.exp2(exps)
        choices = [(s * m, int(lv)) for m, lv in zip(mags, level) for s in self.signs]
        out = []
        for combo in itertools.product(choices, repeat=len(axes)):
            out.append(({ax: float(v) for ax, (v, _) in zip(axes, combo)},
                        max(lv for _, lv in combo)))
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "fixed_log2_range": list(self.fixed_log2_range),
            "fixed_points": self.fixed_points,
            "signs": list(self.signs),
            "fd_ratios": list(self.fd_ratios),
            "refinement": list(self.refinement),
            "orders": [list(o) for o in self.orders] if self.orders is not None else None,
            "plus_one_c2pb": self.plus_one_c2pb,
            "quadrature": self.quadrature.to_dict(),
            "box_depth": self.box_depth,
            "even_axes": list(self.even_axes),
        }


def _difference_bound(axes: Sequence[int], orders: Sequence[int], x: Dict[int, float],
                      h: Dict[int, float], theta: float,
                      x3_plus: float = 1.0) -> float:
    """prod over differenced axes of |h_i|^(e theta) / |x_i|^(e theta + 1)."""
    out = 1.0
    for ax, e in zip(axes, orders):
        plus = x3_plus if ax == 2 else 1.0
        num = abs(h[ax]) ** (e * theta) if e else 1.0
        out *= num / abs(x[ax]) ** (e * theta + plus)
    return out


def cancellation_rhs(family_id: str, annulus: Annulus3, x: Dict[int, float],
                     h: Dict[int, float], orders: Sequence[int], params: HolderParams,
                     plus_one_c2pb: bool = False) -> float:
    """Right-hand side of the family's bound with C = 1."""
    shape = CANCELLATION_FAMILIES[family_id]
    axes = shape.difference
    if not axes:
        return 1.0
    theta, theta2 = params.theta1, params.theta2
    x3_plus = 1.0
    if family_id == "C2pb" and not plus_one_c2pb:
        x3_plus = 0.0
    base = _difference_bound(axes, orders, x, h, theta, x3_plus)
    if family_id == "C2b":
        (d1, r1) = annulus[0]
        q = x[1] / x[2]
        base *= _balance(r1 * q) ** -theta2 + _balance(d1 * q) ** -theta2
    elif family_id == "C2pb":
        (d2, r2) = annulus[1]
        q = x[0] / x[2]
        base *= _balance(r2 * q) ** -theta2 + _balance(d2 * q) ** -theta2
    return float(base)


def _family_tasks(fixed_axes: Sequence[int], plan: CancellationPlan):
    """(x, level, orders, ratio) combinations over the differenced axes."""
    out = []
    for x, x_level in plan.fixed_samples(fixed_axes):
        for orders in plan.order_vectors(len(fixed_axes)):
            ratios = plan.fd_ratios if any(orders) else plan.fd_ratios[:1]
            for ratio in ratios:
                out.append((x, x_level, orders, ratio))
    return out


def _stencil_for(fixed_axes: Sequence[int], orders: Sequence[int], h: Dict[int, float]):
    h3 = [0.0, 0.0, 0.0]
    o3 = [0, 0, 0]
    for ax, e in zip(fixed_axes, orders):
        h3[ax] = h[ax]
        o3[ax] = e
    stencil = difference_stencil(h3, o3)
    # absent axes carry no operator; undo the (-1) each contributes in the literal form
    sign = (-1.0) ** (3 - len(fixed_axes))
    return [(sign * c, off) for c, off in stencil]


def check_cancellation(kernel: KernelSpec, family_id: str, sweep: AnnulusSweep,
                       params: Optional[HolderParams] = None,
                       plan: Optional[CancellationPlan] = None,
                       workers: Optional[int] = 1) -> ConditionReport:
    """
    Annulus-integral check of one C1 / C2 / C2' family.

    Every (annulus tuple, fixed sample, difference orders, offset ratio)
    combination is one sample; the tuple and the fixed sample together set its
    refinement level.
    """
    if family_id not in CANCELLATION_FAMILIES:
        raise PreconditionError(f"unknown cancellation family {family_id!r}")
    params = params or HolderParams()
    plan = plan or CancellationPlan()
    shape = CANCELLATION_FAMILIES[family_id]
    fixed_axes = shape.difference
    sweep = sweep.refined(plan.refinement)
    separable = SeparableIntegrator(kernel) if isinstance(kernel, RicciSteinDyadic) else None
    combos = _family_tasks(fixed_axes, plan)
    tagged = sweep.tagged()

    def run_tuple(item: Tuple[int, Tuple[Annulus3, int]]) -> List[Dict[str, Any]]:
        t_index, (annulus, t_level) = item
        ranges = [annulus[i] if i in shape.integrate else None for i in range(3)]
        degenerate = any(r is not None and r[0] >= r[1] for r in ranges)
        rows = []
        for x, x_level, orders, ratio in combos:
            h = {ax: ratio * abs(x[ax]) for ax in fixed_axes}
            point = tuple(x.get(i, 0.0) for i in range(3))
            if degenerate:
                value, conv, err = 0.0, True, 0.0
            else:
                res = integrate_kernel(kernel, ranges, point,
                                       stencil=_stencil_for(fixed_axes, orders, h),
                                       settings=plan.quadrature, separable=separable)
                value, conv, err = res.value, res.converged, res.error
            rhs = cancellation_rhs(family_id, annulus, x, h, orders, params, plan.plus_one_c2pb)
            row: Dict[str, Any] = {"tuple_index": t_index}
            for i in range(3):
                row[f"delta{i + 1}"], row[f"r{i + 1}"] = annulus[i] if i in shape.integrate else (0.0, 0.0)
                row[f"x{i + 1}"] = point[i]
                row[f"h{i + 1}"] = h.get(i, 0.0) if (i in fixed_axes and orders[fixed_axes.index(i)]) else 0.0
                row[f"e{i + 1}"] = int(orders[fixed_axes.index(i)]) if i in fixed_axes else 0
            row.update({"value": value, "rhs": rhs, "ratio": abs(value) / rhs,
                        "quad_error": err, "converged": conv,
                        "level": max(t_level, x_level)})
            rows.append(row)
        return rows

    chunks = run_sweep(run_tuple, list(enumerate(tagged)), workers, label=family_id)
    frame = pd.DataFrame([row for chunk in chunks for row in chunk])
    options = {"plan": plan.to_dict(), "sweep": sweep.to_dict()}
    return _build_report(family_id, params, frame, len(plan.refinement), options)


def improper_schedule(kernel: KernelSpec, family_id: str, fixed: Sequence[float] = (1.0, 1.0, 1.0),
                      depth: int = IMPROPER_SCHEDULE_DEPTH,
                      settings: Optional[QuadratureSettings] = None) -> Tuple[List[float], bool]:
    """
    Integrals of K over delta = 2^-m <= |x_i| <= 2^m (integrated axes) for
    m = 1..depth, with the family's other coordinates pinned at ``fixed``.
    The flag reports whether the last two values agree within STABILITY_TOL.
    """
    shape = CANCELLATION_FAMILIES[family_id]
    separable = SeparableIntegrator(kernel) if isinstance(kernel, RicciSteinDyadic) else None
    values = []
    for m in range(1, depth + 1):
        ranges = [(2.0 ** -m, 2.0 ** m) if i in shape.integrate else None for i in range(3)]
        res = integrate_kernel(kernel, ranges, fixed, settings=settings, separable=separable)
        values.append(res.value)
    settled = len(values) < 2 or relative_change(values[-2], values[-1]) <= STABILITY_TOL \
        or max(abs(values[-2]), abs(values[-1])) < 1e-12
    return values, settled


# ========== 第三类：bump 检验 ==========

@dataclass(frozen=True)
class _BumpFamily:
    integrate: Tuple[int, ...]
    fixed: Tuple[int, ...]
    dimension: int
    # how each bump argument scales: (axis, exponents of R1 and R2)
    arguments: Tuple[Tuple[int, int, int], ...]
    balance: Optional[Tuple[int, int]] = None  # (numerator axis x3, denominator axis)


_C3_SHAPES: Dict[str, _BumpFamily] = {
    "C3a": _BumpFamily((0, 1, 2), (), 3, ((0, 1, 0), (1, 0, 1), (2, 1, 1))),
    "C3b": _BumpFamily((0,), (1, 2), 1, ((0, 1, 0),), balance=(2, 1)),
    "C3c": _BumpFamily((1, 2), (0,), 2, ((1, 1, 0), (2, 0, 1))),
    "C3pa": _BumpFamily((0, 1, 2), (), 3, ((0, 1, 0), (1, 0, 1), (2, 1, 1))),
    "C3pb": _BumpFamily((1,), (0, 2), 1, ((1, 1, 0),), balance=(2, 0)),
    "C3pc": _BumpFamily((0, 2), (1,), 2, ((0, 1, 0), (2, 0, 1))),
}


@dataclass(frozen=True)
class ScaleSweep:
    """R (or R1, R2) = 2^e for e evenly spaced over ``log2_range``."""
    log2_range: Tuple[float, float] = (-4.0, 4.0)
    points: int = 3

    def tagged(self, n_scales: int, refinement: Sequence[int]) -> List[Tuple[Tuple[float, ...], int]]:
        exps, level = nested_grid(*self.log2_range, self.points, refinement)
        out = []
        for combo in itertools.product(range(len(exps)), repeat=n_scales):
            out.append((tuple(float(2.0 ** exps[i]) for i in combo),
                        int(max(level[i] for i in combo))))
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {"log2_range": list(self.log2_range), "points": self.points}


def _bump_weight(bump: NormalizedBump, shape: _BumpFamily, scales: Sequence[float]):
    R1 = scales[0]
    R2 = scales[1] if len(scales) > 1 else 1.0

    def weight(x1, x2, x3):
        coords = (x1, x2, x3)
        args = [coords[ax] * (R1 ** p) * (R2 ** q) for ax, p, q in shape.arguments]
        return bump(*args)
    return weight


def _bump_box(shape: _BumpFamily, scales: Sequence[float]) -> Dict[int, float]:
    """Half widths of the box containing the scaled unit ball."""
    R1 = scales[0]
    R2 = scales[1] if len(scales) > 1 else 1.0
    return {ax: 1.0 / ((R1 ** p) * (R2 ** q)) for ax, p, q in shape.arguments}


def c3_rhs(family_id: str, scales: Sequence[float], x: Dict[int, float], h: Dict[int, float],
           orders: Sequence[int], params: HolderParams) -> float:
    shape = _C3_SHAPES[family_id]
    if not shape.fixed:
        return 1.0
    base = _difference_bound(shape.fixed, orders, x, h, params.theta1)
    if shape.balance is not None:
        num, den = shape.balance
        base /= _balance(scales[0] * x[num] / x[den]) ** params.theta2
    return float(base)


def check_c3(kernel: KernelSpec, family_id: str, nbf_seeds: Sequence[int],
             scale_sweep: Optional[ScaleSweep] = None,
             params: Optional[HolderParams] = None,
             plan: Optional[CancellationPlan] = None,
             workers: Optional[int] = 1) -> ConditionReport:
    """
    Bump-tested check of one C3 / C3' family.

    The integral runs over the box containing the bump support, with the
    coordinate planes excised at depth ``plan.box_depth`` symmetrically, which
    is the principal value the bound refers to.
    """
    if family_id not in C3_FAMILIES:
        raise PreconditionError(f"unknown bump-tested family {family_id!r}")
    if not nbf_seeds:
        raise PreconditionError("check_c3 needs at least one bump seed")
    params = params or HolderParams()
    plan = plan or CancellationPlan()
    scale_sweep = scale_sweep or ScaleSweep()
    shape = _C3_SHAPES[family_id]
    n_scales = 2 if shape.dimension >= 2 else 1
    even = tuple(shape.arguments.index(a) for a in shape.arguments if a[0] in plan.even_axes)
    bumps = [make_nbf(shape.dimension, int(seed), even) for seed in nbf_seeds]
    combos = _family_tasks(shape.fixed, plan)
    tasks = [(b, scales, lv) for b in bumps for scales, lv in scale_sweep.tagged(n_scales, plan.refinement)]

    def run_one(item: Tuple[int, Tuple[NormalizedBump, Tuple[float, ...], int]]) -> List[Dict[str, Any]]:
        index, (bump, scales, s_level) = item
        box = _bump_box(shape, scales)
        widths = [box[i] for i in shape.integrate]
        pv = dict(zip(shape.integrate, box_ranges(widths, plan.box_depth)))
        ranges = [pv.get(i) for i in range(3)]
        weight = _bump_weight(bump, shape, scales)
        rows = []
        for x, x_level, orders, ratio in combos:
            h = {ax: ratio * abs(x[ax]) for ax in shape.fixed}
            point = tuple(x.get(i, 0.0) for i in range(3))
            if kernel.is_zero():
                value, conv, err = 0.0, True, 0.0
            else:
                res = integrate_kernel(kernel, ranges, point,
                                       stencil=_stencil_for(shape.fixed, orders, h),
                                       weight=weight, settings=plan.quadrature)
                value, conv, err = res.value, res.converged, res.error
            rhs = c3_rhs(family_id, scales, x, h, orders, params)
            row: Dict[str, Any] = {"task_index": index, "seed": bump.seed,
                                   "R1": scales[0], "R2": scales[1] if n_scales > 1 else 0.0}
            for i in range(3):
                row[f"x{i + 1}"] = point[i]
                row[f"h{i + 1}"] = h.get(i, 0.0) if (i in shape.fixed and orders[shape.fixed.index(i)]) else 0.0
                row[f"e{i + 1}"] = int(orders[shape.fixed.index(i)]) if i in shape.fixed else 0
            row.update({"value": value, "rhs": rhs, "ratio": abs(value) / rhs,
                        "quad_error": err, "converged": conv,
                        "level": max(s_level, x_level)})
            rows.append(row)
        return rows

    chunks = run_sweep(run_one, list(enumerate(tasks)), workers, label=family_id)
    frame = pd.DataFrame([row for chunk in chunks for row in chunk])
    options = {"plan": plan.to_dict(), "scales": scale_sweep.to_dict(),
               "seeds": [int(s) for s in nbf_seeds]}
    return _build_report(family_id, params, frame, len(plan.refinement), options)
