"""
Singular kernels on R^3 minus the coordinate planes.

Variants:
- NagelWainger: sgn(x1 x2) |x1|^(a-1) |x2|^(b-1) / (|x1|^(2a) |x2|^(2b) + x3^2)
- RicciSteinDyadic: finite double dyadic sum of rescaled bump pairs
- Dilated: w(s, t) * base(s x1, t x2, s^a t^b x3) with w = s^(1+a) t^(1+b);
  a = b = 1 is the Zygmund dilation s^2 t^2 base(s x1, t x2, st x3)
- Truncated: base restricted to eps_i <= |x_i| <= N_i
- KernelSum / ZeroKernel

All kernels are immutable and evaluate vectorized over broadcastable
coordinate arrays via ``__call__``; ``eval_kernel`` is the checked single-point
entry that enforces the domain contract.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from src.config.lab_defaults import DEFAULT_J_RANGE, DEFAULT_K_RANGE, RS_SKIP_THRESHOLD
from src.kernels.bumps import BumpPair
from src.utils.errors import DomainError, PreconditionError

logger = logging.getLogger(__name__)

Point = Tuple[float, float, float]


class KernelSpec:
    """Base class; subclasses implement ``_evaluate`` on broadcast arrays."""

    variant = "abstract"
    # axes whose zero set is excluded from the domain
    singular_axes: Tuple[int, ...] = (0, 1, 2)
    # per-axis parity (+1 even, -1 odd) when known exactly, else None
    parity: Optional[Tuple[int, int, int]] = None

    def __call__(self, x1: Any, x2: Any, x3: Any) -> np.ndarray:
        x1, x2, x3 = np.broadcast_arrays(
            np.asarray(x1, dtype=float), np.asarray(x2, dtype=float), np.asarray(x3, dtype=float)
        )
        return self._evaluate(x1, x2, x3)

    def _evaluate(self, x1: np.ndarray, x2: np.ndarray, x3: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def is_zero(self) -> bool:
        return False

    def to_dict(self) -> Dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class ZeroKernel(KernelSpec):
    variant = "zero"
    parity = (1, 1, 1)

    def _evaluate(self, x1, x2, x3):
        return np.zeros(x1.shape)

    def is_zero(self) -> bool:
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {"variant": self.variant}


@dataclass(frozen=True, eq=False)
class NagelWainger(KernelSpec):
    alpha: float = 1.0
    beta: float = 1.0

    variant = "nagel_wainger"
    # the closed form stays finite on x3 = 0
    singular_axes = (0, 1)
    parity = (-1, -1, 1)

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and self.beta > 0):
            raise PreconditionError(f"NW exponents must be positive, got ({self.alpha}, {self.beta})")

    def _evaluate(self, x1, x2, x3):
        a1 = np.abs(x1)
        a2 = np.abs(x2)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if self.alpha == 1.0 and self.beta == 1.0:
                num = np.sign(x1) * np.sign(x2)
                den = (a1 * a2) ** 2 + x3 * x3
            else:
                num = np.sign(x1) * np.sign(x2) * a1 ** (self.alpha - 1.0) * a2 ** (self.beta - 1.0)
                den = a1 ** (2.0 * self.alpha) * a2 ** (2.0 * self.beta) + x3 * x3
            return num / den

    def to_dict(self) -> Dict[str, Any]:
        return {"variant": self.variant, "alpha": float(self.alpha), "beta": float(self.beta)}


@dataclass(frozen=True, eq=False)
class RicciSteinDyadic(KernelSpec):
    """
    sum_{j,k} 2^(2j+2k) phi1(2^j x1) phi2(2^k x2, 2^(j+k) x3)   (orientation 'x1')
    sum_{j,k} 2^(2j+2k) phi1(2^j x2) phi2(2^k x1, 2^(j+k) x3)   (orientation 'x2')

    Ranges are inclusive. A term is skipped at a point once its envelope
    bound drops below ``skip_threshold`` times the running sum there.
    """
    bumps: BumpPair
    j_range: Tuple[int, int] = DEFAULT_J_RANGE
    k_range: Tuple[int, int] = DEFAULT_K_RANGE
    orientation: str = "x1"
    skip_threshold: float = RS_SKIP_THRESHOLD

    variant = "ricci_stein"
    # phi1 and phi2 are even in every argument
    parity = (1, 1, 1)

    def __post_init__(self) -> None:
        for name in ("j_range", "k_range"):
            lo, hi = getattr(self, name)
            if int(lo) != lo or int(hi) != hi:
                raise PreconditionError(f"{name} must hold integers, got {(lo, hi)}")
            if hi < lo:
                raise PreconditionError(f"{name} is empty: {(lo, hi)}")
            object.__setattr__(self, name, (int(lo), int(hi)))
        if self.orientation not in ("x1", "x2"):
            raise PreconditionError(f"orientation must be 'x1' or 'x2', got {self.orientation!r}")

    def _axes(self, x1, x2):
        # (one-variable axis, two-variable first axis)
        return (x1, x2) if self.orientation == "x1" else (x2, x1)

    def _evaluate(self, x1, x2, x3):
        lone, pair_first = self._axes(x1, x2)
        phi1, phi2 = self.bumps.phi1, self.bumps.phi2
        out = np.zeros(x1.shape)
        flat_out = out.reshape(-1)
        a = np.abs(lone).reshape(-1)
        b = pair_first.reshape(-1)
        c = x3.reshape(-1)
        j_lo, j_hi = self.j_range
        k_lo, k_hi = self.k_range
        for j in range(j_lo, j_hi + 1):
            sj = 2.0 ** j
            env1 = phi1.envelope(sj * a)
            live = np.flatnonzero(env1 > 0)
            if live.size == 0:
                continue
            v1 = phi1.spatial(sj * a[live])
            for k in range(k_lo, k_hi + 1):
                sk = 2.0 ** k
                weight = 2.0 ** (2 * j + 2 * k)
                y2 = sk * b[live]
                y3 = (sj * sk) * c[live]
                env = weight * env1[live] * phi2.envelope(np.hypot(y2, y3))
                keep = env > self.skip_threshold * np.abs(flat_out[live])
                keep &= env > 0
                if not np.any(keep):
                    continue
                idx = live[keep]
                flat_out[idx] += weight * v1[keep] * phi2.spatial(y2[keep], y3[keep])
        return out

    def naive_sum(self, x1: Any, x2: Any, x3: Any) -> np.ndarray:
        """Full double loop with no term skipping (reference)."""
        x1, x2, x3 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x1, x2, x3)))
        lone, pair_first = self._axes(x1, x2)
        total = np.zeros(x1.shape)
        for j in range(self.j_range[0], self.j_range[1] + 1):
            for k in range(self.k_range[0], self.k_range[1] + 1):
                total = total + 2.0 ** (2 * j + 2 * k) * self.bumps.phi1.spatial(2.0 ** j * lone) \
                    * self.bumps.phi2.spatial(2.0 ** k * pair_first, 2.0 ** (j + k) * x3)
        return total

    def shifted(self, dj: int, dk: int) -> "RicciSteinDyadic":
        return RicciSteinDyadic(
            self.bumps,
            (self.j_range[0] + dj, self.j_range[1] + dj),
            (self.k_range[0] + dk, self.k_range[1] + dk),
            self.orientation,
            self.skip_threshold,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variant": self.variant,
            "bumps": self.bumps.to_dict(),
            "j_range": list(self.j_range),
            "k_range": list(self.k_range),
            "orientation": self.orientation,
        }


@dataclass(frozen=True, eq=False)
class Dilated(KernelSpec):
    base: KernelSpec
    s: float
    t: float
    a: float = 1.0
    b: float = 1.0

    variant = "dilated"

    def __post_init__(self) -> None:
        if not (self.s > 0 and self.t > 0):
            raise PreconditionError(f"dilation parameters must be positive, got s={self.s}, t={self.t}")

    @property
    def singular_axes(self) -> Tuple[int, ...]:  # type: ignore[override]
        return self.base.singular_axes

    @property
    def parity(self) -> Optional[Tuple[int, int, int]]:  # type: ignore[override]
        return self.base.parity

    @property
    def x3_factor(self) -> float:
        return self.s ** self.a * self.t ** self.b

    @property
    def weight(self) -> float:
        return self.s ** (1.0 + self.a) * self.t ** (1.0 + self.b)

    def _evaluate(self, x1, x2, x3):
        return self.weight * self.base(self.s * x1, self.t * x2, self.x3_factor * x3)

    def is_zero(self) -> bool:
        return self.base.is_zero()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variant": self.variant,
            "base": self.base.to_dict(),
            "s": float(self.s),
            "t": float(self.t),
            "a": float(self.a),
            "b": float(self.b),
        }


@dataclass(frozen=True)
class TruncationBox:
    """eps_i <= |x_i| <= N_i for every axis."""
    eps: Point
    cap: Point

    def __post_init__(self) -> None:
        eps = tuple(float(e) for e in self.eps)
        cap = tuple(float(n) for n in self.cap)
        if len(eps) != 3 or len(cap) != 3:
            raise PreconditionError("TruncationBox needs three eps and three caps")
        for i, (e, n) in enumerate(zip(eps, cap)):
            if not (e > 0 and n > 0):
                raise PreconditionError(f"box bounds must be positive on axis {i}")
            if e > n:
                raise PreconditionError(f"eps[{i}]={e} exceeds cap[{i}]={n}")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "cap", cap)

    def contains(self, x1, x2, x3) -> np.ndarray:
        m = np.ones(np.broadcast(x1, x2, x3).shape, dtype=bool)
        for e, n, x in zip(self.eps, self.cap, (x1, x2, x3)):
            ax = np.abs(x)
            m &= (ax >= e) & (ax <= n)
        return m

    def widens(self, other: "TruncationBox") -> bool:
        """True when ``other`` is at least as wide on every axis."""
        return all(o <= e for o, e in zip(other.eps, self.eps)) and \
            all(o >= n for o, n in zip(other.cap, self.cap))

    def scaled(self, s: float, t: float) -> "TruncationBox":
        f = (s, t, s * t)
        return TruncationBox(tuple(e * fi for e, fi in zip(self.eps, f)),
                             tuple(n * fi for n, fi in zip(self.cap, f)))

    def to_dict(self) -> Dict[str, Any]:
        return {"eps": list(self.eps), "cap": list(self.cap)}


@dataclass(frozen=True, eq=False)
class Truncated(KernelSpec):
    base: KernelSpec
    box: TruncationBox

    variant = "truncated"

    @property
    def singular_axes(self) -> Tuple[int, ...]:  # type: ignore[override]
        return self.base.singular_axes

    @property
    def parity(self) -> Optional[Tuple[int, int, int]]:  # type: ignore[override]
        return self.base.parity

    def _evaluate(self, x1, x2, x3):
        inside = self.box.contains(x1, x2, x3)
        out = np.zeros(x1.shape)
        if np.any(inside):
            out[inside] = self.base(x1[inside], x2[inside], x3[inside])
        return out

    def is_zero(self) -> bool:
        return self.base.is_zero()

    def to_dict(self) -> Dict[str, Any]:
        return {"variant": self.variant, "base": self.base.to_dict(), "box": self.box.to_dict()}


@dataclass(frozen=True, eq=False)
class KernelSum(KernelSpec):
    terms: Tuple[KernelSpec, ...] = field(default_factory=tuple)

    variant = "sum"

    def __post_init__(self) -> None:
        if not self.terms:
            raise PreconditionError("kernel sum needs at least one term")
        object.__setattr__(self, "terms", tuple(self.terms))

    @property
    def singular_axes(self) -> Tuple[int, ...]:  # type: ignore[override]
        axes = set()
        for term in self.terms:
            axes.update(term.singular_axes)
        return tuple(sorted(axes))

    @property
    def parity(self) -> Optional[Tuple[int, int, int]]:  # type: ignore[override]
        parities = {t.parity for t in self.terms if not t.is_zero()}
        return parities.pop() if len(parities) == 1 else (None if parities else (1, 1, 1))

    def _evaluate(self, x1, x2, x3):
        total = np.zeros(x1.shape)
        for term in self.terms:
            total = total + term(x1, x2, x3)
        return total

    def is_zero(self) -> bool:
        return all(t.is_zero() for t in self.terms)

    def to_dict(self) -> Dict[str, Any]:
        return {"variant": self.variant, "terms": [t.to_dict() for t in self.terms]}


# ========== 操作 ==========

def check_point(kernel: KernelSpec, point: Sequence[float]) -> Point:
    if len(point) != 3:
        raise DomainError("point must have three coordinates", None)
    p = tuple(float(v) for v in point)
    if not all(np.isfinite(p)):
        raise DomainError("non-finite point", p)
    for ax in kernel.singular_axes:
        if p[ax] == 0.0:
            raise DomainError(f"point on the coordinate plane x{ax + 1} = 0", p)
    return p


def eval_kernel(kernel: KernelSpec, point: Sequence[float]) -> float:
    p = check_point(kernel, point)
    value = float(kernel(*p))
    if not np.isfinite(value):
        raise DomainError("kernel not finite", p)
    return value


def zygmund_dilate(kernel: KernelSpec, s: float, t: float) -> Dilated:
    """s^2 t^2 K(s x1, t x2, s t x3)."""
    return Dilated(kernel, float(s), float(t))


def anisotropic_dilate(kernel: KernelSpec, s: float, t: float, a: float, b: float) -> Dilated:
    """s^(1+a) t^(1+b) K(s x1, t x2, s^a t^b x3)."""
    if not (a > 0 and b > 0):
        raise PreconditionError(f"dilation exponents must be positive, got ({a}, {b})")
    return Dilated(kernel, float(s), float(t), float(a), float(b))


def nw_natural_dilate(kernel: NagelWainger, s: float, t: float) -> Dilated:
    """The dilation group under which an NW kernel with exponents (alpha, beta) is invariant."""
    return anisotropic_dilate(kernel, s, t, kernel.alpha, kernel.beta)


def synth_ricci_stein(bumps: BumpPair,
                      j_range: Sequence[int] = DEFAULT_J_RANGE,
                      k_range: Sequence[int] = DEFAULT_K_RANGE,
                      orientation: str = "x1") -> RicciSteinDyadic:
    if len(j_range) != 2 or len(k_range) != 2:
        raise PreconditionError("ranges are (lo, hi) pairs")
    kernel = RicciSteinDyadic(bumps, tuple(j_range), tuple(k_range), orientation)
    logger.debug("synthesized RS kernel j=%s k=%s orientation=%s", kernel.j_range, kernel.k_range, orientation)
    return kernel


def truncate(kernel: KernelSpec, box: TruncationBox) -> Truncated:
    return Truncated(kernel, box)


def kernel_sum(*kernels: KernelSpec) -> KernelSum:
    return KernelSum(tuple(kernels))
