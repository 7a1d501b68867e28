"""
Bump functions for kernel synthesis and Littlewood–Paley work.

Two kinds of (phi1, phi2) pair are provided:

- ``fourier_exact``: frequency profiles built from a smooth annulus window w
  with sum_j w(2^j xi)^2 = 1 exactly for xi != 0. The window is the square
  root of a telescoping difference Phi(u) - Phi(u - 1), u = log2|xi|, where
  Phi is a C-infinity step rising over u in [-3/2, 1/2]; so w > 0 on
  1/2 <= |xi| <= 2 and w = 0 outside (2^-1.5, 2^1.5). phi2 is radial in
  (xi2, xi3). Spatial profiles are tabulated once by cosine / Hankel
  quadrature and interpolated with cubic splines; they are even and all
  moments vanish because w vanishes near the origin.
- ``spatial_compact``: psi(u) Q(u) with psi the standard mollifier on
  [-1, 1] and Q the monic degree-12 orthogonal polynomial for the weight psi,
  rescaled to the support radius. Moments of order <= 11 vanish, support is
  exact, the frequency partition is only approximate. phi2 is the tensor
  product of two such profiles fitted inside the unit ball.

Normalized bump functions for the bump-tested cancellation checks come from
``make_nbf``.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.interpolate import CubicSpline
from scipy.special import j0

from src.config.lab_defaults import (
    MOMENT_ORDER,
    FOURIER_BUMP_CUTOFF_RADIUS,
    GL_ORDER,
)
from src.utils.errors import PreconditionError
from src.utils.math_utils import composite_mesh, gauss_legendre_mesh

logger = logging.getLogger(__name__)

FOURIER_EXACT = "fourier_exact"
SPATIAL_COMPACT = "spatial_compact"
BUMP_KINDS = (FOURIER_EXACT, SPATIAL_COMPACT)
# descriptor label for how each kind of profile is built
BUMP_CONSTRUCTIONS = {
    FOURIER_EXACT: "sqrt_telescoping_annulus_window",
    SPATIAL_COMPACT: "mollifier_times_degree12_orthogonal_polynomial",
}

# log2 band where the annulus window is nonzero
WINDOW_LOG2_BAND = (-1.5, 1.5)
WINDOW_SUPPORT = (2.0 ** WINDOW_LOG2_BAND[0], 2.0 ** WINDOW_LOG2_BAND[1])

# spatial_compact profiles: |rho * xi| beyond this is treated as zero in frequency
SPATIAL_ZETA_MAX = 400.0
SPATIAL_LOG2_BAND = (-12.0, float(np.log2(SPATIAL_ZETA_MAX)))

_TABLE_POINTS = 16385
_POLY_DEGREE = 12


# ========== 平滑窗口 ==========

def smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t)."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        s = 1.0 - t
        b = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        out = a / (a + b)
    out = np.where(t <= 0, 0.0, out)
    return np.where(t >= 1, 1.0, out)


def _window_step(u: np.ndarray) -> np.ndarray:
    lo, hi = WINDOW_LOG2_BAND
    # rises over [lo, hi - 1]
    return smooth_step((u - lo) / (hi - 1.0 - lo))


def annulus_window(radius: np.ndarray) -> np.ndarray:
    """w(|xi|) with sum_j w(2^j |xi|)^2 = 1 for xi != 0."""
    r = np.abs(np.asarray(radius, dtype=float))
    out = np.zeros_like(r)
    inside = (r > WINDOW_SUPPORT[0]) & (r < WINDOW_SUPPORT[1])
    if np.any(inside):
        u = np.log2(r[inside])
        sq = _window_step(u) - _window_step(u - 1.0)
        out[inside] = np.sqrt(np.clip(sq, 0.0, None))
    return out


# ========== 紧支撑剖面 ==========

def _mollifier(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    q = 1.0 - u * u
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        out = np.where(q > 0, np.exp(-1.0 / np.where(q > 0, q, 1.0)), 0.0)
    return out


def _edge_refined_mesh(order: int = GL_ORDER, interior_panels: int = 64, depth: int = 24):
    """Mesh on [-1, 1]: uniform interior panels plus dyadic panels toward the edges."""
    inner = np.linspace(0.0, 1.0 - 2.0 ** -5, interior_panels // 2 + 1)
    edge = [1.0 - 2.0 ** (-m) for m in range(6, depth + 1)]
    breaks = [*inner, *edge, 1.0]
    x, w = composite_mesh(sorted(set(breaks)), order)
    return np.concatenate([-x[::-1], x]), np.concatenate([w[::-1], w])


@lru_cache(maxsize=1)
def _compact_profile() -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Legendre-series coefficients of Q (degree 12, orthogonal to degree <= 11
    under the weight psi), plus the quadrature mesh used for its moments.
    """
    x, w = _edge_refined_mesh()
    psi = _mollifier(x)
    basis = npleg.legvander(x, _POLY_DEGREE)  # (n, 13)
    weighted = basis * (psi * w)[:, None]
    gram = basis[:, :_POLY_DEGREE].T @ weighted[:, :_POLY_DEGREE]
    rhs = basis[:, :_POLY_DEGREE].T @ weighted[:, _POLY_DEGREE]
    a = np.linalg.solve(gram, -rhs)
    coef = np.concatenate([a, [1.0]])
    # odd Legendre terms vanish by symmetry; zero them exactly to keep Q even
    coef[1::2] = 0.0
    coef.setflags(write=False)
    return coef, x, w


def _compact_raw(u: np.ndarray) -> np.ndarray:
    coef, _, _ = _compact_profile()
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < 1.0
    out = np.zeros_like(u)
    if np.any(inside):
        out[inside] = _mollifier(u[inside]) * npleg.legval(u[inside], coef)
    return out


@lru_cache(maxsize=1)
def _compact_frequency_mesh() -> Tuple[np.ndarray, np.ndarray]:
    x, w = _edge_refined_mesh(interior_panels=256)
    return x, w * _compact_raw(x)


def _compact_raw_hat(zeta: np.ndarray) -> np.ndarray:
    """Fourier transform (e^{-i x xi}, no 2 pi) of the unit-radius compact profile."""
    z = np.abs(np.asarray(zeta, dtype=float))
    out = np.zeros_like(z)
    mask = z <= SPATIAL_ZETA_MAX
    if np.any(mask):
        x, wf = _compact_frequency_mesh()
        flat = z[mask].ravel()
        vals = np.empty_like(flat)
        for start in range(0, flat.size, 2048):
            chunk = flat[start:start + 2048]
            vals[start:start + 2048] = np.cos(np.outer(chunk, x)) @ wf
        out[mask] = vals
    return out


def compact_moment(n: int) -> float:
    """int u^n psi(u) Q(u) du on the moment mesh."""
    _, x, w = _compact_profile()
    return float(np.sum(w * x ** n * _compact_raw(x)))


@lru_cache(maxsize=1)
def _compact_peak() -> float:
    u = np.linspace(-1.0, 1.0, 20001)
    return 1.01 * float(np.max(np.abs(_compact_raw(u))))


# ========== Fourier-exact 剖面表 ==========

def _window_mesh(max_radius: float) -> Tuple[np.ndarray, np.ndarray]:
    a, b = WINDOW_SUPPORT
    panel = np.pi / (4.0 * max(max_radius, 1.0))
    n_panels = int(np.ceil((b - a) / panel))
    return composite_mesh(np.linspace(a, b, n_panels + 1), GL_ORDER)


@lru_cache(maxsize=4)
def _fourier_table_1d(radius: float) -> CubicSpline:
    """phi1(x) = (1/pi) int w(xi) cos(x xi) d xi on [0, radius]."""
    xs = np.linspace(0.0, radius, _TABLE_POINTS)
    nodes, weights = _window_mesh(radius)
    wf = weights * annulus_window(nodes) / np.pi
    vals = np.empty_like(xs)
    for start in range(0, xs.size, 1024):
        chunk = xs[start:start + 1024]
        vals[start:start + 1024] = np.cos(np.outer(chunk, nodes)) @ wf
    logger.debug("tabulated fourier phi1 on [0, %s] with %d nodes", radius, nodes.size)
    return CubicSpline(xs, vals, bc_type=((1, 0.0), "not-a-knot"))


@lru_cache(maxsize=4)
def _fourier_table_2d(radius: float) -> CubicSpline:
    """Radial phi2(r) = (1/2 pi) int w(rho) J0(rho r) rho d rho on [0, radius]."""
    rs = np.linspace(0.0, radius, _TABLE_POINTS)
    nodes, weights = _window_mesh(radius)
    wf = weights * annulus_window(nodes) * nodes / (2.0 * np.pi)
    vals = np.empty_like(rs)
    for start in range(0, rs.size, 1024):
        chunk = rs[start:start + 1024]
        vals[start:start + 1024] = j0(np.outer(chunk, nodes)) @ wf
    return CubicSpline(rs, vals, bc_type=((1, 0.0), "not-a-knot"))


def _eval_table(table: CubicSpline, radius: float, r: np.ndarray) -> np.ndarray:
    r = np.abs(np.asarray(r, dtype=float))
    out = np.zeros_like(r)
    inside = r <= radius
    if np.any(inside):
        out[inside] = table(r[inside])
    return out


@lru_cache(maxsize=8)
def _tail_envelope(kind: str, radius: float) -> Tuple[np.ndarray, np.ndarray]:
    """Nonincreasing majorant env(r) >= sup_{s >= r} |profile(s)| on a node table."""
    rs = np.linspace(0.0, radius, _TABLE_POINTS)
    if kind == "1d":
        vals = np.abs(_fourier_table_1d(radius)(rs))
    else:
        vals = np.abs(_fourier_table_2d(radius)(rs))
    env = np.maximum.accumulate(vals[::-1])[::-1]
    # small cushion for spline overshoot between nodes
    return rs, env * 1.01


def _envelope_at(kind: str, radius: float, r: np.ndarray) -> np.ndarray:
    rs, env = _tail_envelope(kind, radius)
    r = np.abs(np.asarray(r, dtype=float))
    h = rs[1] - rs[0]
    idx = np.floor(r / h).astype(np.int64)
    out = np.zeros_like(r)
    inside = idx < rs.size
    out[inside] = env[idx[inside]]
    return out


# ========== 二进分解求和 ==========

def dyadic_square_sum(freq_abs: Callable[[np.ndarray], np.ndarray],
                      radius: np.ndarray,
                      band: Tuple[float, float]) -> np.ndarray:
    """
    sum_j |F(2^j r)|^2 for a radial profile F nonzero only for log2 r in band.

    Each j is visited once: r is first scaled by an exact power of two into
    [1, 2), then shifted through every octave touching the band.
    """
    r = np.abs(np.asarray(radius, dtype=float))
    e = np.floor(np.log2(r)).astype(int)
    base = np.ldexp(r, -e)  # in [1, 2)
    total = np.zeros_like(r)
    for octave in range(int(np.floor(band[0])) - 1, int(np.ceil(band[1])) + 1):
        total += np.abs(freq_abs(np.ldexp(base, octave))) ** 2
    return total


# ========== 数据结构 ==========

@dataclass(frozen=True)
class Bump1D:
    """
    One-variable bump phi1.

    Attributes
    ----------
    kind : str
        'fourier_exact' or 'spatial_compact'
    support_radius : float or None
        exact support radius (spatial_compact only)
    moment_order : int
        highest moment order required to vanish
    """
    kind: str
    support_radius: Optional[float] = None
    moment_order: int = MOMENT_ORDER
    table_radius: float = FOURIER_BUMP_CUTOFF_RADIUS
    scale: float = field(default=1.0, compare=False)

    @property
    def extent(self) -> float:
        """Radius beyond which spatial values are exactly zero."""
        return self.support_radius if self.kind == SPATIAL_COMPACT else self.table_radius

    def spatial(self, x: Any) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == FOURIER_EXACT:
            return _eval_table(_fourier_table_1d(self.table_radius), self.table_radius, x)
        rho = self.support_radius
        return self.scale * _compact_raw(x / rho)

    def frequency(self, xi: Any) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if self.kind == FOURIER_EXACT:
            return annulus_window(xi)
        rho = self.support_radius
        return self.scale * rho * _compact_raw_hat(rho * xi)

    def envelope(self, r: Any) -> np.ndarray:
        """Nonincreasing bound on |phi1| over |x| >= r."""
        r = np.abs(np.asarray(r, dtype=float))
        if self.kind == FOURIER_EXACT:
            return _envelope_at("1d", self.table_radius, r)
        peak = abs(self.scale) * _compact_peak()
        return np.where(r < self.support_radius, peak, 0.0)

    @property
    def log2_band(self) -> Tuple[float, float]:
        if self.kind == FOURIER_EXACT:
            return WINDOW_LOG2_BAND
        shift = float(np.log2(self.support_radius))
        return SPATIAL_LOG2_BAND[0] - shift, SPATIAL_LOG2_BAND[1] - shift

    def partition_sum(self, xi: Any) -> np.ndarray:
        return dyadic_square_sum(self.frequency, xi, self.log2_band)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "construction": BUMP_CONSTRUCTIONS[self.kind],
            "support_radius": self.support_radius,
            "moment_order": self.moment_order,
            "table_radius": self.table_radius,
        }


@dataclass(frozen=True)
class Bump2D:
    """Two-variable bump phi2 in (x2, x3); radial for fourier_exact, tensor for spatial_compact."""
    kind: str
    support_radius: Optional[float] = None
    moment_order: int = MOMENT_ORDER
    table_radius: float = FOURIER_BUMP_CUTOFF_RADIUS
    scale: float = field(default=1.0, compare=False)

    @property
    def extent(self) -> float:
        return self.support_radius if self.kind == SPATIAL_COMPACT else self.table_radius

    @property
    def _sigma(self) -> float:
        # tensor square [-sigma, sigma]^2 fits inside the disc of the support radius
        return self.support_radius / np.sqrt(2.0)

    def spatial(self, y2: Any, y3: Any) -> np.ndarray:
        y2 = np.asarray(y2, dtype=float)
        y3 = np.asarray(y3, dtype=float)
        if self.kind == FOURIER_EXACT:
            return _eval_table(_fourier_table_2d(self.table_radius), self.table_radius,
                               np.hypot(y2, y3))
        s = self._sigma
        return self.scale * _compact_raw(y2 / s) * _compact_raw(y3 / s)

    def frequency(self, e2: Any, e3: Any) -> np.ndarray:
        e2 = np.asarray(e2, dtype=float)
        e3 = np.asarray(e3, dtype=float)
        if self.kind == FOURIER_EXACT:
            return annulus_window(np.hypot(e2, e3))
        s = self._sigma
        return self.scale * s * s * _compact_raw_hat(s * e2) * _compact_raw_hat(s * e3)

    def envelope(self, r: Any) -> np.ndarray:
        """Nonincreasing bound on |phi2| over |y| >= r."""
        r = np.abs(np.asarray(r, dtype=float))
        if self.kind == FOURIER_EXACT:
            return _envelope_at("2d", self.table_radius, r)
        peak = abs(self.scale) * _compact_peak() ** 2
        return np.where(r < self.support_radius, peak, 0.0)

    @property
    def log2_band(self) -> Tuple[float, float]:
        if self.kind == FOURIER_EXACT:
            return WINDOW_LOG2_BAND
        shift = float(np.log2(self._sigma))
        return SPATIAL_LOG2_BAND[0] - shift, SPATIAL_LOG2_BAND[1] - shift + 0.5

    def partition_sum(self, e2: Any, e3: Any) -> np.ndarray:
        e2 = np.asarray(e2, dtype=float)
        e3 = np.asarray(e3, dtype=float)
        r = np.hypot(e2, e3)
        c, s = e2 / r, e3 / r
        return dyadic_square_sum(lambda rr: self.frequency(rr * c, rr * s), r, self.log2_band)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "construction": BUMP_CONSTRUCTIONS[self.kind],
            "support_radius": self.support_radius,
            "moment_order": self.moment_order,
            "table_radius": self.table_radius,
        }


@dataclass(frozen=True)
class BumpPair:
    phi1: Bump1D
    phi2: Bump2D

    def __post_init__(self) -> None:
        if self.phi1.kind != self.phi2.kind:
            raise PreconditionError(
                f"bump pair mixes kinds {self.phi1.kind} and {self.phi2.kind}"
            )

    @property
    def kind(self) -> str:
        return self.phi1.kind

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "construction": BUMP_CONSTRUCTIONS[self.kind],
            "support_radius": self.phi1.support_radius,
            "table_radius": self.phi1.table_radius,
        }


# ========== 构造 ==========

def build_fourier_bumps(table_radius: float = FOURIER_BUMP_CUTOFF_RADIUS) -> BumpPair:
    return BumpPair(
        Bump1D(FOURIER_EXACT, table_radius=float(table_radius)),
        Bump2D(FOURIER_EXACT, table_radius=float(table_radius)),
    )


@lru_cache(maxsize=1)
def _compact_scales() -> Tuple[float, float]:
    """
    Constants making the mean (over one octave) of the partition sums equal 1
    for unit support radius; they rescale as 1/rho and 1/sigma^2.
    """
    u = (np.arange(64) + 0.5) / 64.0
    xi = np.exp2(u)
    raw1 = Bump1D(SPATIAL_COMPACT, support_radius=1.0)
    c1 = 1.0 / np.sqrt(np.mean(raw1.partition_sum(xi)))

    raw2 = Bump2D(SPATIAL_COMPACT, support_radius=1.0)
    angles = (np.arange(8) + 0.5) * (np.pi / 16.0)
    rr, aa = np.meshgrid(xi, angles, indexing="ij")
    mean2 = np.mean(raw2.partition_sum(rr * np.cos(aa), rr * np.sin(aa)))
    c2 = 1.0 / np.sqrt(mean2)
    return float(c1), float(c2)


def build_spatial_bumps(support_radius: float = 1.0) -> BumpPair:
    if not support_radius > 0:
        raise PreconditionError(f"support_radius must be positive, got {support_radius}")
    if support_radius > 1:
        raise PreconditionError(f"support_radius must be <= 1, got {support_radius}")
    rho = float(support_radius)
    c1, c2 = _compact_scales()
    # unit-radius constants: phi1 hat scales like rho, phi2 hat like sigma^2
    return BumpPair(
        Bump1D(SPATIAL_COMPACT, support_radius=rho, scale=c1 / rho),
        Bump2D(SPATIAL_COMPACT, support_radius=rho, scale=c2 / (rho * rho)),
    )


def build_bumps(kind: str, support_radius: float = 1.0,
                table_radius: float = FOURIER_BUMP_CUTOFF_RADIUS) -> BumpPair:
    if kind == FOURIER_EXACT:
        return build_fourier_bumps(table_radius)
    if kind == SPATIAL_COMPACT:
        return build_spatial_bumps(support_radius)
    raise PreconditionError(f"unknown bump kind: {kind}")


# ========== 检查 ==========

def partition_defect(pair: BumpPair, frequency_samples: Any) -> float:
    """
    sup over samples of |sum_j |phi1_hat(2^j xi1)|^2 - 1| and of
    |sum_k |phi2_hat(2^k xi2, 2^k xi3)|^2 - 1|, whichever is larger.

    Samples are rows (xi1, xi2, xi3); a 1D array is read as xi1 = xi2 with xi3 = 0.
    """
    s = np.asarray(frequency_samples, dtype=float)
    if s.size == 0:
        raise PreconditionError("partition_defect needs at least one frequency sample")
    if s.ndim == 1:
        s = np.column_stack([s, s, np.zeros_like(s)])
    if s.shape[1] != 3:
        raise PreconditionError("frequency samples must be rows (xi1, xi2, xi3)")
    if np.any(s[:, 0] == 0) or np.any((s[:, 1] == 0) & (s[:, 2] == 0)):
        raise PreconditionError("frequency sample at an excluded origin")
    d1 = np.max(np.abs(pair.phi1.partition_sum(s[:, 0]) - 1.0))
    d2 = np.max(np.abs(pair.phi2.partition_sum(s[:, 1], s[:, 2]) - 1.0))
    return float(max(d1, d2))


def moment(bump: Any, multi_index: Any) -> float:
    """
    int x^alpha phi dx.

    fourier_exact: the frequency profile vanishes identically on
    |xi| < 2^-1.5, so every derivative at 0 is zero and the moment is 0.
    spatial_compact: Gauss–Legendre on the support.
    """
    idx = (int(multi_index),) if np.isscalar(multi_index) else tuple(int(a) for a in multi_index)
    if any(a < 0 for a in idx):
        raise PreconditionError(f"moment indices must be >= 0, got {idx}")
    if isinstance(bump, Bump1D):
        if len(idx) != 1:
            raise PreconditionError("Bump1D moments take a single index")
        if bump.kind == FOURIER_EXACT:
            return 0.0
        n = idx[0]
        rho = bump.support_radius
        return bump.scale * rho ** (n + 1) * compact_moment(n)
    if isinstance(bump, Bump2D):
        if len(idx) != 2:
            raise PreconditionError("Bump2D moments take (beta, gamma)")
        if bump.kind == FOURIER_EXACT:
            return 0.0
        b, g = idx
        s = bump._sigma
        return bump.scale * s ** (b + g + 2) * compact_moment(b) * compact_moment(g)
    if isinstance(bump, NormalizedBump):
        return bump.moment(idx)
    raise PreconditionError(f"unsupported bump type {type(bump).__name__}")


# ========== 归一化 bump (n.b.f.) ==========

_NBF_DENSE = {1: 4097, 2: 257, 3: 65}
_NBF_MARGIN = 1.1


@dataclass(frozen=True)
class NormalizedBump:
    """
    Smooth bump supported in the unit ball with sup|phi| <= 1 and sup|grad phi| <= 1.

    phi(x) = a * psi(|x|) * (c0 + sum_m c_m cos(pi m.x) + s_m sin(pi m.x)), with
    psi the radial mollifier, coefficients drawn from ``seed`` and ``a`` fixed by
    a dense-sample sup estimate with a 10% margin. ``even_axes`` symmetrizes the
    profile in the listed axes.
    """
    dimension: int
    seed: int
    even_axes: Tuple[int, ...] = ()
    coefficients: Tuple[Tuple[float, ...], ...] = field(default=(), compare=False, repr=False)
    amplitude: float = field(default=1.0, compare=False)
    sup_bound: float = 1.0
    grad_bound: float = 1.0

    def _raw(self, coords: Sequence[np.ndarray]) -> np.ndarray:
        coords = [np.asarray(c, dtype=float) for c in coords]
        r2 = sum(c * c for c in coords)
        base = _mollifier(np.sqrt(np.minimum(r2, 1.0)))
        poly = np.zeros(np.broadcast(*coords).shape)
        for row in self.coefficients:
            m = row[: self.dimension]
            a, b = row[self.dimension], row[self.dimension + 1]
            phase = np.pi * sum(mi * c for mi, c in zip(m, coords))
            poly = poly + a * np.cos(phase) + b * np.sin(phase)
        return np.where(r2 < 1.0, base * poly, 0.0)

    def _sym(self, coords: Sequence[np.ndarray]) -> np.ndarray:
        if not self.even_axes:
            return self._raw(coords)
        images = []
        for size in range(len(self.even_axes) + 1):
            for flip in itertools.combinations(self.even_axes, size):
                flipped = [(-np.asarray(c) if ax in flip else c) for ax, c in enumerate(coords)]
                images.append(self._raw(flipped))
        # sorted before summing so reflected inputs give bit-identical values
        stacked = np.sort(np.stack(np.broadcast_arrays(*images)), axis=0)
        return np.sum(stacked, axis=0) / len(images)

    def __call__(self, *coords: Any) -> np.ndarray:
        if len(coords) != self.dimension:
            raise PreconditionError(f"nbf of dimension {self.dimension} got {len(coords)} coordinates")
        return self.amplitude * self._sym(coords)

    def moment(self, idx: Tuple[int, ...]) -> float:
        x, w = gauss_legendre_mesh(-1.0, 1.0, 48)
        grids = np.meshgrid(*([x] * self.dimension), indexing="ij")
        weights = np.ones_like(grids[0])
        for ax in range(self.dimension):
            shape = [1] * self.dimension
            shape[ax] = -1
            weights = weights * w.reshape(shape)
        mono = np.ones_like(grids[0])
        for ax, a in enumerate(idx):
            mono = mono * grids[ax] ** a
        return float(np.sum(weights * mono * self(*grids)))

    def to_dict(self) -> Dict[str, Any]:
        return {"dimension": self.dimension, "seed": self.seed, "even_axes": list(self.even_axes)}


def make_nbf(dimension: int, seed: int, even_axes: Sequence[int] = ()) -> NormalizedBump:
    if dimension not in (1, 2, 3):
        raise PreconditionError(f"nbf dimension must be 1, 2 or 3, got {dimension}")
    rng = np.random.default_rng(seed)
    modes = []
    for _ in range(3):
        m = tuple(float(v) for v in rng.integers(0, 3, size=dimension))
        a, b = rng.uniform(-1.0, 1.0, size=2)
        modes.append((*m, float(a), float(b)))
    modes.append((*([0.0] * dimension), 1.0, 0.0))
    draft = NormalizedBump(dimension, int(seed), tuple(even_axes), tuple(modes), 1.0)

    n = _NBF_DENSE[dimension]
    axis = np.linspace(-1.0, 1.0, n)
    grids = np.meshgrid(*([axis] * dimension), indexing="ij")
    vals = draft._sym(grids)
    grads = np.gradient(vals, axis[1] - axis[0]) if dimension > 1 else [np.gradient(vals, axis[1] - axis[0])]
    grad_mag = np.sqrt(sum(g * g for g in grads))
    vmax = float(np.max(np.abs(vals)))
    gmax = float(np.max(grad_mag))
    peak = max(vmax, gmax)
    if peak == 0.0:
        return draft
    amplitude = 1.0 / (_NBF_MARGIN * peak)
    return NormalizedBump(dimension, int(seed), tuple(even_axes), tuple(modes), amplitude)
