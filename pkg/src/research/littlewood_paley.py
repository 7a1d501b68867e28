"""
Zygmund-type Littlewood–Paley pieces on a sampled grid.

phi_{j,k}(x) = 2^{-2(j+k)} phi1(2^-j x1) phi2(2^-k x2, 2^-(j+k) x3), whose
transform is phi1_hat(2^j xi1) phi2_hat(2^k xi2, 2^(j+k) xi3). All
convolutions with phi_{j,k} are done on the Fourier side of the grid, so
products of multipliers with disjoint supports are exactly zero.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import fft as sfft

from src.config.lab_defaults import LP_REPORT_P, PAIR_ENVELOPE_L, PAIR_ENVELOPE_M
from src.grid.grid import Grid3, SampledField3, lp_norm, sample_field
from src.kernels.bumps import BumpPair
from src.kernels.kernels import KernelSpec, NagelWainger, TruncationBox
from src.operators.convolution import TruncatedConvolver
from src.services.sweep_runner import run_sweep
from src.utils.errors import InvariantViolation, PreconditionError, ResolutionError
from src.utils.math_utils import json_float

logger = logging.getLogger(__name__)

DyadicIndex = Tuple[int, int]

PAIR = "pair"
SANDWICH = "sandwich"

# 小于 raw_sup 的这个比例的点视为舍入噪声, 不参与归一化
NOISE_FLOOR = 1e-12
# 网格边界层质量占比超过此值时告警
TAIL_TOL = 1e-6


# ========== 数据结构 ==========

@dataclass(frozen=True)
class LPFamily:
    """
    Finite family of dyadic pieces phi_{j,k}.

    Attributes
    ----------
    bumps : BumpPair
    index_set : tuple of (j, k)
        Sorted, without repeats
    lam : float
        Decay exponent margin, 1/2 min(theta1, theta2), in (0, 1/2]
    """
    bumps: BumpPair
    index_set: Tuple[DyadicIndex, ...]
    lam: float = 0.5

    def __post_init__(self) -> None:
        idx = tuple(sorted({(int(j), int(k)) for j, k in self.index_set}))
        if not idx:
            raise PreconditionError("LP index set is empty")
        if not (0.0 < self.lam <= 0.5):
            raise PreconditionError(f"lambda must lie in (0, 1/2], got {self.lam}")
        object.__setattr__(self, "index_set", idx)

    @classmethod
    def from_ranges(cls, bumps: BumpPair, j_range: Tuple[int, int], k_range: Tuple[int, int],
                    theta1: float = 1.0, theta2: float = 1.0) -> "LPFamily":
        """Full rectangle j_range x k_range, both ends included."""
        index = [(j, k) for j in range(j_range[0], j_range[1] + 1)
                 for k in range(k_range[0], k_range[1] + 1)]
        return cls(bumps, tuple(index), 0.5 * min(theta1, theta2))

    @property
    def finest(self) -> Tuple[int, int, int]:
        """Smallest j, k and j + k in the family."""
        return (min(j for j, _ in self.index_set),
                min(k for _, k in self.index_set),
                min(j + k for j, k in self.index_set))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "bumps": self.bumps.to_dict(),
            "index_set": [list(p) for p in self.index_set],
            "lambda": self.lam,
        }


@dataclass(frozen=True, eq=False)
class DyadicBump(KernelSpec):
    """phi_{j,k} as a point evaluator."""
    bumps: BumpPair
    j: int
    k: int

    variant = "dyadic_bump"
    singular_axes = ()

    def _evaluate(self, x1: np.ndarray, x2: np.ndarray, x3: np.ndarray) -> np.ndarray:
        j, k = self.j, self.k
        a = self.bumps.phi1.spatial(np.ldexp(x1, -j))
        b = self.bumps.phi2.spatial(np.ldexp(x2, -k), np.ldexp(x3, -(j + k)))
        return np.ldexp(a * b, -2 * (j + k))

    def frequency(self, xi1: Any, xi2: Any, xi3: Any) -> np.ndarray:
        j, k = self.j, self.k
        return self.bumps.phi1.frequency(np.ldexp(xi1, j)) * \
            self.bumps.phi2.frequency(np.ldexp(xi2, k), np.ldexp(xi3, j + k))

    def to_dict(self) -> Dict[str, Any]:
        return {"variant": self.variant, "j": self.j, "k": self.k, "bumps": self.bumps.to_dict()}


@dataclass
class OrthogonalityMatrix:
    """
    Envelope-normalized sups of phi_{j,k} * phi_{j',k'} (pair) or
    phi_{j,k} * K * phi_{j',k'} (sandwich) over a family.

    Attributes
    ----------
    entries : pd.DataFrame
        Columns j, k, j_prime, k_prime, raw_sup, normalized_entry
    envelope : dict
        (L, M) in pair mode, lambda in sandwich mode
    tail_fraction : float
        Largest boundary-layer mass share among the sandwich fields; 0 in pair mode
    """
    mode: str
    entries: pd.DataFrame
    envelope: Dict[str, float] = field(default_factory=dict)
    tail_fraction: float = 0.0

    def to_frame(self) -> pd.DataFrame:
        return self.entries.copy()

    def diagonal(self) -> pd.DataFrame:
        e = self.entries
        return e[(e["j"] == e["j_prime"]) & (e["k"] == e["k_prime"])]

    def to_dict(self) -> Dict[str, Any]:
        e = self.entries
        return {
            "mode": self.mode,
            "envelope": dict(self.envelope),
            "entries": int(len(e)),
            "zero_entries": int((e["raw_sup"] == 0.0).sum()),
            "max_normalized": json_float(float(e["normalized_entry"].max())),
            "max_diagonal": json_float(float(self.diagonal()["normalized_entry"].max())),
            "tail_fraction": json_float(self.tail_fraction),
        }


@dataclass
class BumpEnvelope:
    """sup |K_box * phi| (1 + |x1|)^(1+lam) (1 + |x2|)^(1+lam) (1 + |x3|)^(1+lam)."""
    sup: float
    argmax: Tuple[float, float, float]
    tail_fraction: float
    lam: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sup": json_float(self.sup),
            "argmax": list(self.argmax),
            "tail_fraction": json_float(self.tail_fraction),
            "lambda": self.lam,
        }


# ========== 构造 ==========

def make_phi_jk(bumps: BumpPair, j: int, k: int) -> DyadicBump:
    return DyadicBump(bumps, int(j), int(k))


# ========== 频域工具 ==========

def _frequency_axes(grid: Grid3) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Angular frequencies of the real FFT of a grid field, broadcast-ready."""
    (n1, n2, n3), (h1, h2, h3) = grid.points, grid.spacing
    w1 = 2.0 * math.pi * sfft.fftfreq(n1, d=h1)
    w2 = 2.0 * math.pi * sfft.fftfreq(n2, d=h2)
    w3 = 2.0 * math.pi * sfft.rfftfreq(n3, d=h3)
    return w1[:, None, None], w2[None, :, None], w3[None, None, :]


def _lag_axes(grid: Grid3) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Offsets m * h in FFT order, the positions of an inverse transform."""
    axes = [h * sfft.fftfreq(n, d=1.0 / n) for n, h in zip(grid.points, grid.spacing)]
    return axes[0][:, None, None], axes[1][None, :, None], axes[2][None, None, :]


def _multipliers(family: LPFamily, grid: Grid3) -> Dict[DyadicIndex, np.ndarray]:
    w = _frequency_axes(grid)
    return {(j, k): make_phi_jk(family.bumps, j, k).frequency(*w) for j, k in family.index_set}


def check_lp_resolution(grid: Grid3, family: LPFamily) -> None:
    """Spacing at most a quarter of the finest scale on every axis."""
    required = tuple(0.25 * 2.0 ** e for e in family.finest)
    for i, (h, r) in enumerate(zip(grid.spacing, required)):
        if h > r:
            raise ResolutionError(
                f"grid spacing h{i + 1}={h:.6g} does not resolve the finest LP scale "
                f"(needs <= {r:.6g})",
                required_spacing=required,
            )


def _spectrum(f: SampledField3) -> np.ndarray:
    return sfft.rfftn(f.data)


def _inverse(F: np.ndarray, grid: Grid3) -> np.ndarray:
    return sfft.irfftn(F, s=grid.shape)


# ========== 平方函数与 Calderón 恒等式 ==========

def square_function(f: SampledField3, family: LPFamily) -> SampledField3:
    """(sum over the family of |phi_{j,k} * f|^2)^(1/2), pointwise."""
    check_lp_resolution(f.grid, family)
    F = _spectrum(f)
    total = np.zeros(f.grid.shape)
    for m in _multipliers(family, f.grid).values():
        piece = _inverse(F * m, f.grid)
        total += piece * piece
    return SampledField3(f.grid, np.sqrt(total))


def calderon_reconstruct(f: SampledField3, family: LPFamily) -> Tuple[SampledField3, float]:
    """sum phi_{j,k} * phi_{j,k} * f and its relative L^2 distance to f."""
    check_lp_resolution(f.grid, family)
    F = _spectrum(f)
    symbol = np.zeros(F.shape, dtype=complex)
    for m in _multipliers(family, f.grid).values():
        symbol = symbol + m * m
    recon = SampledField3(f.grid, _inverse(F * symbol, f.grid))
    norm = lp_norm(f, 2.0)
    residual = lp_norm(recon - f, 2.0) / norm if norm > 0 else 0.0
    logger.info("calderon: %d pieces, residual %.3e", len(family.index_set), residual)
    return recon, residual


def square_function_ratios(f: SampledField3, family: LPFamily,
                           ps: Sequence[float] = LP_REPORT_P) -> Dict[float, float]:
    """||g(f)||_p / ||f||_p for each p; reported, only p = 2 has a known value."""
    g = square_function(f, family)
    out: Dict[float, float] = {}
    for p in ps:
        nf = lp_norm(f, p)
        out[float(p)] = lp_norm(g, p) / nf if nf > 0 else 0.0
    logger.info("square function ratios: %s", {p: f"{r:.6g}" for p, r in out.items()})
    return out


# ========== 包络 ==========

def pair_envelope(j: int, k: int, jp: int, kp: int, x1: Any, x2: Any, x3: Any,
                  L: float = PAIR_ENVELOPE_L, M: float = PAIR_ENVELOPE_M) -> np.ndarray:
    """
    Decay envelope of phi_{j,k} * phi_{j',k'} with j* = j when k >= k', else j'.

    2^{-L|j-j'|} 2^{-L|k-k'|} 2^{MJ} / (2^J + |x1|)^{1+M}
      * 2^{MK} / (2^{j*} (2^K + |x2| + 2^{-j*} |x3|)^{2+M}),  J = j v j', K = k v k'.
    """
    J, K = max(j, jp), max(k, kp)
    js = j if k >= kp else jp
    pre = 2.0 ** (-L * (abs(j - jp) + abs(k - kp)))
    first = 2.0 ** (M * J) / (2.0 ** J + np.abs(x1)) ** (1.0 + M)
    second = 2.0 ** (M * K) / (2.0 ** js * (2.0 ** K + np.abs(x2) + 2.0 ** -js * np.abs(x3)) ** (2.0 + M))
    return pre * first * second


def sandwich_envelope(j: int, k: int, jp: int, kp: int, x1: Any, x2: Any, x3: Any,
                      lam: float) -> np.ndarray:
    """2^{-|j-j'|} 2^{-|k-k'|} times a product of (1+lam)-decay profiles at scales J, K, J + K."""
    J, K = max(j, jp), max(k, kp)
    out = 2.0 ** (-abs(j - jp) - abs(k - kp))
    for scale, x in ((J, x1), (K, x2), (J + K, x3)):
        s = 2.0 ** -scale
        out = out * s / (1.0 + s * np.abs(x)) ** (1.0 + lam)
    return out


def _normalized_sup(values: np.ndarray, envelope: np.ndarray) -> Tuple[float, float]:
    """(sup |values|, sup |values| / envelope over the points above the noise floor)."""
    a = np.abs(values)
    raw = float(a.max()) if a.size else 0.0
    if raw == 0.0:
        return 0.0, 0.0
    env = np.broadcast_to(envelope, a.shape)
    if not np.all(env > 0):
        raise InvariantViolation("almost-orthogonality envelope is not strictly positive")
    keep = a > NOISE_FLOOR * raw
    return raw, float(np.max(a[keep] / env[keep]))


def boundary_fraction(data: np.ndarray) -> float:
    """Share of sum |data| carried by the outermost layer of cells."""
    a = np.abs(data)
    total = float(a.sum())
    if total == 0.0:
        return 0.0
    inner = a[1:-1, 1:-1, 1:-1]
    return (total - float(inner.sum())) / total


# ========== 几乎正交矩阵 ==========

def _pairs(family: LPFamily) -> List[Tuple[DyadicIndex, DyadicIndex]]:
    return [(a, b) for a in family.index_set for b in family.index_set]


def _default_box(grid: Grid3) -> TruncationBox:
    return TruncationBox(tuple(2.0 * h for h in grid.spacing), grid.half_extent)


def almost_orthogonality_matrix(family: LPFamily, mode: str = PAIR, grid: Optional[Grid3] = None,
                                kernel: Optional[KernelSpec] = None,
                                box: Optional[TruncationBox] = None,
                                L: float = PAIR_ENVELOPE_L, M: float = PAIR_ENVELOPE_M,
                                workers: Optional[int] = 1) -> OrthogonalityMatrix:
    """
    Sup of phi_{j,k} * phi_{j',k'} (pair) or phi_{j,k} * K * phi_{j',k'}
    (sandwich) over the grid for every ordered pair in the family, raw and
    divided by its decay envelope.

    Pair mode is computed entirely from multiplier products, so pieces whose
    frequency supports are disjoint give an exact zero. Sandwich mode samples
    phi_{j',k'}, convolves it with the truncated kernel (default
    Nagel–Wainger with alpha = beta = 1, box from twice the spacing to the
    grid edge) and applies phi_{j,k} on the Fourier side.
    """
    if grid is None:
        raise PreconditionError("almost_orthogonality_matrix needs a working grid")
    if mode not in (PAIR, SANDWICH):
        raise PreconditionError(f"unknown orthogonality mode {mode!r}")
    check_lp_resolution(grid, family)
    mult = _multipliers(family, grid)
    pairs = _pairs(family)
    tail = 0.0

    if mode == PAIR:
        lag = _lag_axes(grid)
        vol = grid.cell_volume

        def entry(pair):
            (j, k), (jp, kp) = pair
            symbol = mult[(j, k)] * mult[(jp, kp)]
            if not np.any(symbol):
                return 0.0, 0.0
            conv = _inverse(symbol, grid) / vol
            return _normalized_sup(conv, pair_envelope(j, k, jp, kp, *lag, L=L, M=M))

        envelope = {"L": float(L), "M": float(M)}
    else:
        kernel = kernel if kernel is not None else NagelWainger()
        box = box if box is not None else _default_box(grid)
        conv_k = TruncatedConvolver(kernel, box, grid)
        _ = conv_k.spectrum

        def smoothed(index: DyadicIndex) -> np.ndarray:
            phi = sample_field(grid, make_phi_jk(family.bumps, *index))
            return _spectrum(conv_k.apply(phi))

        inner = dict(zip(family.index_set,
                         run_sweep(smoothed, list(family.index_set), workers, label="lp_sandwich")))
        tail = max(boundary_fraction(_inverse(S, grid)) for S in inner.values())
        if tail > TAIL_TOL:
            logger.warning(f"[lp_sandwich] boundary layer carries {tail:.2e} of the mass; "
                           f"enlarge the grid for a tail share below {TAIL_TOL:.0e}")
        centers = grid.mesh()

        def entry(pair):
            (j, k), (jp, kp) = pair
            out = _inverse(mult[(j, k)] * inner[(jp, kp)], grid)
            return _normalized_sup(out, sandwich_envelope(j, k, jp, kp, *centers, lam=family.lam))

        envelope = {"lambda": float(family.lam)}

    results = run_sweep(entry, pairs, workers, label=f"lp_{mode}")
    frame = pd.DataFrame({
        "j": [a[0] for a, _ in pairs],
        "k": [a[1] for a, _ in pairs],
        "j_prime": [b[0] for _, b in pairs],
        "k_prime": [b[1] for _, b in pairs],
        "raw_sup": [r[0] for r in results],
        "normalized_entry": [r[1] for r in results],
    })
    if not np.all(np.isfinite(frame[["raw_sup", "normalized_entry"]].to_numpy())):
        raise InvariantViolation(f"{mode} orthogonality matrix has non-finite entries")
    matrix = OrthogonalityMatrix(mode, frame, envelope, tail)
    logger.info("%s matrix: %d entries, max normalized %.4g", mode, len(frame),
                float(frame["normalized_entry"].max()))
    return matrix


def decay_fit(matrix: Any) -> Tuple[float, float, float]:
    """
    Joint least-squares fit log2(raw_sup) = c + s_j |j-j'| + s_k |k-k'|.

    Accepts an OrthogonalityMatrix or a frame with its columns. Zero entries
    carry no slope information and are left out of the fit; the separation
    count is taken over all entries.

    Returns:
        (slope_j, slope_k, rms residual)
    """
    frame = matrix.entries if isinstance(matrix, OrthogonalityMatrix) else pd.DataFrame(matrix)
    dj = (frame["j"] - frame["j_prime"]).abs().to_numpy(dtype=float)
    dk = (frame["k"] - frame["k_prime"]).abs().to_numpy(dtype=float)
    raw = frame["raw_sup"].to_numpy(dtype=float)
    if not np.any(raw > 0):
        raise PreconditionError("decay fit of an all-zero matrix")
    if len(np.unique(dj)) < 4 or len(np.unique(dk)) < 4:
        raise PreconditionError(
            f"decay fit needs >= 4 distinct separations per axis, got "
            f"{len(np.unique(dj))} in j and {len(np.unique(dk))} in k"
        )
    keep = raw > 0
    A = np.column_stack([np.ones(int(keep.sum())), dj[keep], dk[keep]])
    y = np.log2(raw[keep])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    rms = float(np.sqrt(np.mean(resid ** 2)))
    return float(coef[1]), float(coef[2]), rms


# ========== 核与 bump 卷积的衰减 ==========

def bump_convolution_envelope(kernel: KernelSpec, bumps: BumpPair, grid: Grid3,
                              box: TruncationBox, theta: Sequence[float]) -> BumpEnvelope:
    """Weighted sup of K_box * (phi1 x phi2) and the grid-boundary mass share."""
    lam = 0.5 * min(float(t) for t in theta)
    phi = sample_field(grid, make_phi_jk(bumps, 0, 0))
    conv = TruncatedConvolver(kernel, box, grid).apply(phi).data
    x1, x2, x3 = grid.mesh()
    weight = ((1.0 + np.abs(x1)) * (1.0 + np.abs(x2)) * (1.0 + np.abs(x3))) ** (1.0 + lam)
    weighted = np.abs(conv) * weight
    at = np.unravel_index(int(np.argmax(weighted)), weighted.shape)
    a1, a2, a3 = grid.axes()
    point = (float(a1[at[0]]), float(a2[at[1]]), float(a3[at[2]]))
    tail = boundary_fraction(conv)
    if tail > TAIL_TOL:
        logger.warning(f"[bump_envelope] boundary layer carries {tail:.2e} of the mass")
    return BumpEnvelope(float(weighted[at]), point, tail, lam)


def plane_wave_field(grid: Grid3, frequency: Sequence[float]) -> SampledField3:
    """
    prod_i cos(w_i x_i) with each w_i moved to the nearest multiple of pi / L_i,
    so the field is exactly periodic on the grid and its spectrum is the
    eight points (+-w1, +-w2, +-w3).
    """
    snapped = []
    for w, L in zip(frequency, grid.half_extent):
        step = math.pi / L
        snapped.append(step * max(1, round(abs(float(w)) / step)))
    x1, x2, x3 = grid.mesh()
    data = np.cos(snapped[0] * x1) * np.cos(snapped[1] * x2) * np.cos(snapped[2] * x3)
    return SampledField3(grid, data)
