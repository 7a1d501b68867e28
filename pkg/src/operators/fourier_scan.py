"""
Fourier-transform bounds of truncated kernels by oscillatory quadrature.

K_hat(chi, eta, xi) = int_box K(x) exp(-i (chi x1 + eta x2 + xi x3)) dx, with no
2 pi factor. Each axis range [eps_i, N_i] is split at the powers of two and
every panel is cut further until it is at most a quarter wavelength wide.
Kernels that declare their parity are integrated over the positive octant
with cos / sin factors; others sum all eight octants.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.config.lab_defaults import FOURIER_SCAN_ORDER, QUAD_REL_TOL
from src.kernels.kernels import KernelSpec, NagelWainger, TruncationBox
from src.services.sweep_runner import run_sweep
from src.utils.errors import PreconditionError
from src.utils.math_utils import _leggauss, dyadic_breaks, json_float

logger = logging.getLogger(__name__)

Freq = Tuple[float, float, float]

REDUCED = "reduced"
FULL = "full"

# 每块 kernel 取值的最大节点数
_CHUNK_NODES = 2_000_000


@dataclass
class FrequencyScan:
    """
    |K_hat| over a frequency schedule.

    Attributes
    ----------
    mode : str
        "reduced" scans (1, 1, xi); "full" scans arbitrary (chi, eta, xi)
    frequencies : list of (chi, eta, xi)
    magnitudes : list of float
    converged : list of bool
        Per-frequency quadrature flag
    """
    mode: str
    box: TruncationBox
    frequencies: List[Freq]
    values: List[complex]
    errors: List[float]
    converged: List[bool]
    magnitudes: List[float] = field(init=False)

    def __post_init__(self) -> None:
        self.magnitudes = [abs(v) for v in self.values]

    @property
    def xi_samples(self) -> List[float]:
        return [f[2] for f in self.frequencies]

    @property
    def sup(self) -> float:
        return max(self.magnitudes) if self.magnitudes else 0.0

    @property
    def all_converged(self) -> bool:
        return all(self.converged)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "chi": [f[0] for f in self.frequencies],
            "eta": [f[1] for f in self.frequencies],
            "xi": [f[2] for f in self.frequencies],
            "re": [v.real for v in self.values],
            "im": [v.imag for v in self.values],
            "magnitude": self.magnitudes,
            "quad_error": self.errors,
            "converged": self.converged,
        })

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode,
            "box": self.box.to_dict(),
            "frequencies": [list(f) for f in self.frequencies],
            "magnitudes": [json_float(m) for m in self.magnitudes],
            "sup": json_float(self.sup),
            "converged": self.all_converged,
            "nonconverged": sum(1 for c in self.converged if not c),
        }


def oscillatory_mesh(lo: float, hi: float, omega: float,
                     order: int = FOURIER_SCAN_ORDER) -> Tuple[np.ndarray, np.ndarray]:
    """Positive-side nodes on [lo, hi]: dyadic panels cut to width <= pi / (4 |omega|)."""
    y, w = _leggauss(order)
    limit = math.pi / (4.0 * abs(omega)) if omega != 0 else math.inf
    xs: List[np.ndarray] = []
    ws: List[np.ndarray] = []
    if hi <= lo:
        return np.empty(0), np.empty(0)
    breaks = dyadic_breaks(lo, hi)
    for a, b in zip(breaks[:-1], breaks[1:]):
        pieces = max(1, int(math.ceil((b - a) / limit))) if math.isfinite(limit) else 1
        edges = np.linspace(a, b, pieces + 1)
        half = 0.5 * np.diff(edges)
        xs.append((edges[:-1, None] + half[:, None] * (y[None, :] + 1.0)).ravel())
        ws.append((half[:, None] * w[None, :]).ravel())
    return np.concatenate(xs), np.concatenate(ws)


def _contract(kernel: KernelSpec, meshes, factors) -> Tuple[complex, float]:
    """sum K(x) f1(x1) f2(x2) f3(x3) over the tensor mesh, and sum |K| w1 w2 w3."""
    (x1, w1), (x2, w2), (x3, w3) = meshes
    f1, f2, f3 = factors
    if x1.size == 0 or x2.size == 0 or x3.size == 0:
        return 0.0 + 0.0j, 0.0
    W23 = np.multiply.outer(w2, w3)
    step = max(1, _CHUNK_NODES // (x2.size * x3.size))
    total = 0.0 + 0.0j
    mass = 0.0
    for start in range(0, x1.size, step):
        sl = slice(start, start + step)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            vals = np.asarray(kernel(x1[sl, None, None], x2[None, :, None], x3[None, None, :]), dtype=float)
        inner = vals @ f3            # (c, n2)
        total += complex(f1[sl] @ (inner @ f2))
        mass += float(w1[sl] @ np.tensordot(np.abs(vals), W23, axes=([1, 2], [0, 1])))
    return total, mass


def _transform_at(kernel: KernelSpec, box: TruncationBox, freq: Freq, order: int) -> Tuple[complex, float]:
    meshes = [oscillatory_mesh(box.eps[i], box.cap[i], freq[i], order) for i in range(3)]
    parity = kernel.parity
    if parity is not None:
        factors = []
        for (x, w), omega, par in zip(meshes, freq, parity):
            if par > 0:
                factors.append(2.0 * np.cos(omega * x) * w + 0j)
            else:
                factors.append(-2.0j * np.sin(omega * x) * w)
        value, mass = _contract(kernel, meshes, factors)
        return value, 8.0 * mass
    value = 0.0 + 0.0j
    mass = 0.0
    for signs in itertools.product((1.0, -1.0), repeat=3):
        signed = [(s * x, w) for s, (x, w) in zip(signs, meshes)]
        factors = [w * np.exp(-1j * omega * x) for (x, w), omega in zip(signed, freq)]
        v, m = _contract(kernel, signed, factors)
        value += v
        mass += m
    return value, mass


def truncated_transform(kernel: KernelSpec, box: TruncationBox, freq: Sequence[float],
                        order: int = FOURIER_SCAN_ORDER,
                        tol: float = QUAD_REL_TOL) -> Tuple[complex, float, bool]:
    """(K_hat at freq, estimated relative error, converged)."""
    freq = tuple(float(v) for v in freq)
    if len(freq) != 3 or not all(math.isfinite(v) for v in freq):
        raise PreconditionError(f"frequency must be three finite numbers, got {freq}")
    if kernel.is_zero():
        return 0.0 + 0.0j, 0.0, True
    value, mass = _transform_at(kernel, box, freq, order)
    coarse, _ = _transform_at(kernel, box, freq, max(2, order // 2))
    err = abs(value - coarse) / mass if mass > 0 else 0.0
    return value, err, err <= tol


def fourier_bound_scan(kernel: KernelSpec, box: TruncationBox, xi_schedule: Sequence[Any],
                       mode: str = REDUCED, order: int = FOURIER_SCAN_ORDER,
                       workers: Optional[int] = 1) -> FrequencyScan:
    """
    Scan |K_hat_eps^N| over ``xi_schedule``.

    Reduced mode reads the schedule as xi values at chi = eta = 1, which
    covers all frequencies only for Zygmund-invariant kernels; full mode
    reads (chi, eta, xi) triples.
    """
    schedule = list(xi_schedule)
    if not schedule:
        raise PreconditionError("frequency schedule is empty")
    if mode == REDUCED:
        freqs = [(1.0, 1.0, float(xi)) for xi in schedule]
        invariant = isinstance(kernel, NagelWainger) and kernel.alpha == 1.0 and kernel.beta == 1.0
        if not invariant and not kernel.is_zero():
            logger.warning("reduced scan of a kernel that is not Zygmund-invariant covers chi = eta = 1 only")
    elif mode == FULL:
        freqs = []
        for f in schedule:
            if len(f) != 3:
                raise PreconditionError(f"full-mode frequencies are (chi, eta, xi) triples, got {f}")
            freqs.append(tuple(float(v) for v in f))
    else:
        raise PreconditionError(f"unknown scan mode {mode!r}")

    results = run_sweep(lambda f: truncated_transform(kernel, box, f, order), freqs, workers,
                        label="fourier_scan")
    scan = FrequencyScan(
        mode=mode,
        box=box,
        frequencies=freqs,
        values=[r[0] for r in results],
        errors=[r[1] for r in results],
        converged=[r[2] for r in results],
    )
    if not scan.all_converged:
        logger.warning("fourier scan: %d frequencies did not converge",
                       sum(1 for c in scan.converged if not c))
    logger.info("fourier scan (%s, %d frequencies): sup=%.6g", mode, len(freqs), scan.sup)
    return scan
