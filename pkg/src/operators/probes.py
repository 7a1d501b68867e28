"""Operator-norm lower bounds and truncation-limit convergence probes."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.grid.grid import Grid3, SampledField3, lp_norm, sample_field
from src.kernels.kernels import KernelSpec, TruncationBox
from src.operators.convolution import TruncatedConvolver, support_coverage
from src.services.sweep_runner import run_sweep
from src.utils.errors import PreconditionError
from src.utils.math_utils import json_float

logger = logging.getLogger(__name__)

TestFunction = Union[SampledField3, Callable[..., Any], Tuple[str, Any]]


@dataclass
class ProbeResult:
    """
    ||K_eps^N * f||_p / ||f||_p for each test function.

    Attributes
    ----------
    p : float
    ratios : list of float
    labels : list of str
        One label per test function, in input order
    covered : list of bool
        Whether the grid holds supp(f) + N for each test function
    """
    p: float
    ratios: List[float]
    labels: List[str]
    box: Optional[TruncationBox] = None
    covered: List[bool] = field(default_factory=list)

    @property
    def max_ratio(self) -> float:
        return max(self.ratios) if self.ratios else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p": self.p,
            "labels": list(self.labels),
            "ratios": [json_float(r) for r in self.ratios],
            "max_ratio": json_float(self.max_ratio),
            "box": self.box.to_dict() if self.box else None,
            "covered": list(self.covered),
        }


@dataclass
class ConvergenceResult:
    """Successive L^2 distances d_m = ||T_{m+1} f - T_m f||_2 along a box schedule."""
    boxes: List[TruncationBox]
    distances: List[float] = field(default_factory=list)

    @property
    def decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.distances[:-1], self.distances[1:]))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "boxes": [b.to_dict() for b in self.boxes],
            "distances": [json_float(d) for d in self.distances],
            "decreasing": self.decreasing,
        }


def gaussian_test_family(widths: Sequence[float] = (0.5, 1.0),
                         modulations: Sequence[Tuple[float, float, float]] = ((0.0, 0.0, 0.0),
                                                                             (1.0, 1.0, 1.0),
                                                                             (2.0, 2.0, 4.0)),
                         ) -> List[Tuple[str, Callable[..., Any]]]:
    """Gaussians exp(-|x|^2 / 2 s^2), optionally modulated by cos(k . x)."""
    family = []
    for s in widths:
        for k in modulations:
            def f(x1, x2, x3, s=s, k=k):
                g = np.exp(-(x1 * x1 + x2 * x2 + x3 * x3) / (2.0 * s * s))
                if any(k):
                    g = g * np.cos(k[0] * x1 + k[1] * x2 + k[2] * x3)
                return g
            family.append((f"gauss(s={s:g},k={tuple(k)})", f))
    return family


def _as_field(item: TestFunction, grid: Grid3, index: int) -> Tuple[str, SampledField3]:
    label = f"f{index}"
    if isinstance(item, tuple) and len(item) == 2 and isinstance(item[0], str):
        label, item = item
    if isinstance(item, SampledField3):
        if item.grid != grid:
            raise PreconditionError(f"test function {label} lives on a different grid")
        return label, item
    if callable(item):
        return label, sample_field(grid, item)
    raise PreconditionError(f"unsupported test function {type(item).__name__}")


def operator_norm_probe(kernel: KernelSpec, box: TruncationBox, test_family: Sequence[TestFunction],
                        p: float, grid: Grid3, workers: Optional[int] = 1,
                        convolver: Optional[TruncatedConvolver] = None) -> ProbeResult:
    """The largest ratio is a lower bound for the norm of the truncated operator on L^p."""
    if not test_family:
        raise PreconditionError("test family is empty")
    if p < 1:
        raise PreconditionError(f"p must be >= 1, got {p}")
    fields = [_as_field(item, grid, i) for i, item in enumerate(test_family)]
    norms = []
    for label, f in fields:
        n = lp_norm(f, p)
        if n == 0.0:
            raise PreconditionError(f"test function {label} has zero L^{p:g} norm")
        norms.append(n)
    conv = convolver or TruncatedConvolver(kernel, box, grid)
    _ = conv.spectrum  # build once before the pool fans out

    def ratio(i: int) -> float:
        return lp_norm(conv.apply(fields[i][1]), p) / norms[i]

    ratios = run_sweep(ratio, list(range(len(fields))), workers, label="norm_probe")
    covered = [support_coverage(f, box)["covered"] for _, f in fields]
    result = ProbeResult(float(p), ratios, [lbl for lbl, _ in fields], box, covered)
    logger.info("norm probe p=%g: max ratio %.6g over %d functions", p, result.max_ratio, len(ratios))
    return result


def check_widening(boxes: Sequence[TruncationBox]) -> None:
    for m, (a, b) in enumerate(zip(boxes[:-1], boxes[1:])):
        eps_ok = all(e1 < e0 for e0, e1 in zip(a.eps, b.eps))
        cap_ok = all(n1 > n0 for n0, n1 in zip(a.cap, b.cap))
        if not (eps_ok and cap_ok):
            raise PreconditionError(
                f"box schedule must widen strictly: box {m + 1} {b.to_dict()} vs box {m} {a.to_dict()}"
            )


def geometric_boxes(m_lo: int, m_hi: int) -> List[TruncationBox]:
    """eps = 2^-m, N = 2^m on every axis for m = m_lo..m_hi."""
    return [TruncationBox((2.0 ** -m,) * 3, (2.0 ** m,) * 3) for m in range(m_lo, m_hi + 1)]


def truncation_convergence_probe(kernel: KernelSpec, f: SampledField3,
                                 boxes: Sequence[TruncationBox],
                                 workers: Optional[int] = 1) -> ConvergenceResult:
    if not boxes:
        raise PreconditionError("box schedule is empty")
    boxes = list(boxes)
    check_widening(boxes)
    if len(boxes) == 1:
        return ConvergenceResult(boxes, [])
    outputs = run_sweep(lambda b: TruncatedConvolver(kernel, b, f.grid).apply(f), boxes, workers,
                        label="truncation_probe")
    distances = [lp_norm(b - a, 2.0) for a, b in zip(outputs[:-1], outputs[1:])]
    result = ConvergenceResult(boxes, distances)
    logger.info("truncation probe: distances %s", [f"{d:.4g}" for d in distances])
    return result
