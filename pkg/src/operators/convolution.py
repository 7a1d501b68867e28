"""
Truncated convolution K_eps^N * f on a sampled grid.

The truncated kernel is sampled on the lattice of grid offsets
d = m * h, m_i in [-(n_i - 1), n_i - 1]; lattice cells whose center lies in
the box but within one cell of a box face carry the cell average of the
truncated kernel instead of its center value. The lattice is then convolved
with f by zero-padded real FFT (linear, not circular).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy import fft as sfft

from src.config.lab_defaults import CELL_AVERAGE_ORDER, COVERAGE_REL_TOL
from src.grid.grid import Grid3, SampledField3
from src.kernels.kernels import KernelSpec, Truncated, TruncationBox
from src.utils.errors import DomainError, PreconditionError, ResolutionError
from src.utils.math_utils import _leggauss

logger = logging.getLogger(__name__)

# 每批单元平均时的最大节点数
_CELL_BATCH_NODES = 4_000_000


def check_resolution(grid: Grid3, box: TruncationBox) -> None:
    """h_i <= eps_i / 2 on every axis."""
    for i, (h, eps) in enumerate(zip(grid.spacing, box.eps)):
        if h > 0.5 * eps:
            raise ResolutionError(
                f"grid spacing h{i + 1}={h:.6g} does not resolve eps{i + 1}={eps:.6g}",
                required_spacing=tuple(0.5 * e for e in box.eps),
            )


def support_coverage(f: SampledField3, box: TruncationBox,
                     rel_tol: float = COVERAGE_REL_TOL) -> Dict[str, Any]:
    """
    Whether the grid holds supp(f) + N, so that K_eps^N * f loses no mass at the edges.

    supp(f) is taken as the cells with |f| > rel_tol * max|f|.
    """
    grid = f.grid
    a = np.abs(f.data)
    vmax = float(a.max()) if a.size else 0.0
    if vmax == 0.0:
        support = (0.0, 0.0, 0.0)
    else:
        idx = np.nonzero(a > rel_tol * vmax)
        # 取支撑中离原点最远的单元外缘
        support = tuple(
            float(np.max(np.abs(grid.axis(i)[idx[i]])) + 0.5 * grid.spacing[i]) for i in range(3)
        )
    required = tuple(s + n for s, n in zip(support, box.cap))
    covered = all(r <= L for r, L in zip(required, grid.half_extent))
    if not covered:
        logger.warning("grid half extent %s does not cover supp(f) + N = %s",
                       list(grid.half_extent), [round(r, 6) for r in required])
    return {"support": list(support), "required_half_extent": list(required), "covered": covered}


def _lattice_axes(grid: Grid3) -> Tuple[np.ndarray, ...]:
    return tuple(np.arange(-(n - 1), n) * h for n, h in zip(grid.points, grid.spacing))


def _near_face(d: np.ndarray, h: float, eps: float, cap: float) -> np.ndarray:
    a = np.abs(d)
    return ((a - eps) < h) | ((cap - a) < h)


def _cell_averages(kernel: Truncated, centers: np.ndarray, spacing: Tuple[float, float, float],
                   order: int) -> np.ndarray:
    """Mean of the truncated kernel over each cell, by order^3 Gauss-Legendre."""
    y, w = _leggauss(order)
    offsets = [0.5 * h * y for h in spacing]
    o1, o2, o3 = np.meshgrid(*offsets, indexing="ij")
    weights = (w[:, None, None] * w[None, :, None] * w[None, None, :]).ravel() / 8.0
    o1, o2, o3 = o1.ravel(), o2.ravel(), o3.ravel()
    out = np.empty(len(centers))
    batch = max(1, _CELL_BATCH_NODES // o1.size)
    for start in range(0, len(centers), batch):
        c = centers[start:start + batch]
        vals = kernel(c[:, 0:1] + o1, c[:, 1:2] + o2, c[:, 2:3] + o3)
        out[start:start + batch] = vals @ weights
    return out


def kernel_lattice(kernel: KernelSpec, box: TruncationBox, grid: Grid3,
                   cell_order: int = CELL_AVERAGE_ORDER) -> np.ndarray:
    """
    Truncated kernel on the (2n-1)^3 offset lattice, face cells cell-averaged.

    Returns an array of shape (2 n1 - 1, 2 n2 - 1, 2 n3 - 1) centered at index n - 1.
    """
    trunc = Truncated(kernel, box)
    shape = tuple(2 * n - 1 for n in grid.points)
    if kernel.is_zero():
        return np.zeros(shape)
    d1, d2, d3 = _lattice_axes(grid)
    D1, D2, D3 = d1[:, None, None], d2[None, :, None], d3[None, None, :]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        lattice = np.array(trunc(D1, D2, D3), dtype=float)
    inside = box.contains(D1, D2, D3)
    face = inside & (
        _near_face(D1, grid.spacing[0], box.eps[0], box.cap[0])
        | _near_face(D2, grid.spacing[1], box.eps[1], box.cap[1])
        | _near_face(D3, grid.spacing[2], box.eps[2], box.cap[2])
    )
    idx = np.nonzero(face)
    if idx[0].size:
        centers = np.column_stack([d1[idx[0]], d2[idx[1]], d3[idx[2]]])
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            lattice[idx] = _cell_averages(trunc, centers, grid.spacing, cell_order)
        logger.debug("cell-averaged %d of %d lattice cells", idx[0].size, lattice.size)
    finite = np.isfinite(lattice)
    if not np.all(finite):
        bad = np.unravel_index(int(np.flatnonzero(~finite.ravel())[0]), shape)
        raise DomainError("truncated kernel not finite on the lattice",
                          (float(d1[bad[0]]), float(d2[bad[1]]), float(d3[bad[2]])))
    return lattice


@dataclass
class TruncatedConvolver:
    """
    K_eps^N * (.) on one grid; the kernel spectrum is computed once and shared.

    Attributes
    ----------
    padded_shape : tuple of int
        FFT length per axis, at least 3 n_i - 2 (full linear convolution)
    """
    kernel: KernelSpec
    box: TruncationBox
    grid: Grid3
    cell_order: int = CELL_AVERAGE_ORDER
    check: bool = True
    padded_shape: Tuple[int, int, int] = field(init=False, default=(0, 0, 0))
    _spectrum: Optional[np.ndarray] = field(init=False, default=None, repr=False)
    _lattice: Optional[np.ndarray] = field(init=False, default=None, repr=False)

    def __post_init__(self) -> None:
        if self.check:
            check_resolution(self.grid, self.box)
        self._warn_coverage()
        self.padded_shape = tuple(sfft.next_fast_len(3 * n - 2, real=True) for n in self.grid.points)

    def _warn_coverage(self) -> None:
        for i, (L, N) in enumerate(zip(self.grid.half_extent, self.box.cap)):
            if N > 2.0 * L:
                logger.warning("cap N%d=%.4g exceeds the grid diameter %.4g; the outer "
                               "truncation is not visible on this grid", i + 1, N, 2.0 * L)

    @property
    def lattice(self) -> np.ndarray:
        if self._lattice is None:
            self._lattice = kernel_lattice(self.kernel, self.box, self.grid, self.cell_order)
        return self._lattice

    @property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            self._spectrum = sfft.rfftn(self.lattice, s=self.padded_shape)
        return self._spectrum

    def apply(self, f: SampledField3) -> SampledField3:
        if f.grid != self.grid:
            raise PreconditionError("field grid differs from the convolver grid")
        if self.kernel.is_zero():
            return SampledField3(self.grid, np.zeros(self.grid.shape))
        F = sfft.rfftn(f.data, s=self.padded_shape)
        full = sfft.irfftn(F * self.spectrum, s=self.padded_shape)
        n1, n2, n3 = self.grid.points
        out = full[n1 - 1:2 * n1 - 1, n2 - 1:2 * n2 - 1, n3 - 1:2 * n3 - 1]
        return SampledField3(self.grid, out * self.grid.cell_volume)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "box": self.box.to_dict(),
            "grid": self.grid.to_dict(),
            "padded_shape": list(self.padded_shape),
            "cell_order": self.cell_order,
        }


def convolve_truncated(kernel: KernelSpec, box: TruncationBox, f: SampledField3) -> SampledField3:
    return TruncatedConvolver(kernel, box, f.grid).apply(f)


def convolve_direct(kernel: KernelSpec, box: TruncationBox, f: SampledField3) -> SampledField3:
    """Spatial double loop over source cells; reference for small grids."""
    check_resolution(f.grid, box)
    lattice = kernel_lattice(kernel, box, f.grid)
    n1, n2, n3 = f.grid.points
    out = np.zeros(f.grid.shape)
    src = f.data
    for a in range(n1):
        for b in range(n2):
            for c in range(n3):
                v = src[a, b, c]
                if v == 0.0:
                    continue
                # out[m] += K[m - (a,b,c)] f[a,b,c], lattice index m - src + n - 1
                out += v * lattice[n1 - 1 - a:2 * n1 - 1 - a,
                                   n2 - 1 - b:2 * n2 - 1 - b,
                                   n3 - 1 - c:2 * n3 - 1 - c]
    return SampledField3(f.grid, out * f.grid.cell_volume)
