"""
Centered 3D sampling grids and sampled fields.

Samples sit at cell centers x = (m + 1/2) h - L, m = 0..n-1, with n even, so
no sample ever lands on a coordinate plane. Every kernel evaluation in the
lab goes through these grids, which is what lets kernel code skip all
singular-set special cases.

Layout is row-major with x1 slowest; values are stored as an (n1, n2, n3)
float64 array and exposed flat in that order.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Sequence, Tuple

import numpy as np

from src.utils.errors import DomainError, PreconditionError
from src.utils.math_utils import ordered_sum

logger = logging.getLogger(__name__)

Vec3 = Tuple[float, float, float]
PointFn = Callable[[np.ndarray, np.ndarray, np.ndarray], Any]


@dataclass(frozen=True)
class Grid3:
    """
    Cell-centered grid on the box prod_i [-L_i, L_i].

    Attributes
    ----------
    half_extent : tuple of float
        L_i > 0 per axis
    points : tuple of int
        n_i per axis, even and >= 4
    """
    half_extent: Vec3
    points: Tuple[int, int, int]

    def __post_init__(self) -> None:
        if len(self.half_extent) != 3 or len(self.points) != 3:
            raise PreconditionError("Grid3 needs three extents and three point counts")
        for i, (L, n) in enumerate(zip(self.half_extent, self.points)):
            if not np.isfinite(L) or L <= 0:
                raise PreconditionError(f"half_extent[{i}] must be positive, got {L}")
            if int(n) != n or n < 4 or n % 2 != 0:
                raise PreconditionError(f"points[{i}] must be an even integer >= 4, got {n}")
        object.__setattr__(self, "half_extent", tuple(float(L) for L in self.half_extent))
        object.__setattr__(self, "points", tuple(int(n) for n in self.points))

    @property
    def spacing(self) -> Vec3:
        return tuple(2.0 * L / n for L, n in zip(self.half_extent, self.points))

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.points

    @property
    def size(self) -> int:
        n1, n2, n3 = self.points
        return n1 * n2 * n3

    @property
    def cell_volume(self) -> float:
        h1, h2, h3 = self.spacing
        return h1 * h2 * h3

    def axis(self, i: int) -> np.ndarray:
        """Cell-center coordinates along axis i."""
        L, n, h = self.half_extent[i], self.points[i], self.spacing[i]
        return (np.arange(n) + 0.5) * h - L

    def axes(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.axis(0), self.axis(1), self.axis(2)

    def mesh(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable (n1,1,1), (1,n2,1), (1,1,n3) coordinate arrays."""
        x1, x2, x3 = self.axes()
        return x1[:, None, None], x2[None, :, None], x3[None, None, :]

    def center(self, flat_index: int) -> Vec3:
        idx = np.unravel_index(int(flat_index), self.shape)
        return tuple(float(self.axis(i)[idx[i]]) for i in range(3))

    def refined(self, factor: int = 2) -> "Grid3":
        return Grid3(self.half_extent, tuple(n * factor for n in self.points))

    def to_dict(self) -> Dict[str, Any]:
        return {"half_extent": list(self.half_extent), "points": list(self.points)}


@dataclass(frozen=True)
class SampledField3:
    """Real field on a Grid3; values are read-only once constructed."""
    grid: Grid3
    data: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.array(self.data, dtype=np.float64, copy=True)
        if arr.size != self.grid.size:
            raise PreconditionError(
                f"field has {arr.size} values, grid needs {self.grid.size}"
            )
        arr = arr.reshape(self.grid.shape)
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr.ravel()))[0])
            raise DomainError("non-finite field value", self.grid.center(bad))
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def values(self) -> np.ndarray:
        """Flat row-major view (x1 slowest)."""
        return self.data.ravel()

    def scaled(self, c: float) -> "SampledField3":
        return SampledField3(self.grid, c * self.data)

    def __add__(self, other: "SampledField3") -> "SampledField3":
        if other.grid != self.grid:
            raise PreconditionError("cannot add fields on different grids")
        return SampledField3(self.grid, self.data + other.data)

    def __sub__(self, other: "SampledField3") -> "SampledField3":
        return self + other.scaled(-1.0)


def make_grid(half_extent: Sequence[float], points: Sequence[int]) -> Grid3:
    return Grid3(tuple(half_extent), tuple(points))


def zero_field(grid: Grid3) -> SampledField3:
    return SampledField3(grid, np.zeros(grid.shape))


def sample_field(grid: Grid3, f: PointFn) -> SampledField3:
    """
    Sample f at every cell center.

    f is called once with broadcastable coordinate arrays (see Grid3.mesh);
    scalar-only callables are retried through np.vectorize.
    """
    x1, x2, x3 = grid.mesh()
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        try:
            vals = np.asarray(f(x1, x2, x3), dtype=np.float64)
        except (TypeError, ValueError):
            vals = np.asarray(np.vectorize(f, otypes=[float])(x1, x2, x3))
    vals = np.broadcast_to(vals, grid.shape)
    finite = np.isfinite(vals)
    if not np.all(finite):
        bad = int(np.flatnonzero(~finite.ravel())[0])
        point = grid.center(bad)
        logger.debug("sample_field hit non-finite value at %s", point)
        raise DomainError("non-finite sample", point)
    return SampledField3(grid, vals)


def lp_norm(field: SampledField3, p: float) -> float:
    """Riemann-sum L^p norm; p = inf gives the sup norm."""
    if p < 1:
        raise PreconditionError(f"p must be >= 1, got {p}")
    a = np.abs(field.values)
    if np.isinf(p):
        return float(a.max()) if a.size else 0.0
    vmax = float(a.max()) if a.size else 0.0
    if vmax == 0.0:
        return 0.0
    # scale by the max to keep |v|^p in range for large p
    total = ordered_sum((a / vmax) ** p) * field.grid.cell_volume
    return vmax * total ** (1.0 / p)


def inner_product(f: SampledField3, g: SampledField3) -> float:
    if f.grid != g.grid:
        raise PreconditionError("inner product needs fields on the same grid")
    return ordered_sum(f.values * g.values) * f.grid.cell_volume
