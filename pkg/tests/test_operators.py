"""
截断算子测试：格点卷积、Fourier 扫描与范数探针
"""
import math

import numpy as np
import pytest

from src.grid.grid import Grid3, SampledField3, lp_norm, sample_field
from src.kernels.kernels import TruncationBox, ZeroKernel
from src.operators.convolution import (
    TruncatedConvolver,
    check_resolution,
    convolve_direct,
    convolve_truncated,
    kernel_lattice,
    support_coverage,
)
from src.operators.fourier_scan import FULL, REDUCED, fourier_bound_scan, truncated_transform
from src.operators.probes import (
    ConvergenceResult,
    check_widening,
    gaussian_test_family,
    geometric_boxes,
    operator_norm_probe,
    truncation_convergence_probe,
)
from src.utils.errors import PreconditionError, ResolutionError

BOX = TruncationBox((1.0, 1.0, 1.0), (4.0, 4.0, 4.0))


def _gaussian(x1, x2, x3):
    return np.exp(-(x1 * x1 + x2 * x2 + x3 * x3) / 2.0)


class TestConvolution:

    def test_resolution_check(self):
        grid = Grid3((4.0, 4.0, 4.0), (8, 8, 8))
        with pytest.raises(ResolutionError) as exc:
            check_resolution(grid, BOX)
        assert exc.value.required_spacing == (0.5, 0.5, 0.5)

    def test_lattice_is_zero_inside_eps(self, nw_kernel, small_grid):
        lattice = kernel_lattice(nw_kernel, BOX, small_grid)
        n = small_grid.points[0]
        assert lattice.shape == (2 * n - 1,) * 3
        assert lattice[n - 1, n - 1, n - 1] == 0.0

    def test_fft_matches_direct_sum(self, nw_kernel):
        grid = Grid3((2.0, 2.0, 2.0), (16, 16, 16))
        box = TruncationBox((0.5, 0.5, 0.5), (2.0, 2.0, 2.0))
        f = sample_field(grid, _gaussian)
        fast = convolve_truncated(nw_kernel, box, f)
        slow = convolve_direct(nw_kernel, box, f)
        assert lp_norm(slow, 2.0) > 0
        assert lp_norm(fast - slow, 2.0) <= 1e-10 * lp_norm(slow, 2.0)

    def test_odd_kernel_maps_even_to_odd(self, nw_kernel, small_grid):
        f = sample_field(small_grid, _gaussian)
        out = convolve_truncated(nw_kernel, BOX, f).data
        assert np.allclose(out[::-1, :, :], -out, atol=1e-12)

    def test_zero_kernel(self, small_grid):
        f = sample_field(small_grid, _gaussian)
        out = TruncatedConvolver(ZeroKernel(), BOX, small_grid).apply(f)
        assert not np.any(out.data)

    def test_rejects_other_grid(self, nw_kernel, small_grid):
        conv = TruncatedConvolver(nw_kernel, BOX, small_grid)
        other = Grid3((4.0, 4.0, 4.0), (20, 20, 20))
        with pytest.raises(PreconditionError):
            conv.apply(sample_field(other, _gaussian))


class TestFourierScan:

    def test_nagel_wainger_transform_is_real(self, nw_kernel):
        value, err, converged = truncated_transform(nw_kernel, BOX, (1.0, 1.0, 2.0))
        assert converged
        assert abs(value.imag) <= 1e-12 * max(abs(value), 1.0)

    def test_even_in_xi(self, nw_kernel):
        a, _, _ = truncated_transform(nw_kernel, BOX, (1.0, 1.0, 3.0))
        b, _, _ = truncated_transform(nw_kernel, BOX, (1.0, 1.0, -3.0))
        assert a == pytest.approx(b, rel=1e-12)

    def test_box_dilation_moves_frequency(self, nw_kernel):
        a, _, _ = truncated_transform(nw_kernel, BOX, (2.0, 0.5, 3.0))
        b, _, _ = truncated_transform(nw_kernel, BOX.scaled(2.0, 0.5), (1.0, 1.0, 3.0))
        assert abs(a - b) <= 1e-5 * (1.0 + abs(a))

    def test_reduced_scan(self, nw_kernel):
        scan = fourier_bound_scan(nw_kernel, BOX, [0.25, 1.0, 4.0], REDUCED)
        frame = scan.to_frame()
        assert list(frame["chi"]) == [1.0, 1.0, 1.0]
        assert scan.sup == max(scan.magnitudes)
        assert math.isfinite(scan.sup)
        assert scan.to_dict()["nonconverged"] == 0

    def test_reduced_matches_full_at_unit_chi_eta(self, nw_kernel):
        xs = [0.25, 1.0, 4.0]
        reduced = fourier_bound_scan(nw_kernel, BOX, xs, REDUCED)
        full = fourier_bound_scan(nw_kernel, BOX, [(1.0, 1.0, x) for x in xs], FULL)
        diff = np.abs(np.array(reduced.magnitudes) - np.array(full.magnitudes))
        assert np.max(diff) <= 1e-8 * max(full.sup, 1.0)

    @pytest.mark.slow
    def test_sup_settles_as_box_widens(self, nw_kernel):
        schedule = list(np.exp2(np.arange(-6.0, 7.0)))
        narrow, wide = geometric_boxes(4, 5)
        a = fourier_bound_scan(nw_kernel, narrow, schedule, REDUCED)
        b = fourier_bound_scan(nw_kernel, wide, schedule, REDUCED)
        assert math.isfinite(a.sup) and math.isfinite(b.sup)
        assert abs(b.sup - a.sup) < 0.05 * max(a.sup, b.sup)

    def test_full_scan_needs_triples(self, nw_kernel):
        with pytest.raises(PreconditionError):
            fourier_bound_scan(nw_kernel, BOX, [(1.0, 2.0)], FULL)

    def test_empty_schedule(self, nw_kernel):
        with pytest.raises(PreconditionError):
            fourier_bound_scan(nw_kernel, BOX, [])

    def test_zero_kernel(self):
        scan = fourier_bound_scan(ZeroKernel(), BOX, [(1.0, 1.0, 1.0)], FULL)
        assert scan.sup == 0.0


class TestProbes:

    def test_norm_probe(self, nw_kernel, small_grid):
        family = gaussian_test_family((0.5, 1.0))
        result = operator_norm_probe(nw_kernel, BOX, family, 2.0, small_grid)
        assert len(result.ratios) == len(family) == len(result.labels)
        assert all(r > 0 for r in result.ratios)
        assert result.max_ratio == max(result.ratios)

    def test_norm_probe_rejects_small_p(self, nw_kernel, small_grid):
        with pytest.raises(PreconditionError):
            operator_norm_probe(nw_kernel, BOX, gaussian_test_family(), 0.5, small_grid)

    def test_widening_required(self):
        with pytest.raises(PreconditionError):
            check_widening([TruncationBox((0.5,) * 3, (2.0,) * 3), TruncationBox((0.5,) * 3, (4.0,) * 3)])

    def test_geometric_boxes(self):
        boxes = geometric_boxes(0, 2)
        assert [b.eps[0] for b in boxes] == [1.0, 0.5, 0.25]
        assert [b.cap[0] for b in boxes] == [1.0, 2.0, 4.0]

    def test_convergence_probe(self, nw_kernel):
        grid = Grid3((4.0, 4.0, 4.0), (32, 32, 32))
        f = sample_field(grid, _gaussian)
        result = truncation_convergence_probe(nw_kernel, f, geometric_boxes(0, 1))
        assert len(result.distances) == 1
        assert result.distances[0] > 0
        assert lp_norm(f, 2.0) > 0

    def test_five_box_schedule(self, nw_kernel):
        grid = Grid3((4.0, 4.0, 4.0), (32, 32, 32))
        f = sample_field(grid, lambda x1, x2, x3: np.exp(-(x1 * x1 + x2 * x2 + x3 * x3) / 0.5))
        boxes = [TruncationBox((e,) * 3, (n,) * 3)
                 for e, n in [(2.0, 2.0), (1.5, 3.0), (1.0, 4.0), (0.75, 5.0), (0.5, 6.0)]]
        result = truncation_convergence_probe(nw_kernel, f, boxes)
        assert len(result.distances) == 4
        assert all(math.isfinite(d) and d > 0 for d in result.distances)
        d = result.to_dict()
        assert len(d["boxes"]) == 5
        assert d["decreasing"] == all(b < a for a, b in zip(result.distances, result.distances[1:]))

    def test_decreasing_flag(self):
        boxes = geometric_boxes(0, 4)
        assert ConvergenceResult(boxes, [1.0, 0.5, 0.25, 0.1]).decreasing
        assert not ConvergenceResult(boxes, [0.335, 0.681, 1.020, 1.144]).decreasing
        assert not ConvergenceResult(boxes, [1.0, 1.0, 0.5, 0.1]).decreasing

    def test_norm_probe_records_coverage(self, nw_kernel, small_grid):
        family = gaussian_test_family((0.25, 1.0), modulations=((0.0, 0.0, 0.0),))
        box = TruncationBox((1.0, 1.0, 1.0), (1.5, 1.5, 1.5))
        result = operator_norm_probe(nw_kernel, box, family, 2.0, small_grid)
        assert result.covered == [True, False]
        assert result.to_dict()["covered"] == [True, False]


class TestCoverage:

    def test_narrow_bump_is_covered(self):
        grid = Grid3((4.0, 4.0, 4.0), (32, 32, 32))
        f = sample_field(grid, lambda x1, x2, x3: np.exp(-(x1 * x1 + x2 * x2 + x3 * x3) / 0.125))
        cov = support_coverage(f, TruncationBox((0.5,) * 3, (1.0,) * 3))
        assert cov["covered"]
        assert all(1.0 < s < 2.0 for s in cov["support"])
        assert cov["required_half_extent"] == [s + 1.0 for s in cov["support"]]

    def test_wide_gaussian_reaches_the_edge(self):
        grid = Grid3((4.0, 4.0, 4.0), (32, 32, 32))
        f = sample_field(grid, _gaussian)
        cov = support_coverage(f, TruncationBox((0.5,) * 3, (2.0,) * 3))
        assert cov["support"] == [4.0, 4.0, 4.0]
        assert not cov["covered"]

    def test_zero_field(self):
        grid = Grid3((1.0, 1.0, 1.0), (4, 4, 4))
        cov = support_coverage(SampledField3(grid, np.zeros(grid.shape)), TruncationBox((0.5,) * 3, (1.0,) * 3))
        assert cov["support"] == [0.0, 0.0, 0.0] and cov["covered"]
