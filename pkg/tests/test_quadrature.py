"""
环形域求积测试
"""
import math

import numpy as np
import pytest

from src.research.quadrature import (
    QuadratureSettings,
    SeparableIntegrator,
    box_ranges,
    difference_stencil,
    half_mesh,
    integrate,
    integrate_kernel,
)
from src.utils.errors import PreconditionError


class TestHalfMesh:

    def test_weights_sum_to_length(self):
        x, w = half_mesh(0.01, 3.0)
        assert math.fsum(w) == pytest.approx(2.99, rel=1e-13)
        assert x.min() > 0.01 and x.max() < 3.0

    def test_box_ranges(self):
        assert box_ranges((1.0, 2.0), 3) == [(0.125, 1.0), (0.25, 2.0)]


class TestIntegrate:

    def test_polynomial_exact(self):
        res = integrate(lambda x1, x2, x3: x1 * x1 + 0 * x2, [(0.5, 2.0), None, None], (0.0, 1.0, 1.0))
        assert res.converged
        assert res.value == pytest.approx(2.0 * (8.0 - 0.125) / 3.0, rel=1e-13)

    def test_odd_integrand_is_exact_zero(self):
        res = integrate(lambda x1, x2, x3: x1 ** 3 * np.cos(x2) + 0 * x3, [(0.1, 1.0), (0.1, 1.0), None])
        assert res.value == 0.0

    def test_nagel_wainger_odd_in_x1(self, nw_kernel):
        res = integrate_kernel(nw_kernel, [(0.25, 4.0), None, None], (0.0, 0.7, 0.3))
        assert res.value == 0.0
        assert res.mass > 0

    def test_product_region(self):
        res = integrate(lambda x1, x2, x3: np.exp(-(x1 * x1 + x2 * x2 + x3 * x3)),
                        [(0.5, 1.0), (0.5, 1.0), (0.5, 1.0)])
        one_d = math.sqrt(math.pi) * (math.erf(1.0) - math.erf(0.5))
        assert res.value == pytest.approx(one_d ** 3, rel=1e-10)

    def test_rejects_bad_annulus(self):
        with pytest.raises(PreconditionError):
            integrate(lambda *x: 1.0, [(1.0, 0.5), None, None])
        with pytest.raises(PreconditionError):
            integrate(lambda *x: 1.0, [(0.0, 0.5), None, None])

    def test_settings_validation(self):
        with pytest.raises(PreconditionError):
            QuadratureSettings(order=0)


class TestDifferenceStencil:

    def test_zero_order_is_negation(self):
        assert difference_stencil((0.1, 0.2, 0.3), (0, 0, 0)) == [(-1.0, (0.0, 0.0, 0.0))]

    def test_first_order_is_forward_difference(self):
        st = dict((off, c) for c, off in difference_stencil((0.1, 0.2, 0.3), (1, 0, 0)))
        assert st == {(0.0, 0.0, 0.0): -1.0, (0.1, 0.0, 0.0): 1.0}

    def test_mixed_order_has_four_points(self):
        st = difference_stencil((0.1, 0.2, 0.3), (1, 1, 0))
        assert len(st) == 4
        assert math.fsum(c for c, _ in st) == 0.0

    def test_shift_of_integrated_axis_rejected(self, nw_kernel):
        st = difference_stencil((0.1, 0.2, 0.3), (1, 0, 0))
        with pytest.raises(PreconditionError):
            integrate_kernel(nw_kernel, [(0.5, 1.0), None, None], (0.0, 1.0, 1.0), stencil=st)


class TestSeparablePath:

    @pytest.mark.parametrize("ranges,fixed", [
        ([(0.25, 2.0), None, None], (0.0, 0.3, 0.1)),
        ([None, (0.25, 2.0), (0.125, 1.0)], (0.2, 0.0, 0.0)),
    ])
    def test_matches_tensor_quadrature(self, rs_kernel, ranges, fixed):
        fast = integrate_kernel(rs_kernel, ranges, fixed, separable=SeparableIntegrator(rs_kernel))
        slow = integrate(rs_kernel, ranges, fixed)
        assert fast.converged
        assert abs(fast.value - slow.value) <= 1e-6 * max(fast.mass, 1e-300)
