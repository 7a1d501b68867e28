"""
Bump 函数测试：单位分解、矩、支撑与 n.b.f. 归一化
"""
import numpy as np
import pytest
from scipy import integrate

from src.kernels.bumps import (
    WINDOW_SUPPORT,
    annulus_window,
    build_bumps,
    compact_moment,
    make_nbf,
    moment,
    partition_defect,
    smooth_step,
)
from src.utils.errors import PreconditionError


class TestAnnulusWindow:

    def test_support(self):
        r = np.array([0.1, WINDOW_SUPPORT[0], 0.5, 1.0, 2.0, WINDOW_SUPPORT[1], 10.0])
        w = annulus_window(r)
        assert w[0] == 0.0 and w[1] == 0.0 and w[-2] == 0.0 and w[-1] == 0.0
        assert np.all(w[2:5] > 0)

    def test_smooth_step_limits(self):
        t = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
        s = smooth_step(t)
        assert s[0] == 0.0 and s[1] == 0.0
        assert s[2] == pytest.approx(0.5)
        assert s[3] == 1.0 and s[4] == 1.0


class TestFourierExactPair:

    def test_partition_of_unity(self, fourier_bumps, rng):
        xi = np.exp2(rng.uniform(-8.0, 8.0, size=200)) * rng.choice([-1.0, 1.0], size=200)
        assert partition_defect(fourier_bumps, xi) < 1e-12

    def test_partition_on_log_spaced_frequencies(self, fourier_bumps):
        xi = np.logspace(-6.0, 6.0, 1000, base=2.0)
        assert partition_defect(fourier_bumps, xi) <= 1e-10
        assert partition_defect(fourier_bumps, -xi) <= 1e-10

    def test_partition_rows(self, fourier_bumps):
        rows = np.array([[0.3, 0.0, 5.0], [7.0, 1.0, 1.0], [1e-3, 2.0, 0.0]])
        assert partition_defect(fourier_bumps, rows) < 1e-12

    def test_partition_rejects_origin(self, fourier_bumps):
        with pytest.raises(PreconditionError):
            partition_defect(fourier_bumps, np.array([[0.0, 1.0, 1.0]]))

    def test_spatial_profiles_are_even(self, fourier_bumps):
        x = np.linspace(0.0, 10.0, 41)
        assert np.allclose(fourier_bumps.phi1.spatial(x), fourier_bumps.phi1.spatial(-x))
        assert np.allclose(fourier_bumps.phi2.spatial(x, 0.3), fourier_bumps.phi2.spatial(-x, -0.3))

    def test_moments_vanish(self, fourier_bumps):
        assert moment(fourier_bumps.phi1, 3) == 0.0
        assert moment(fourier_bumps.phi2, (1, 2)) == 0.0

    def test_envelope_dominates_profile(self, fourier_bumps):
        r = np.linspace(0.0, 20.0, 2001)
        phi1 = fourier_bumps.phi1
        assert np.all(phi1.envelope(r) >= np.abs(phi1.spatial(r)))


class TestSpatialCompactPair:

    def test_exact_support(self, compact_bumps):
        x = np.array([1.0, 1.5, -2.0])
        assert np.all(compact_bumps.phi1.spatial(x) == 0.0)
        assert np.all(compact_bumps.phi2.spatial(x, 0.0) == 0.0)

    @pytest.mark.parametrize("n", range(12))
    def test_low_moments_vanish(self, n):
        assert abs(compact_moment(n)) < 1e-10

    @pytest.mark.parametrize("radius", [1.0, 0.5])
    def test_moments_agree_with_adaptive_quadrature(self, radius):
        # 用 scipy 自适应积分独立复核, 不复用构造 Q 的网格
        phi1 = build_bumps("spatial_compact", support_radius=radius).phi1
        for n in range(11):
            value, err = integrate.quad(lambda x: x ** n * phi1.spatial(np.array([x]))[0], -radius, radius,
                                        epsabs=1e-14, epsrel=0.0, limit=400)
            assert err < 1e-11
            assert abs(value) <= 1e-10

    def test_bump_moments_follow_profile(self, compact_bumps):
        assert abs(moment(compact_bumps.phi1, 4)) < 1e-10
        assert abs(moment(compact_bumps.phi2, (2, 3))) < 1e-10

    def test_support_radius_bounds(self):
        with pytest.raises(PreconditionError):
            build_bumps("spatial_compact", support_radius=1.5)
        with pytest.raises(PreconditionError):
            build_bumps("spatial_compact", support_radius=0.0)

    def test_unknown_kind(self):
        with pytest.raises(PreconditionError):
            build_bumps("gaussian")


class TestNormalizedBump:

    @pytest.mark.parametrize("dimension", [1, 2, 3])
    def test_sup_and_gradient_bounded(self, dimension):
        bump = make_nbf(dimension, seed=3)
        axis = np.linspace(-1.0, 1.0, 33)
        grids = np.meshgrid(*([axis] * dimension), indexing="ij")
        assert np.max(np.abs(bump(*grids))) <= 1.0

    def test_vanishes_outside_unit_ball(self):
        bump = make_nbf(2, seed=0)
        assert bump(np.array([1.0]), np.array([0.5]))[0] == 0.0

    def test_even_axes_symmetry(self):
        bump = make_nbf(2, seed=5, even_axes=(0,))
        y = np.array([0.3])
        assert bump(0.2 + 0 * y, y)[0] == bump(-0.2 + 0 * y, y)[0]

    def test_bad_dimension(self):
        with pytest.raises(PreconditionError):
            make_nbf(4, seed=0)

    def test_seed_is_deterministic(self):
        a = make_nbf(2, seed=9)
        b = make_nbf(2, seed=9)
        pts = (np.array([0.1, -0.4]), np.array([0.2, 0.3]))
        assert np.array_equal(a(*pts), b(*pts))
