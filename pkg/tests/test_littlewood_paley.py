"""
Littlewood–Paley 分块测试：平方函数、Calderón 重构与几乎正交矩阵
"""
import math

import numpy as np
import pandas as pd
import pytest

from src.grid.grid import Grid3, lp_norm
from src.kernels.kernels import TruncationBox
from src.research.littlewood_paley import (
    PAIR,
    SANDWICH,
    LPFamily,
    almost_orthogonality_matrix,
    bump_convolution_envelope,
    calderon_reconstruct,
    check_lp_resolution,
    decay_fit,
    make_phi_jk,
    pair_envelope,
    plane_wave_field,
    sandwich_envelope,
    square_function,
    square_function_ratios,
)
from src.utils.errors import PreconditionError, ResolutionError


@pytest.fixture(scope="module")
def covering_setup(fourier_bumps):
    # 频率 pi/2 在 j, k in [-2, 0] 内被完全覆盖; 网格刚好满足最细尺度
    grid = Grid3((2.0, 2.0, 2.0), (64, 64, 256))
    family = LPFamily.from_ranges(fourier_bumps, (-2, 0), (-2, 0))
    f = plane_wave_field(grid, (1.5, 1.5, 1.5))
    return grid, family, f


class TestLPFamily:

    def test_from_ranges(self, fourier_bumps):
        family = LPFamily.from_ranges(fourier_bumps, (0, 1), (-1, 0), theta1=0.5, theta2=1.0)
        assert family.index_set == ((0, -1), (0, 0), (1, -1), (1, 0))
        assert family.lam == 0.25
        assert family.finest == (0, -1, -1)

    def test_deduplicates(self, fourier_bumps):
        family = LPFamily(fourier_bumps, ((1, 1), (0, 0), (1, 1)))
        assert family.index_set == ((0, 0), (1, 1))

    def test_empty(self, fourier_bumps):
        with pytest.raises(PreconditionError):
            LPFamily(fourier_bumps, ())

    @pytest.mark.parametrize("lam", [0.0, 0.75])
    def test_lambda_range(self, fourier_bumps, lam):
        with pytest.raises(PreconditionError):
            LPFamily(fourier_bumps, ((0, 0),), lam)

    def test_piece_scaling(self, fourier_bumps):
        phi = make_phi_jk(fourier_bumps, 1, 2)
        base = make_phi_jk(fourier_bumps, 0, 0)
        x = (np.array([0.6]), np.array([1.2]), np.array([2.4]))
        expected = 2.0 ** -6 * base(0.3, 0.3, 0.3)
        assert phi(*x)[0] == pytest.approx(float(expected), rel=1e-12)


class TestResolution:

    def test_rejects_coarse_grid(self, fourier_bumps, small_grid):
        family = LPFamily.from_ranges(fourier_bumps, (-1, 0), (0, 0))
        with pytest.raises(ResolutionError) as exc:
            check_lp_resolution(small_grid, family)
        assert exc.value.required_spacing == (0.125, 0.25, 0.125)

    def test_square_function_checks_resolution(self, fourier_bumps, small_grid):
        family = LPFamily.from_ranges(fourier_bumps, (-2, 0), (0, 0))
        with pytest.raises(ResolutionError):
            square_function(plane_wave_field(small_grid, (1.0, 1.0, 1.0)), family)


class TestPlaneWave:

    def test_frequencies_snap_to_grid(self):
        grid = Grid3((4.0, 4.0, 4.0), (16, 16, 16))
        f = plane_wave_field(grid, (1.0, 0.1, 3.0))
        x1, x2, x3 = grid.mesh()
        step = math.pi / 4.0
        expected = np.cos(step * x1) * np.cos(step * x2) * np.cos(4.0 * step * x3)
        assert np.allclose(f.data, expected, atol=1e-14)


class TestSquareFunction:

    def test_isometry(self, covering_setup):
        _, family, f = covering_setup
        g = square_function(f, family)
        assert lp_norm(g, 2.0) / lp_norm(f, 2.0) == pytest.approx(1.0, abs=1e-10)

    def test_calderon_reconstruction(self, covering_setup):
        _, family, f = covering_setup
        recon, residual = calderon_reconstruct(f, family)
        assert residual < 1e-10
        assert np.allclose(recon.data, f.data, atol=1e-10)

    def test_ratios_keyed_by_p(self, covering_setup):
        _, family, f = covering_setup
        ratios = square_function_ratios(f, family, (2.0, 4.0))
        assert set(ratios) == {2.0, 4.0}
        assert ratios[2.0] == pytest.approx(1.0, abs=1e-10)
        assert ratios[4.0] > 0

    def test_missing_band_loses_mass(self, covering_setup):
        _, family, f = covering_setup
        partial = LPFamily(family.bumps, ((0, 0),))
        g = square_function(f, partial)
        assert lp_norm(g, 2.0) < lp_norm(f, 2.0)


class TestEnvelopes:

    def test_pair_envelope_positive(self):
        x = np.linspace(-50.0, 50.0, 11)
        env = pair_envelope(0, 2, 3, -1, x, x, x)
        assert np.all(env > 0)

    def test_pair_envelope_decays_with_separation(self):
        near = pair_envelope(0, 0, 1, 0, 0.0, 0.0, 0.0)
        far = pair_envelope(0, 0, 4, 0, 0.0, 0.0, 0.0)
        assert far < near

    def test_sandwich_envelope_positive(self):
        x = np.linspace(-50.0, 50.0, 11)
        assert np.all(sandwich_envelope(1, 0, 0, 1, x, x, x, lam=0.5) > 0)


class TestOrthogonality:

    def test_disjoint_supports_give_exact_zeros(self, fourier_bumps):
        # j = 3 的频带在 |xi1| < 2^-1.5 / 4 内, x1 方向需要更长的周期
        grid = Grid3((32.0, 4.0, 4.0), (256, 32, 32))
        family = LPFamily(fourier_bumps, ((0, 0), (3, 0)))
        matrix = almost_orthogonality_matrix(family, PAIR, grid)
        frame = matrix.to_frame()
        off = frame[frame["j"] != frame["j_prime"]]
        assert (off["raw_sup"] == 0.0).all()
        assert (matrix.diagonal()["raw_sup"] > 0).all()
        d = matrix.to_dict()
        assert d["entries"] == 4 and d["zero_entries"] == 2
        assert d["envelope"] == {"L": matrix.envelope["L"], "M": matrix.envelope["M"]}

    def test_needs_grid(self, fourier_bumps):
        with pytest.raises(PreconditionError):
            almost_orthogonality_matrix(LPFamily(fourier_bumps, ((0, 0),)), PAIR)

    def test_unknown_mode(self, fourier_bumps):
        grid = Grid3((4.0, 4.0, 4.0), (32, 32, 32))
        with pytest.raises(PreconditionError):
            almost_orthogonality_matrix(LPFamily(fourier_bumps, ((0, 0),)), "triple", grid)

    @pytest.mark.slow
    def test_sandwich_mode(self, fourier_bumps, nw_kernel):
        grid = Grid3((4.0, 4.0, 4.0), (32, 32, 32))
        family = LPFamily(fourier_bumps, ((0, 0), (1, 0)))
        matrix = almost_orthogonality_matrix(family, SANDWICH, grid, kernel=nw_kernel)
        frame = matrix.to_frame()
        assert len(frame) == 4
        assert np.all(np.isfinite(frame["normalized_entry"]))
        assert matrix.envelope == {"lambda": 0.5}
        assert 0.0 <= matrix.tail_fraction <= 1.0

    @pytest.mark.slow
    def test_sandwich_slopes(self, fourier_bumps, nw_kernel):
        # j, k in [0, 3] 给出每个方向 0..3 的间隔, decay_fit 所需的最少个数
        grid = Grid3((8.0, 8.0, 16.0), (64, 64, 128))
        family = LPFamily.from_ranges(fourier_bumps, (0, 3), (0, 3))
        matrix = almost_orthogonality_matrix(family, SANDWICH, grid, kernel=nw_kernel)
        assert len(matrix.entries) == 16 * 16
        slope_j, slope_k, _ = decay_fit(matrix)
        assert slope_j <= -0.9
        assert slope_k <= -0.9

    @pytest.mark.slow
    def test_bump_convolution_envelope(self, fourier_bumps, nw_kernel):
        grid = Grid3((4.0, 4.0, 4.0), (32, 32, 32))
        box = TruncationBox((0.5, 0.5, 0.5), (4.0, 4.0, 4.0))
        env = bump_convolution_envelope(nw_kernel, fourier_bumps, grid, box, (1.0, 0.5))
        assert env.lam == 0.25
        assert math.isfinite(env.sup) and env.sup > 0


class TestDecayFit:

    @staticmethod
    def _frame(raw_fn):
        rows = []
        for j in range(4):
            for k in range(4):
                for jp in range(4):
                    for kp in range(4):
                        rows.append((j, k, jp, kp, raw_fn(abs(j - jp), abs(k - kp))))
        frame = pd.DataFrame(rows, columns=["j", "k", "j_prime", "k_prime", "raw_sup"])
        frame["normalized_entry"] = frame["raw_sup"]
        return frame

    def test_recovers_slopes(self):
        frame = self._frame(lambda dj, dk: 2.0 ** (1.0 - 2.0 * dj - 3.0 * dk))
        sj, sk, rms = decay_fit(frame)
        assert sj == pytest.approx(-2.0, abs=1e-10)
        assert sk == pytest.approx(-3.0, abs=1e-10)
        assert rms < 1e-10

    def test_zero_entries_are_skipped(self):
        frame = self._frame(lambda dj, dk: 0.0 if dj == 3 else 2.0 ** (-dj - dk))
        sj, sk, _ = decay_fit(frame)
        assert sj == pytest.approx(-1.0, abs=1e-10)
        assert sk == pytest.approx(-1.0, abs=1e-10)

    def test_all_zero(self):
        with pytest.raises(PreconditionError):
            decay_fit(self._frame(lambda dj, dk: 0.0))

    def test_too_few_separations(self):
        frame = self._frame(lambda dj, dk: 1.0)
        frame = frame[(frame["j"] < 2) & (frame["j_prime"] < 2)]
        with pytest.raises(PreconditionError):
            decay_fit(frame)
