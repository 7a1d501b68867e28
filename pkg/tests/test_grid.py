"""
网格与采样场测试
"""
import numpy as np
import pytest

from src.grid.field_io import decode_field, encode_field, field_to_frame, read_field, write_field
from src.grid.grid import Grid3, SampledField3, inner_product, lp_norm, sample_field, zero_field
from src.utils.errors import DomainError, PreconditionError


class TestGrid3:

    def test_cell_centers_avoid_coordinate_planes(self):
        grid = Grid3((1.0, 2.0, 3.0), (4, 6, 8))
        for i in range(3):
            axis = grid.axis(i)
            assert not np.any(axis == 0.0)
            assert np.allclose(axis, -axis[::-1])

    def test_spacing_and_volume(self):
        grid = Grid3((1.0, 2.0, 4.0), (4, 4, 8))
        assert grid.spacing == (0.5, 1.0, 1.0)
        assert grid.cell_volume == pytest.approx(0.5)
        assert grid.size == 128

    @pytest.mark.parametrize("points", [(3, 4, 4), (4, 4, 2), (4, 5, 4)])
    def test_rejects_odd_or_small_counts(self, points):
        with pytest.raises(PreconditionError):
            Grid3((1.0, 1.0, 1.0), points)

    def test_rejects_nonpositive_extent(self):
        with pytest.raises(PreconditionError):
            Grid3((1.0, 0.0, 1.0), (4, 4, 4))

    def test_refined_doubles_points(self):
        grid = Grid3((1.0, 1.0, 1.0), (4, 4, 4)).refined(2)
        assert grid.points == (8, 8, 8)

    def test_center_matches_row_major_layout(self):
        grid = Grid3((1.0, 1.0, 1.0), (4, 4, 4))
        # x1 varies slowest
        assert grid.center(1) == (grid.axis(0)[0], grid.axis(1)[0], grid.axis(2)[1])
        assert grid.center(16) == (grid.axis(0)[1], grid.axis(1)[0], grid.axis(2)[0])


class TestSampledField:

    def test_sample_and_norms(self, small_grid):
        f = sample_field(small_grid, lambda x1, x2, x3: np.ones_like(x1 * x2 * x3))
        volume = 8.0 ** 3
        assert lp_norm(f, 1.0) == pytest.approx(volume)
        assert lp_norm(f, 2.0) == pytest.approx(volume ** 0.5)
        assert lp_norm(f, np.inf) == 1.0

    def test_non_finite_sample_raises_domain_error(self):
        grid = Grid3((1.0, 1.0, 1.0), (4, 4, 4))
        with pytest.raises(DomainError) as exc:
            sample_field(grid, lambda x1, x2, x3: np.where(x1 > 0, np.inf, 0.0) + 0 * x2 * x3)
        assert exc.value.point is not None

    def test_scalar_callable_is_vectorized(self):
        grid = Grid3((1.0, 1.0, 1.0), (4, 4, 4))
        f = sample_field(grid, lambda x1, x2, x3: float(x1 > 0))
        assert f.values.sum() == 32

    def test_field_is_read_only(self, small_grid):
        f = zero_field(small_grid)
        with pytest.raises(ValueError):
            f.data[0, 0, 0] = 1.0

    def test_inner_product_and_arithmetic(self, small_grid):
        f = sample_field(small_grid, lambda x1, x2, x3: x1 + 0 * x2 * x3)
        g = f.scaled(2.0)
        assert inner_product(f, g) == pytest.approx(2.0 * lp_norm(f, 2.0) ** 2)
        assert lp_norm(g - f - f, 2.0) == 0.0

    def test_lp_norm_rejects_p_below_one(self, small_grid):
        with pytest.raises(PreconditionError):
            lp_norm(zero_field(small_grid), 0.5)


class TestFieldIO:

    def test_roundtrip_is_bit_exact(self, tmp_path, rng):
        grid = Grid3((1.0, 2.0, 3.0), (4, 6, 8))
        f = SampledField3(grid, rng.standard_normal(grid.shape))
        path = write_field(tmp_path / "f.zfld", f)
        back = read_field(path)
        assert back.grid == grid
        assert np.array_equal(back.data, f.data)

    def test_corrupt_magic_rejected(self, small_grid):
        blob = bytearray(encode_field(zero_field(small_grid)))
        blob[0:5] = b"XXXXX"
        with pytest.raises(PreconditionError):
            decode_field(bytes(blob))

    def test_frame_has_one_row_per_sample(self):
        grid = Grid3((1.0, 1.0, 1.0), (4, 4, 4))
        frame = field_to_frame(zero_field(grid))
        assert len(frame) == grid.size
