"""
正则性与消去条件检查测试
"""
import math

import numpy as np
import pytest

from src.kernels.kernels import NagelWainger, ZeroKernel, eval_kernel, zygmund_dilate
from src.research.conditions import (
    ADMISSIBLE_INDICES,
    AnnulusSweep,
    CancellationPlan,
    DiffIndex,
    HolderParams,
    SamplePlan,
    ScaleSweep,
    cancellation_rhs,
    check_R,
    check_c3,
    check_cancellation,
    finite_difference,
    improper_schedule,
    is_stable,
    nested_grid,
)
from src.utils.errors import PreconditionError
from src.utils.math_utils import is_monotone_nondecreasing


@pytest.fixture(scope="module")
def small_plan():
    return SamplePlan(log2_range=(-2.0, 2.0), base_points=3, fd_ratios=(0.25,), refinement=(1, 2))


@pytest.fixture(scope="module")
def small_cancellation():
    return CancellationPlan(fixed_log2_range=(-1.0, 1.0), fixed_points=2, fd_ratios=(0.25,),
                            refinement=(1,))


class TestParameters:

    def test_admissible_excludes_full_triple(self):
        assert len(ADMISSIBLE_INDICES) == 7
        assert (1, 1, 1) not in ADMISSIBLE_INDICES

    def test_diff_index_rejects_full_triple(self):
        with pytest.raises(PreconditionError):
            DiffIndex(1, 1, 1, (0.1, 0.1, 0.1))

    @pytest.mark.parametrize("theta1,theta2", [(0.0, 0.5), (1.5, 0.5), (0.5, 1.0), (0.5, 0.0)])
    def test_holder_params_ranges(self, theta1, theta2):
        with pytest.raises(PreconditionError):
            HolderParams(theta1, theta2)

    def test_nested_grid_levels(self):
        exps, level = nested_grid(0.0, 4.0, 3, (1, 2))
        assert list(exps) == [0.0, 1.0, 2.0, 3.0, 4.0]
        assert list(level) == [0, 1, 0, 1, 0]

    def test_nested_grid_rejects_non_dividing_factors(self):
        with pytest.raises(PreconditionError):
            nested_grid(0.0, 1.0, 3, (1, 2, 3))

    def test_stability_rule(self):
        assert is_stable([1.0])
        assert is_stable([1.0, 1.05])
        assert not is_stable([1.0, 1.5])
        assert not is_stable([1.0, math.inf])


class TestFiniteDifference:

    def test_zero_order_negates(self, nw_kernel):
        p = (1.0, 2.0, 0.5)
        assert finite_difference(nw_kernel, p, DiffIndex()) == -eval_kernel(nw_kernel, p)

    def test_first_order(self, nw_kernel):
        p = (1.0, 2.0, 0.5)
        idx = DiffIndex(1, 0, 0, (0.25, 0.0, 0.0))
        expected = eval_kernel(nw_kernel, (1.25, 2.0, 0.5)) - eval_kernel(nw_kernel, p)
        assert finite_difference(nw_kernel, p, idx) == pytest.approx(expected, rel=1e-14)

    def test_offset_too_large(self, nw_kernel):
        idx = DiffIndex(1, 0, 0, (0.75, 0.0, 0.0))
        with pytest.raises(PreconditionError):
            finite_difference(nw_kernel, (1.0, 1.0, 1.0), idx)


class TestRegularity:

    def test_zero_kernel(self, small_plan):
        report = check_R(ZeroKernel(), sample_plan=small_plan)
        assert report.worst_ratio == 0.0
        assert report.stable

    def test_nagel_wainger_finite_and_monotone(self, nw_kernel, small_plan):
        report = check_R(nw_kernel, sample_plan=small_plan)
        assert 0.0 < report.worst_ratio < math.inf
        assert len(report.refinement_history) == 2
        assert is_monotone_nondecreasing(report.refinement_history)
        assert report.refinement_history[-1] == report.worst_ratio
        assert set(report.worst_sample) >= {"x1", "x2", "x3", "alpha", "beta", "gamma"}

    def test_constant_is_dilation_invariant(self, small_plan):
        kernel = NagelWainger(1.0, 1.0)
        base = check_R(kernel, sample_plan=small_plan)
        dilated = check_R(zygmund_dilate(kernel, 4.0, 0.5), sample_plan=small_plan.dilated(4.0, 0.5))
        assert dilated.worst_ratio == pytest.approx(base.worst_ratio, rel=1e-10)

    def test_report_dict(self, nw_kernel, small_plan):
        d = check_R(nw_kernel, sample_plan=small_plan).to_dict()
        assert d["condition_id"] == "R"
        assert d["history"][-1] == d["C_hat"]


class TestCancellation:

    def test_odd_kernel_integrates_to_zero(self, nw_kernel, small_cancellation):
        sweep = AnnulusSweep.geometric(1.0, 2.0, 2)
        report = check_cancellation(nw_kernel, "C1a", sweep, plan=small_cancellation)
        assert report.worst_ratio == 0.0
        assert report.converged

    def test_c2b_rhs_balance_term(self):
        params = HolderParams(0.5, 0.5)
        annulus = ((0.5, 2.0), (0.5, 2.0), (0.5, 2.0))
        rhs = cancellation_rhs("C2b", annulus, {1: 1.0, 2: 1.0}, {1: 0.0, 2: 0.0}, (0, 0), params)
        # |x2| = |x3| = 1, balance(2)^-1/2 + balance(1/2)^-1/2
        assert rhs == pytest.approx(2.0 * 2.5 ** -0.5)

    def test_c2pb_plus_one_switch(self):
        params = HolderParams(1.0, 0.5)
        annulus = ((1.0, 1.0), (1.0, 1.0), (1.0, 1.0))
        x = {0: 1.0, 2: 2.0}
        h = {0: 0.0, 2: 0.0}
        plain = cancellation_rhs("C2pb", annulus, x, h, (0, 0), params)
        plus = cancellation_rhs("C2pb", annulus, x, h, (0, 0), params, plus_one_c2pb=True)
        assert plus == pytest.approx(plain / 2.0)

    def test_unknown_family(self, nw_kernel):
        with pytest.raises(PreconditionError):
            check_cancellation(nw_kernel, "C9", AnnulusSweep.geometric())

    def test_sweep_validation(self):
        with pytest.raises(PreconditionError):
            AnnulusSweep((((2.0, 1.0), (1.0, 2.0), (1.0, 2.0)),))

    def test_improper_schedule_of_odd_kernel(self, nw_kernel):
        values, settled = improper_schedule(nw_kernel, "C1a", depth=3)
        assert values == [0.0, 0.0, 0.0]
        assert settled

    @pytest.mark.slow
    def test_ricci_stein_c2b(self, rs_kernel, small_cancellation):
        sweep = AnnulusSweep.geometric(1.0, 2.0, 2)
        report = check_cancellation(rs_kernel, "C2b", sweep, plan=small_cancellation)
        assert math.isfinite(report.worst_ratio)
        assert report.samples is not None and len(report.samples) == report.sample_count


class TestBumpTested:

    def test_zero_kernel(self, small_cancellation):
        report = check_c3(ZeroKernel(), "C3b", (0,), ScaleSweep((-1.0, 1.0), 2), plan=small_cancellation)
        assert report.worst_ratio == 0.0

    def test_nagel_wainger_c3b(self, nw_kernel, small_cancellation):
        report = check_c3(nw_kernel, "C3b", (0, 1), ScaleSweep((-1.0, 1.0), 2), plan=small_cancellation)
        assert math.isfinite(report.worst_ratio)
        assert report.options["seeds"] == [0, 1]

    def test_requires_seed(self, nw_kernel):
        with pytest.raises(PreconditionError):
            check_c3(nw_kernel, "C3a", ())

    def test_unknown_family(self, nw_kernel):
        with pytest.raises(PreconditionError):
            check_c3(nw_kernel, "C1a", (0,))


@pytest.mark.slow
class TestNagelWaingerSuite:
    """Default plans at theta = (1, 0.5)."""

    def test_regularity(self, nw_kernel):
        report = check_R(nw_kernel, HolderParams(1.0, 0.5))
        assert math.isfinite(report.worst_ratio)
        assert len(report.refinement_history) == 3
        assert report.stable

    @pytest.mark.parametrize("family_id", ["C1b", "C2b", "C2pa"])
    def test_cancellation(self, nw_kernel, family_id):
        report = check_cancellation(nw_kernel, family_id, AnnulusSweep.geometric(), HolderParams(1.0, 0.5))
        assert math.isfinite(report.worst_ratio)
        assert report.stable

    def test_odd_symmetry_forces_zero(self, nw_kernel):
        report = check_cancellation(nw_kernel, "C1a", AnnulusSweep.geometric(), HolderParams(1.0, 0.5))
        assert report.worst_ratio <= 1e-8
        assert report.stable
