"""
不等式验证器测试：振荡积分、二进求和、衰减积分与 Ricci–Stein 估计
"""
import math

import numpy as np
import pytest

from src.kernels.kernels import ZeroKernel
from src.research.conditions import AnnulusSweep, CancellationPlan, SamplePlan
from src.research.lemmas import (
    INNER,
    OUTER,
    RS_ESTIMATES,
    InequalitySweep,
    PiecewiseFunction,
    RSEstimatePlan,
    SlackReport,
    central_derivative,
    central_stencil,
    decay_integral_closed_form,
    decay_integral_quadrature,
    decay_integral_sweep,
    dyadic_sum_sweep,
    oscillation_sweep,
    random_piecewise,
    verify_decay_integral_bound,
    verify_dyadic_sum_bound,
    verify_oscillation_bound,
    verify_rs_estimates,
)
from src.utils.errors import InvariantViolation, NonConvergenceError, PreconditionError


@pytest.fixture(scope="module")
def tiny_rs_plan():
    return RSEstimatePlan(
        sample_plan=SamplePlan(log2_range=(-1.0, 1.0), base_points=2, refinement=(1,)),
        derivative_orders=((0, 0, 0), (1, 0, 0)),
        annulus=AnnulusSweep.geometric(1.0, 2.0, 2),
        fixed=CancellationPlan(fixed_log2_range=(-1.0, 1.0), fixed_points=2, refinement=(1,)),
        integral_orders=(0,),
    )


class TestSlackReport:

    def test_ratio(self):
        assert SlackReport("x", 1.0, 4.0, {}).ratio == 0.25

    def test_both_sides_zero(self):
        assert SlackReport("x", 0.0, 0.0, {}).ratio == 0.0

    def test_zero_rhs(self):
        assert SlackReport("x", 1.0, 0.0, {}).ratio == math.inf

    def test_negative_side(self):
        with pytest.raises(InvariantViolation):
            SlackReport("x", -1.0, 1.0, {})

    def test_to_dict_is_json_safe(self):
        d = SlackReport("x", 1.0, 0.0, {"N": math.inf}).to_dict()
        assert d["ratio"] == "inf"
        assert d["parameters"]["N"] == "inf"


class TestInequalitySweep:

    def test_history_is_running_sup(self):
        reports = [SlackReport("x", r, 1.0, {}) for r in (0.5, 0.4, 0.6)]
        sweep = InequalitySweep("x", reports, [0, 1, 1])
        assert sweep.history == [0.5, 0.6]
        assert sweep.sup_ratio == 0.6
        assert len(sweep.to_frame()) == 3

    def test_levels_must_match(self):
        with pytest.raises(PreconditionError):
            InequalitySweep("x", [SlackReport("x", 1.0, 1.0, {})], [])


class TestOscillation:

    def test_requires_n_above_eight(self):
        with pytest.raises(PreconditionError):
            verify_oscillation_bound(lambda x: 1.0, 8.0)

    def test_constant_function(self):
        rep = verify_oscillation_bound(lambda x: 1.0, 20.0)
        assert rep.lhs == pytest.approx(2.0 * abs(math.sin(20.0) - math.sin(8.0)), rel=1e-8)
        assert rep.extras["shift_term"] == pytest.approx(0.0, abs=1e-12)
        assert rep.ratio <= 1.0

    def test_piecewise_function(self):
        f = PiecewiseFunction((-2.0, 0.0, 2.0), ((1.0,), (0.0, 1.0)))
        assert f(-1.0) == 1.0
        assert f(1.0) == pytest.approx(1.0)
        assert f(3.0) == 0.0

    def test_random_draw_within_bound(self):
        rng = np.random.default_rng(7)
        f = random_piecewise(rng, 30.0)
        assert verify_oscillation_bound(f, 25.0).ratio <= 1.0 + 1e-9

    def test_sweep(self):
        sweep = oscillation_sweep(count=2, Ns=(10.0,), seed=1, refinement=(1, 2))
        assert len(sweep.reports) == 4
        assert sweep.levels == [0, 0, 1, 1]
        assert sweep.sup_ratio <= 1.0 + 1e-9


class TestDyadicSum:

    def test_matches_direct_sum(self):
        rep = verify_dyadic_sum_bound(1.0, 2.0, 1.5, 0.5, 2.0, 3.0, 0.25)
        js = np.arange(rep.extras["j_lo"], rep.extras["j_hi"] + 1, dtype=float)
        direct = math.fsum(2.0 ** (js * 1.0) * (1.0 + 2.0 ** js * 0.5) ** -2.0
                           * (2.0 + 2.0 ** js * 3.0) ** -1.5)
        assert rep.lhs == pytest.approx(direct, rel=1e-12)

    def test_branches_add_up(self):
        rep = verify_dyadic_sum_bound(0.7, 1.7, 2.0, 4.0, 0.25, 1.0, 0.5)
        parts = [v for k, v in rep.extras.items() if k.startswith("branch_")]
        assert math.fsum(parts) == pytest.approx(rep.lhs, rel=1e-12)

    def test_window_widens(self):
        rep = verify_dyadic_sum_bound(0.1, 0.2, 0.1, 1.0, 1.0, 1.0, 0.25)
        assert rep.extras["j_lo"] < -60

    def test_slow_decay_does_not_converge(self):
        with pytest.raises(NonConvergenceError):
            verify_dyadic_sum_bound(0.001, 0.002, 0.001, 1.0, 1.0, 1.0, 0.25)

    @pytest.mark.parametrize("args", [
        (1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.25),
        (1.0, 2.0, 1.0, 0.0, 1.0, 1.0, 0.25),
        (1.0, 2.0, 1.0, 1.0, 1.0, 1.0, 1.0),
    ])
    def test_preconditions(self, args):
        with pytest.raises(PreconditionError):
            verify_dyadic_sum_bound(*args)

    def test_window_must_contain_default(self):
        with pytest.raises(PreconditionError):
            verify_dyadic_sum_bound(1.0, 2.0, 1.0, 1.0, 1.0, 1.0, 0.25, j_window=(-10, 10))

    def test_sweep(self):
        sweep = dyadic_sum_sweep(count=3, seed=2, refinement=(1, 2))
        assert len(sweep.reports) == 6
        assert all(math.isfinite(r.ratio) for r in sweep.reports)

    @pytest.mark.slow
    def test_sup_stable_when_draws_double(self):
        # 上确界在 a -> 1/2, r3 / (r1 r2) -> 0 处取到, 抽样足够多时翻倍变化很小
        sweep = dyadic_sum_sweep(count=3000, seed=0, refinement=(1, 2))
        assert len(sweep.history) == 2
        assert sweep.stable


class TestDecayIntegral:

    @pytest.mark.parametrize("N", [1.0, 2.0, 3.5])
    def test_closed_form_matches_quadrature(self, N):
        for k in (-3, 0, 4):
            a = decay_integral_closed_form(N, 0.7, k, INNER)
            b = decay_integral_quadrature(N, 0.7, k, INNER)
            assert a == pytest.approx(b, rel=1e-10)

    def test_known_value(self):
        rep = verify_decay_integral_bound(2.0, 1.0, 0, INNER)
        assert rep.lhs == pytest.approx(1.0)
        assert rep.ratio == pytest.approx(2.0)

    def test_outer_needs_n_above_one(self):
        with pytest.raises(PreconditionError):
            verify_decay_integral_bound(1.0, 1.0, 0, OUTER)

    @pytest.mark.parametrize("kwargs", [
        {"N": 2.0, "r": 0.0, "k": 0},
        {"N": 2.0, "r": 1.0, "k": 0.5},
        {"N": 0.0, "r": 1.0, "k": 0},
        {"N": 2.0, "r": 1.0, "k": 0, "branch": "middle"},
    ])
    def test_preconditions(self, kwargs):
        with pytest.raises(PreconditionError):
            verify_decay_integral_bound(**kwargs)

    def test_sweep_constant_is_two_for_n_two(self):
        # N = 2 时两侧比值恒为 2
        sweep = decay_integral_sweep((2.0,), r_points=3, k_range=(-1, 1), refinement=(1, 2))
        assert len(sweep.reports) == 5 * 3 * 2
        assert sweep.sup_ratio == pytest.approx(2.0, rel=1e-12)
        assert sweep.stable

    def test_default_sweep_stable_when_doubled(self):
        sweep = decay_integral_sweep(refinement=(1, 2))
        assert len(sweep.history) == 2
        assert sweep.stable


class TestCentralDifferences:

    def test_first_order_stencil(self):
        st = central_stencil((0.1, 0.2, 0.3), (1, 0, 0))
        assert [c for c, _ in st] == [pytest.approx(5.0), pytest.approx(-5.0)]
        assert [off for _, off in st] == [(0.1, 0.0, 0.0), (-0.1, 0.0, 0.0)]

    def test_rejects_third_order(self):
        with pytest.raises(PreconditionError):
            central_stencil((0.1, 0.1, 0.1), (3, 0, 0))

    def test_derivative_of_nagel_wainger(self, nw_kernel):
        points = np.array([[1.0, 1.0, 1.0], [2.0, 0.5, -1.0]])
        d = central_derivative(nw_kernel, points, (0, 0, 1), step=1e-4)
        # d/dx3 of 1 / ((x1 x2)^2 + x3^2) = -2 x3 / (...)^2
        assert d[0] == pytest.approx(-0.5, rel=1e-6)
        assert d[1] == pytest.approx(0.5, rel=1e-6)


class TestRicciSteinEstimates:

    def test_plan_validation(self):
        with pytest.raises(PreconditionError):
            RSEstimatePlan(derivative_orders=((3, 0, 0),))
        with pytest.raises(PreconditionError):
            RSEstimatePlan(theta2=1.0)
        with pytest.raises(PreconditionError):
            RSEstimatePlan(step=0.5)

    def test_rejects_other_kernels(self, nw_kernel, tiny_rs_plan):
        with pytest.raises(PreconditionError):
            verify_rs_estimates(nw_kernel, tiny_rs_plan)

    def test_zero_kernel(self, tiny_rs_plan):
        sweeps = verify_rs_estimates(ZeroKernel(), tiny_rs_plan)
        assert [s.estimate for s in sweeps] == list(RS_ESTIMATES)
        assert all(s.sup_ratio == 0.0 for s in sweeps)

    @pytest.mark.slow
    def test_small_synthesis(self, rs_kernel, tiny_rs_plan):
        sweeps = verify_rs_estimates(rs_kernel, tiny_rs_plan)
        assert len(sweeps) == len(RS_ESTIMATES)
        for sweep in sweeps:
            assert sweep.reports
            assert math.isfinite(sweep.sup_ratio)
