import math

import numpy as np
import pytest

from letflab import lump_sum, market
from letflab.errors import ConfigError
from letflab.lump_sum import (LumpSumScenario, benchmark_payoff,
                              grid_search_ir_optimal, letf_investor_payoff,
                              payoff_diagram, vetf_investor_payoff)
from letflab.market import KOU_CALIBRATED, JumpEvent, letf_jump_multiplier
from letflab.rng import substream


SCEN = LumpSumScenario(params=KOU_CALIBRATED)


class TestBenchmarkPayoff:
    def test_all_cash(self):
        assert benchmark_payoff(0.0, 1.1, 0.0031, 0.25) == pytest.approx(
            math.exp(0.0031 * 0.25))

    def test_all_equity(self):
        assert benchmark_payoff(1.0, 1.1, 0.0031, 0.25) == 1.1

    def test_mixed(self):
        assert benchmark_payoff(0.7, 1.0, 0.0031, 0.25) == pytest.approx(
            0.3 * math.exp(0.000775) + 0.7)


class TestInvestorPayoffs:
    def test_vetf_all_cash(self):
        assert vetf_investor_payoff(0.0, 1.2, SCEN) == pytest.approx(
            math.exp(KOU_CALIBRATED.r * 0.25))

    def test_vetf_levered_crash_goes_negative(self):
        out = vetf_investor_payoff(2.0, 0.0, SCEN)
        assert out == pytest.approx(
            -math.exp((KOU_CALIBRATED.r + 0.03) * 0.25))

    def test_vetf_no_premium_at_exactly_one(self):
        full = vetf_investor_payoff(1.0, 1.05, SCEN)
        assert full == pytest.approx(
            market.vetf_gross_return(1.05, 0.25, SCEN.vetf))

    def test_vetf_linear_in_index(self):
        xs = np.linspace(0.2, 1.8, 50)
        ys = vetf_investor_payoff(0.8, xs, SCEN)
        resid = np.polyfit(xs, ys, 1, full=True)[1]
        assert resid[0] < 1e-12

    def test_letf_all_cash(self):
        assert letf_investor_payoff(0.0, 1.2, [], SCEN) == pytest.approx(
            math.exp(KOU_CALIBRATED.r * 0.25))

    def test_letf_full_wipeout_floors_at_zero(self):
        ev = JumpEvent(0.1, 0.3, letf_jump_multiplier(0.3, 2.0))
        out = letf_investor_payoff(1.0, 0.5, [ev], SCEN)
        assert out == 0.0

    def test_letf_unlevered_payoff_nonnegative(self):
        for x in (0.05, 0.2, 1.0):
            assert letf_investor_payoff(0.9, x, [], SCEN) >= 0.0

    def test_letf_jumpless_is_power_payoff(self):
        # without jumps the fund leg is proportional to index_gross^beta
        xs = np.linspace(0.2, 1.8, 50)
        ys = np.array([letf_investor_payoff(0.5, x, [], SCEN) for x in xs])
        coef = np.polyfit(xs, ys, 2, full=True)
        assert coef[1][0] < 1e-12  # exact quadratic for beta=2
        assert coef[0][0] > 0  # convex


class TestGridSearch:
    def test_empty_grid_rejected(self):
        with pytest.raises(ConfigError):
            LumpSumScenario(params=KOU_CALIBRATED, grid=np.array([]))

    def test_published_optima(self):
        expected = {(20.0, "letf"): 0.483, (20.0, "vetf"): 1.00,
                    (50.0, "letf"): 0.701, (50.0, "vetf"): 1.20}
        for (gamma, kind), target in expected.items():
            res = grid_search_ir_optimal(kind, gamma, SCEN, 200_000,
                                         substream(7, 1))
            assert abs(res.p_star - target) < 0.05, (gamma, kind)

    def test_ratio_property(self):
        for gamma in (20.0, 50.0):
            rl = grid_search_ir_optimal("letf", gamma, SCEN, 100_000,
                                        substream(8, 1))
            rv = grid_search_ir_optimal("vetf", gamma, SCEN, 100_000,
                                        substream(8, 1))
            assert 1.5 <= rv.p_star / rl.p_star <= 2.5

    def test_optimum_shrinks_with_target(self):
        stars = []
        for gamma in (0.01, 5.0, 20.0, 50.0):
            res = grid_search_ir_optimal("letf", gamma, SCEN, 50_000,
                                         substream(9, 1))
            stars.append(res.p_star)
        assert stars == sorted(stars)
        # the gamma -> 0 limit tracks the benchmark, not cash: about 0.7/beta
        # of wealth in the doubled-exposure fund minimizes tracking variance
        assert abs(stars[0] - 0.35) < 0.05

    def test_vetf_objective_discretely_convex(self):
        res = grid_search_ir_optimal("vetf", 30.0, SCEN, 50_000,
                                     substream(10, 1))
        second_diff = np.diff(res.objective_curve, 2)
        assert np.all(second_diff > -1e-9)

    def test_deterministic_given_seed(self):
        a = grid_search_ir_optimal("letf", 20.0, SCEN, 50_000, substream(3, 0))
        b = grid_search_ir_optimal("letf", 20.0, SCEN, 50_000, substream(3, 0))
        assert a.p_star == b.p_star
        assert np.array_equal(a.objective_curve, b.objective_curve)


class TestPayoffDiagram:
    def test_deterministic_variant_is_smooth(self):
        lattice, lp, vp, bp = payoff_diagram(SCEN, 0.5, 1.0)
        assert lattice[0] == pytest.approx(0.2)
        assert lattice[-1] == pytest.approx(1.8)
        assert np.all(np.isfinite(lp)) and np.all(np.isfinite(vp))
        # vanilla payoff linear, benchmark linear
        assert np.polyfit(lattice, vp, 1, full=True)[1][0] < 1e-12
        assert np.polyfit(lattice, bp, 1, full=True)[1][0] < 1e-12

    def test_scatter_variant_is_below_or_at_smooth_curve_on_average(self):
        rng = substream(5, 2)
        lattice, lp_scatter, _, _ = payoff_diagram(SCEN, 0.5, 1.0, rng=rng)
        _, lp_smooth, _, _ = payoff_diagram(SCEN, 0.5, 1.0)
        # jump decay only reduces the fund leg
        assert np.mean(lp_scatter <= lp_smooth + 1e-12) > 0.95
