import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from letflab import market
from letflab.errors import MomentDivergenceError
from letflab.market import (EtfSpec, KouParams, KOU_CALIBRATED,
                            index_jump_moments, letf_gross_return,
                            letf_jump_moments, letf_jump_multiplier,
                            sample_jump_multipliers, simulate_interval,
                            simulate_intervals, vetf_gross_return,
                            volatility_decay_factor, JumpEvent)
from letflab.rng import substream


def mc_jump_moment_oracle(params, beta, n, seed=0):
    """Monte Carlo estimate of all five jump moments with standard errors."""
    rng = substream(seed, 12345)
    xi_s = sample_jump_multipliers(params, n, rng)
    xi_l = letf_jump_multiplier(xi_s, beta)
    samples = {
        "kappa1_s": xi_s - 1.0,
        "kappa2_s": (xi_s - 1.0) ** 2,
        "kappa1_l": xi_l - 1.0,
        "kappa2_l": (xi_l - 1.0) ** 2,
        "kappa_chi": (xi_l - 1.0) * (xi_s - 1.0),
    }
    return {k: (v.mean(), v.std(ddof=1) / math.sqrt(n))
            for k, v in samples.items()}


class TestParams:
    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(ValueError):
            KouParams(r=0.0, mu=0.05, sigma=0.0)

    def test_rejects_divergent_eta1_when_jumps_active(self):
        with pytest.raises(MomentDivergenceError):
            KouParams(r=0.0, mu=0.05, sigma=0.2, lam=0.3, eta1=1.5)

    def test_gbm_constructor_ignores_jump_params(self):
        p = KouParams.gbm(r=0.0031, mu=0.0819, sigma=0.185)
        assert p.lam == 0.0

    def test_etf_spec_rejects_bearish_multiplier(self):
        with pytest.raises(ValueError):
            EtfSpec(beta=0.5)


class TestJumpMultiplier:
    def test_passthrough_above_floor(self):
        assert letf_jump_multiplier(0.9, 2.0) == 0.9

    def test_floor_on_deep_crash(self):
        # at the floor the fund return 1 + beta*(xi-1) hits exactly zero
        xi = letf_jump_multiplier(0.2, 2.0)
        assert xi == 0.5
        assert 1.0 + 2.0 * (xi - 1.0) == 0.0

    def test_beta_one_never_floors(self):
        xs = np.array([1e-9, 0.3, 1.0, 2.5])
        assert np.array_equal(letf_jump_multiplier(xs, 1.0), xs)

    def test_rejects_nonpositive_multiplier(self):
        with pytest.raises(ValueError):
            letf_jump_multiplier(0.0, 2.0)

    @given(st.floats(0.01, 5.0), st.floats(1.0, 5.0))
    def test_fund_return_never_negative(self, xi_s, beta):
        xi_l = letf_jump_multiplier(xi_s, beta)
        assert 1.0 + beta * (xi_l - 1.0) >= -1e-15


class TestMoments:
    def test_gbm_has_zero_jump_moments(self):
        p = KouParams.gbm(0.0, 0.08, 0.2)
        assert index_jump_moments(p) == (0.0, 0.0)
        m = letf_jump_moments(p, 2.0)
        assert m == market.JumpMoments(0.0, 0.0, 0.0, 0.0, 0.0)

    def test_tiny_jumps_give_tiny_moments(self):
        # nearly-degenerate upward jumps: log-jump ~ Exp(1e6), xi ~ 1
        p = KouParams(r=0.0, mu=0.05, sigma=0.2, lam=0.1, p_up=1.0,
                      eta1=1e6, eta2=5.0)
        k1, k2 = index_jump_moments(p)
        assert abs(k1) < 1e-5 and abs(k2) < 1e-5

    def test_calibrated_table(self):
        # independently derived high-precision values for the calibrated
        # parameters (r=0.0031, mu=0.0873, sigma=0.1477, lam=0.3163,
        # p_up=0.2258, eta1=4.3591, eta2=5.5337), beta=2
        m = letf_jump_moments(KOU_CALIBRATED, 2.0)
        assert m.kappa1_s == pytest.approx(-0.0512729634499906, abs=1e-12)
        assert m.kappa2_s == pytest.approx(0.0884450423181622, abs=1e-12)
        assert m.kappa1_l == pytest.approx(-0.0499940113048246, abs=1e-12)
        assert m.kappa2_l == pytest.approx(0.0869963260272026, abs=1e-12)
        assert m.kappa_chi == pytest.approx(0.0876358020997856, abs=1e-12)

    def test_beta_one_collapses_to_index_moments(self):
        k1, k2 = index_jump_moments(KOU_CALIBRATED)
        m = letf_jump_moments(KOU_CALIBRATED, 1.0)
        assert m.kappa1_l == k1
        assert m.kappa2_l == k2
        assert m.kappa_chi == k2

    @pytest.mark.parametrize("beta", [1.5, 2.0, 3.0])
    def test_closed_forms_match_monte_carlo(self, beta):
        m = letf_jump_moments(KOU_CALIBRATED, beta)
        mc = mc_jump_moment_oracle(KOU_CALIBRATED, beta, 400_000)
        for name in ("kappa1_s", "kappa2_s", "kappa1_l", "kappa2_l",
                     "kappa_chi"):
            est, se = mc[name]
            assert abs(est - getattr(m, name)) < 3.0 * se, name

    @given(st.floats(1.0 + 1e-6, 10.0))
    @settings(max_examples=30)
    def test_floored_moments_dominate_index_moments(self, beta):
        # flooring the downside can only raise the mean
        m = letf_jump_moments(KOU_CALIBRATED, beta)
        assert m.kappa1_l >= m.kappa1_s - 1e-15


class TestSimulation:
    def test_gbm_interval_matches_lognormal_moments(self):
        p = KouParams.gbm(0.0031, 0.0819, 0.185)
        iv = simulate_intervals(p, 0.25, 200_000, substream(3, 0))
        mean = iv.index_gross.mean()
        se = iv.index_gross.std(ddof=1) / math.sqrt(iv.index_gross.size)
        assert abs(mean - math.exp(p.mu * 0.25)) < 3 * se
        assert np.all(iv.ytilde == 1.0)
        assert np.all(iv.sum_jump_s == 0.0)

    def test_jump_interval_mean_matches_model(self):
        iv = simulate_intervals(KOU_CALIBRATED, 0.25, 400_000,
                                substream(4, 0), beta=2.0)
        mean = iv.index_gross.mean()
        se = iv.index_gross.std(ddof=1) / math.sqrt(iv.index_gross.size)
        assert abs(mean - math.exp(KOU_CALIBRATED.mu * 0.25)) < 3.5 * se

    def test_ytilde_is_a_decay(self):
        iv = simulate_intervals(KOU_CALIBRATED, 1.0, 100_000,
                                substream(5, 0), beta=2.0)
        assert np.all(iv.ytilde <= 1.0 + 1e-12)
        assert np.all(iv.ytilde >= 0.0)

    def test_single_path_variant_agrees_in_law(self):
        rng = substream(6, 0)
        vals = np.array([simulate_interval(KOU_CALIBRATED, 0.25, rng)[0]
                         for _ in range(20_000)])
        se = vals.std(ddof=1) / math.sqrt(vals.size)
        assert abs(vals.mean() - math.exp(KOU_CALIBRATED.mu * 0.25)) < 3.5 * se

    def test_jump_events_carry_fund_multiplier(self):
        rng = substream(7, 0)
        p = KouParams(r=0.0, mu=0.05, sigma=0.2, lam=50.0, p_up=0.3,
                      eta1=4.0, eta2=3.0)
        _, jumps = simulate_interval(p, 1.0, rng, beta=2.0)
        assert jumps
        for ev in jumps:
            assert ev.xi_l == letf_jump_multiplier(ev.xi_s, 2.0)
            assert 0.0 <= ev.time <= 1.0


class TestFundReturns:
    def test_vetf_is_index_net_of_expense(self):
        spec = EtfSpec(1.0, 0.0006)
        assert vetf_gross_return(1.1, 0.25, spec) == pytest.approx(
            math.exp(-0.0006 * 0.25) * 1.1)

    def test_decay_factor_quarter(self):
        p = KouParams.gbm(0.0031, 0.0873, 0.1477)
        f = volatility_decay_factor(0.25, EtfSpec(2.0, 0.0), p)
        assert f == pytest.approx(
            math.exp(-(0.0031 + 0.1477 ** 2) * 0.25), rel=1e-12)

    def test_no_jump_letf_return(self):
        p = KouParams.gbm(0.0031, 0.0873, 0.1477)
        spec = EtfSpec(2.0, 0.0)
        out = letf_gross_return(1.0, [], 0.25, spec, p)
        assert out == pytest.approx(volatility_decay_factor(0.25, spec, p))

    def test_wipeout_jump_zeroes_fund(self):
        p = KOU_CALIBRATED
        spec = EtfSpec(2.0, 0.0089)
        ev = JumpEvent(0.1, 0.4, letf_jump_multiplier(0.4, 2.0))
        assert letf_gross_return(0.9, [ev], 0.25, spec, p) == 0.0

    def test_beta_one_fund_equals_vanilla(self):
        p = KOU_CALIBRATED
        spec = EtfSpec(1.0, 0.0006)
        ev = JumpEvent(0.1, 0.8, 0.8)
        lhs = letf_gross_return(1.05, [ev], 0.25, spec, p)
        # beta=1: no decay (f=1), ytilde=1, so it reduces to the vanilla form
        assert lhs == pytest.approx(vetf_gross_return(1.05, 0.25, spec))
