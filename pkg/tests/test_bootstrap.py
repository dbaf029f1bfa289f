import math

import numpy as np
import pytest

from letflab import bootstrap, market
from letflab.bootstrap import (BootstrapConfig, ReturnSeries, ReturnsPanel,
                               apply_borrowing_premium, build_panel_source,
                               build_proxy_etf, load_series, replay_slice,
                               stationary_block_bootstrap, synthetic_source)
from letflab.errors import ConfigError, DataError
from letflab.market import EtfSpec, KOU_CALIBRATED
from letflab.rng import substream


def months(start_year, n):
    out, y, m = [], start_year, 1
    for _ in range(n):
        out.append(f"{y:04d}-{m:02d}")
        m += 1
        if m == 13:
            y, m = y + 1, 1
    return out


class TestReturnSeries:
    def test_monthly_gap_detected(self):
        with pytest.raises(DataError, match="1990-02"):
            ReturnSeries("monthly", ["1990-01", "1990-03"], [0.01, 0.02])

    def test_unsorted_dates_rejected(self):
        with pytest.raises(DataError):
            ReturnSeries("monthly", ["1990-02", "1990-01"], [0.01, 0.02])

    def test_total_loss_rejected(self):
        with pytest.raises(DataError):
            ReturnSeries("monthly", ["1990-01"], [-1.0])


class TestLoadSeries:
    def test_well_formed(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("date,return\n1990-01,0.01\n1990-02,-0.02\n")
        s = load_series(str(f), "monthly")
        assert len(s) == 2
        assert s.returns[1] == -0.02

    def test_bad_return_names_line(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("date,return\n1990-01,0.01\n1990-02,-1.5\n")
        with pytest.raises(DataError, match=":3"):
            load_series(str(f), "monthly")

    def test_unparseable_return_names_line(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("date,return\n1990-01,abc\n")
        with pytest.raises(DataError, match=":2"):
            load_series(str(f), "monthly")

    def test_missing_month_reported(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("date,return\n1990-01,0.0\n1990-03,0.0\n")
        with pytest.raises(DataError, match="1990-02"):
            load_series(str(f), "monthly")

    def test_bad_header(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("month,ret\n1990-01,0.0\n")
        with pytest.raises(DataError, match="header"):
            load_series(str(f), "monthly")


class TestProxyEtf:
    def _inputs(self, daily_by_month, tbill=0.0, infl=0.0):
        mlist = months(1990, len(daily_by_month))
        dates, rets = [], []
        for mm, dr in zip(mlist, daily_by_month):
            for d, r in enumerate(dr, start=1):
                dates.append(f"{mm}-{d:02d}")
                rets.append(r)
        daily = ReturnSeries("daily", dates, np.array(rets))
        tb = ReturnSeries("monthly", mlist, np.full(len(mlist), tbill))
        inf = ReturnSeries("monthly", mlist, np.full(len(mlist), infl))
        return daily, tb, inf

    def test_identity_proxy(self):
        daily, tb, inf = self._inputs([[0.01, -0.005, 0.002]] * 2)
        out = build_proxy_etf(daily, tb, EtfSpec(1.0, 0.0), inf)
        expected = 1.01 * 0.995 * 1.002 - 1.0
        assert np.allclose(out.returns, expected)

    def test_financing_drag_on_flat_month(self):
        r_month = 0.0031 / 12.0
        daily, tb, inf = self._inputs([[0.0] * 21], tbill=r_month)
        out = build_proxy_etf(daily, tb, EtfSpec(2.0, 0.0089), inf)
        assert out.returns[0] == pytest.approx(-(r_month + 0.0089 / 12.0),
                                               abs=1e-12)

    def test_limited_liability_floor_applied_daily(self):
        daily, tb, inf = self._inputs([[-0.6, 0.5]])
        out = build_proxy_etf(daily, tb, EtfSpec(2.0, 0.0), inf)
        # -60% day doubles to -120%, floored at -100%: month is a total loss
        assert out.returns[0] == pytest.approx(-1.0, abs=1e-9)

    def test_inflation_deflates(self):
        daily, tb, inf = self._inputs([[0.01] * 2], infl=0.005)
        out = build_proxy_etf(daily, tb, EtfSpec(1.0, 0.0), inf)
        nominal = 1.01 ** 2 - 1.0
        assert out.returns[0] == pytest.approx((1 + nominal) / 1.005 - 1)

    def test_misaligned_dates_rejected(self):
        daily, tb, inf = self._inputs([[0.0] * 3] * 2)
        tb_bad = ReturnSeries("monthly", months(1991, 2), tb.returns)
        with pytest.raises(DataError, match="misalignment"):
            build_proxy_etf(daily, tb_bad, EtfSpec(1.0, 0.0), inf)


class TestStationaryBootstrap:
    def _source(self, n=120, seed=0):
        rng = substream(seed, 99)
        mlist = months(1980, n)
        return {
            "A": ReturnSeries("monthly", mlist, rng.normal(0.005, 0.04, n)),
            "B": ReturnSeries("monthly", mlist, rng.normal(0.002, 0.01, n)),
        }

    def test_shape(self):
        src = self._source()
        cfg = BootstrapConfig(expected_block_size=3, n_paths=250, horizon=10.0,
                              rebalance_interval=0.25)
        panel = stationary_block_bootstrap(src, cfg, substream(1, 0))
        assert panel.gross.shape == (2, 250, 40)

    def test_joint_resampling_provenance(self):
        src = self._source()
        cfg = BootstrapConfig(expected_block_size=3, n_paths=50, horizon=1.0,
                              rebalance_interval=1.0 / 12.0)
        panel = stationary_block_bootstrap(src, cfg, substream(2, 0),
                                           keep_indices=True)
        idx = panel.source_indices
        for a, lab in enumerate(("A", "B")):
            resampled = panel.gross[a] - 1.0
            assert np.allclose(resampled, src[lab].returns[idx])

    def test_degenerate_full_length_block_reproduces_source(self):
        src = self._source()
        cfg = BootstrapConfig(expected_block_size=1e9, n_paths=1,
                              horizon=10.0, rebalance_interval=1.0 / 12.0)
        panel = stationary_block_bootstrap(src, cfg, substream(3, 0),
                                           force_start=0)
        assert np.allclose(panel.asset("A")[0] - 1.0, src["A"].returns[:120])

    def test_iid_resampling_preserves_mean_within_3se(self):
        src = self._source(n=240)
        cfg = BootstrapConfig(expected_block_size=1, n_paths=2_000,
                              horizon=10.0, rebalance_interval=1.0 / 12.0)
        panel = stationary_block_bootstrap(src, cfg, substream(4, 0))
        draws = panel.asset("A") - 1.0
        se = src["A"].returns.std(ddof=1) / math.sqrt(draws.size)
        assert abs(draws.mean() - src["A"].returns.mean()) < 3 * se

    def test_block_means_and_variances_match_source(self):
        src = self._source(n=240)
        cfg = BootstrapConfig(expected_block_size=3, n_paths=10_000,
                              horizon=10.0, rebalance_interval=1.0 / 12.0)
        panel = stationary_block_bootstrap(src, cfg, substream(5, 0))
        for lab in ("A", "B"):
            draws = panel.asset(lab) - 1.0
            mu, var = src[lab].returns.mean(), src[lab].returns.var(ddof=1)
            n_eff = draws.shape[0]  # paths are independent; months within are not
            se_mu = draws.mean(axis=1).std(ddof=1) / math.sqrt(n_eff)
            assert abs(draws.mean() - mu) < 3 * se_mu
            path_vars = draws.var(axis=1, ddof=1)
            se_var = path_vars.std(ddof=1) / math.sqrt(n_eff)
            assert abs(path_vars.mean() - var) < 4 * se_var

    def test_no_resampled_path_replays_history(self):
        src = self._source(n=240)
        cfg = BootstrapConfig(expected_block_size=3, n_paths=10_000,
                              horizon=10.0, rebalance_interval=1.0 / 12.0)
        panel = stationary_block_bootstrap(src, cfg, substream(6, 0),
                                           keep_indices=True)
        contiguous = (np.diff(panel.source_indices, axis=1) % 240 == 1)
        assert not bool(contiguous.all(axis=1).any())

    def test_determinism(self):
        src = self._source()
        cfg = BootstrapConfig(expected_block_size=3, n_paths=100, horizon=2.0)
        a = stationary_block_bootstrap(src, cfg, substream(7, 0))
        b = stationary_block_bootstrap(src, cfg, substream(7, 0))
        assert a.gross.tobytes() == b.gross.tobytes()


class TestBorrowingPremium:
    def test_applied_when_shorted(self):
        assert apply_borrowing_premium(0.01, 0.03, True) == pytest.approx(0.04)

    def test_not_applied_when_long(self):
        assert apply_borrowing_premium(0.01, 0.03, False) == 0.01

    def test_zero_premium_is_identity(self):
        assert apply_borrowing_premium(0.017, 0.0, True) == pytest.approx(0.017)


class TestSyntheticSource:
    def test_count(self):
        src = synthetic_source(KOU_CALIBRATED, 98, substream(8, 0))
        assert len(src["T30"]) == 1176
        assert len(src["Market"]) == 1176

    def test_zero_noise_tbill_exact(self):
        src = synthetic_source(KOU_CALIBRATED, 5, substream(9, 0),
                               bond_noise=0.0)
        assert np.allclose(src["T30"].returns,
                           math.exp(KOU_CALIBRATED.r / 12.0) - 1.0)

    def test_index_moments_within_3se(self):
        src = synthetic_source(KOU_CALIBRATED, 98, substream(10, 0))
        r = src["Market"].returns
        # model-implied monthly log-return mean and variance
        p = KOU_CALIBRATED
        k1, _ = market.index_jump_moments(p)
        log_r = np.log(1.0 + r)
        mean_th = (p.mu - p.lam * k1 - p.sigma ** 2 / 2) / 12.0 + (
            p.lam / 12.0) * (p.p_up / p.eta1 - (1 - p.p_up) / p.eta2)
        se = log_r.std(ddof=1) / math.sqrt(len(log_r))
        assert abs(log_r.mean() - mean_th) < 3 * se

    def test_replay_windows_covered(self):
        src = synthetic_source(KOU_CALIBRATED, 98, substream(11, 0))
        panel_src = build_panel_source(src)
        sl = replay_slice(panel_src, "2014-2023")
        assert sl.gross.shape == (5, 1, 40)

    def test_unknown_window_rejected(self):
        src = synthetic_source(KOU_CALIBRATED, 98, substream(12, 0))
        panel_src = build_panel_source(src)
        with pytest.raises(ConfigError):
            replay_slice(panel_src, "1999-2008")
