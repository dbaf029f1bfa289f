"""Evaluate a trained policy: information ratio, terminal-wealth CDFs,
partial stochastic dominance, and single-path historical-window replay.

Trains a quick leveraged-fund policy and a vanilla-fund policy on the same
bootstrapped panel, then compares their out-of-sample terminal wealth
distributions and replays the leveraged policy through four fixed historical
windows of the source data.
"""
import numpy as np

from letflab import bootstrap, evaluation, market, nn_policy
from letflab.closed_form import InvestmentParams
from letflab.rng import substream

src = bootstrap.synthetic_source(market.KOU_CALIBRATED, 98, substream(0, 51))
panel_src = bootstrap.build_panel_source(src)
cfg = bootstrap.BootstrapConfig(expected_block_size=3, n_paths=5_000,
                                horizon=10.0, seed=0)
panel = bootstrap.stationary_block_bootstrap(panel_src, cfg, substream(0, 52))
train_panel, test_panel = panel.split(0.8)

samples = {}
for fund, p_max, premium in (("LETF", 1.0, 0.0), ("VETF", 1.5, 0.03)):
    invest = InvestmentParams(T=10.0, w0=100.0, q=5.0, gamma=125.0,
                              borrowing_premium=premium, p_max=p_max)
    scenario = nn_policy.DiscreteScenario(invest=invest,
                                          investor_assets=("T30", "B10",
                                                           fund))
    wscale = nn_policy.wealth_scale_for(
        invest, float(train_panel.asset("T30").mean()) - 1.0, scenario.dt)
    net_cfg = nn_policy.NetworkConfig(n_assets=3, p_max=p_max,
                                      horizon=invest.T, wealth_scale=wscale)
    params, _ = nn_policy.train(train_panel, scenario, net_cfg,
                                nn_policy.TrainConfig(steps=1_500, lr=0.02,
                                                      seed=1))
    sample = evaluation.rollout_sample(params, test_panel, scenario)
    samples[fund] = (sample, params, scenario)
    curve = evaluation.outperformance_curve(sample)
    print(f"{fund}: IR {evaluation.information_ratio(sample):.3f}   "
          f"P(beat benchmark at T) {curve[-1]:.3f}")

letf_sample = samples["LETF"][0]
vetf_sample = samples["VETF"][0]
report = evaluation.partial_dominance(letf_sample.terminal_w,
                                      vetf_sample.terminal_w,
                                      quantile_floor=0.02)
print(f"\nleveraged vs vanilla terminal wealth: dominant above 2% floor = "
      f"{report.dominant}, left-tail violation = {report.left_tail_violation}")
if report.crossing_points.size:
    print(f"CDF crossings at wealth {np.round(report.crossing_points, 1)}")

# Median allocation path of the leveraged policy (fraction in the fund).
pct = evaluation.allocation_percentiles(letf_sample.allocations,
                                        levels=(5, 50, 95))
print("\nfund weight over time (5/50/95 percentiles):")
for i in (0, len(pct) // 2, len(pct) - 1):
    t = letf_sample.times[i]
    print(f"  t={t:5.2f}   {pct[i, 0]:.2f} / {pct[i, 1]:.2f} / {pct[i, 2]:.2f}")

# Historical replay through the four fixed decade windows.
params_l, scenario_l = samples["LETF"][1], samples["LETF"][2]
traces = evaluation.historical_replay(params_l, panel_src, scenario_l)
print("\nhistorical windows (terminal investor vs benchmark wealth):")
for window, s in traces.items():
    print(f"  {window}: W(T) = {s.terminal_w[0]:7.1f}   "
          f"benchmark = {s.terminal_w_hat[0]:7.1f}")
