"""Benchmark-relative performance analytics.

Everything operates on paired samples of investor and benchmark wealth:
information ratio, empirical CDFs, outperformance-probability curves,
allocation percentiles, partial stochastic dominance reports, and
historical-window replays of a trained policy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bootstrap, nn_policy
from .errors import UndefinedIRError

__all__ = [
    "OutcomeSample",
    "information_ratio",
    "empirical_cdf",
    "outperformance_curve",
    "DominanceReport",
    "partial_dominance",
    "allocation_percentiles",
    "rollout_sample",
    "historical_replay",
]


@dataclass
class OutcomeSample:
    """Paired terminal wealth per path, with optional per-time traces.

    ``wealth`` and ``benchmark_wealth`` over time have shape
    (n_times, n_paths); ``allocations`` has shape (n_times, n_paths) and
    holds the fund weight (last investor asset).
    """

    terminal_w: np.ndarray
    terminal_w_hat: np.ndarray
    wealth: np.ndarray | None = None
    benchmark_wealth: np.ndarray | None = None
    allocations: np.ndarray | None = None
    times: np.ndarray | None = None

    def __post_init__(self):
        self.terminal_w = np.asarray(self.terminal_w, dtype=float)
        self.terminal_w_hat = np.asarray(self.terminal_w_hat, dtype=float)
        if self.terminal_w.shape != self.terminal_w_hat.shape:
            raise ValueError("investor and benchmark samples must be paired")


def information_ratio(sample: OutcomeSample) -> float:
    """mean(W - W_hat) / stdev(W - W_hat), sample standard deviation."""
    active = sample.terminal_w - sample.terminal_w_hat
    if active.size < 2:
        raise UndefinedIRError("need at least two paths for a sample stdev")
    sd = float(np.std(active, ddof=1))
    if sd == 0.0:
        raise UndefinedIRError("active wealth has zero dispersion")
    return float(np.mean(active)) / sd


def empirical_cdf(values):
    """Right-continuous empirical CDF.

    Returns (sorted unique values x, F(x)); evaluate at arbitrary points with
    ``np.searchsorted(x, pts, side='right')`` over the returned F padded with
    a leading 0.
    """
    v = np.sort(np.asarray(values, dtype=float))
    x, counts = np.unique(v, return_counts=True)
    return x, np.cumsum(counts) / v.size


def cdf_at(x, F, points):
    """Evaluate an empirical_cdf output at arbitrary points."""
    idx = np.searchsorted(x, points, side="right")
    Fpad = np.concatenate(([0.0], F))
    return Fpad[idx]


def outperformance_curve(sample: OutcomeSample):
    """P[W(t) > W_hat(t)] per time point; ties count as non-outperformance."""
    if sample.wealth is None or sample.benchmark_wealth is None:
        raise ValueError("per-time traces required")
    return np.mean(sample.wealth > sample.benchmark_wealth, axis=1)


@dataclass
class DominanceReport:
    """Result of comparing terminal-wealth CDFs F_A vs F_B above a floor."""

    dominant: bool                # F_A <= F_B everywhere above the floor
    crossing_points: np.ndarray   # wealth levels where F_A - F_B changes sign
    dominant_region: tuple        # (floor level, max pooled sample)
    left_tail_violation: bool     # F_A > F_B somewhere below the floor
    floor_level: float


def partial_dominance(sample_a, sample_b, quantile_floor: float = 0.02,
                      tol: float = 0.0) -> DominanceReport:
    """Check whether A's terminal-wealth CDF sits below B's above a pooled
    left-tail quantile floor (higher wealth with higher probability), and
    report all sign changes so the conclusion is floor-robust.
    """
    a = np.sort(np.asarray(sample_a, dtype=float))
    b = np.sort(np.asarray(sample_b, dtype=float))
    pooled = np.concatenate([a, b])
    floor_level = float(np.quantile(pooled, quantile_floor))
    grid = np.unique(pooled)
    Fa = np.searchsorted(a, grid, side="right") / a.size
    Fb = np.searchsorted(b, grid, side="right") / b.size
    diff = Fa - Fb
    # exclude the top point where both CDFs are exactly 1
    sign = np.sign(np.where(np.abs(diff) <= tol, 0.0, diff))
    nz = sign[sign != 0]
    crossings = []
    if nz.size:
        active = sign != 0
        sgrid, svals = grid[active], sign[active]
        flips = np.nonzero(np.diff(svals) != 0)[0]
        crossings = sgrid[flips + 1]
    above = grid >= floor_level
    dominant = bool(np.all(diff[above] <= tol))
    below = grid < floor_level
    left_viol = bool(below.any() and np.any(diff[below] > tol))
    return DominanceReport(dominant, np.asarray(crossings, dtype=float),
                           (floor_level, float(grid[-1])), left_viol,
                           floor_level)


def allocation_percentiles(allocations, levels=(5, 20, 50, 80, 95)):
    """Per-time empirical percentiles (lower order statistic) of the risky
    weight; input shape (n_times, n_paths), output (n_times, len(levels))."""
    a = np.asarray(allocations, dtype=float)
    return np.percentile(a, levels, axis=1, method="lower").T


def rollout_sample(params, panel: bootstrap.ReturnsPanel,
                   scenario: nn_policy.DiscreteScenario) -> OutcomeSample:
    """Roll a policy through a panel and package the full outcome.

    ``params`` may be a PolicyParams bundle or any callable policy.  The
    benchmark trace is recomputed from the panel's benchmark assets so it is
    identical for every policy evaluated on the same panel.
    """
    policy = params.build() if isinstance(params, nn_policy.PolicyParams) \
        else params
    W, W_hat, W_trace, alloc_trace = nn_policy.wealth_rollout(
        policy, panel, scenario, trace=True)
    n_rb = panel.n_rebalances
    bench_gross = sum(w * panel.asset(a)
                      for a, w in scenario.benchmark_weights.items())
    wh = np.empty((n_rb + 1, panel.n_paths))
    wh[0] = scenario.invest.w0
    q = scenario.invest.q * scenario.dt
    for n in range(n_rb):
        wh[n + 1] = (wh[n] + q) * bench_gross[:, n]
    return OutcomeSample(
        terminal_w=W.detach().numpy(),
        terminal_w_hat=W_hat.detach().numpy(),
        wealth=W_trace.numpy(),
        benchmark_wealth=wh,
        allocations=alloc_trace[:, :, -1].numpy(),
        times=np.arange(n_rb + 1) * scenario.dt,
    )


def historical_replay(params: nn_policy.PolicyParams,
                      source: dict[str, bootstrap.ReturnSeries],
                      scenario: nn_policy.DiscreteScenario,
                      windows=None):
    """Run a trained policy through contiguous historical windows.

    Returns {window: OutcomeSample} with full single-path wealth traces
    (n_rb + 1 time points including t=0) for investor and benchmark.
    """
    if windows is None:
        windows = sorted(bootstrap.REPLAY_WINDOWS)
    net = params.build()
    out = {}
    for win in windows:
        panel = bootstrap.replay_slice(
            source, win, months_per_rebalance=int(round(scenario.dt * 12)))
        W, W_hat, W_trace, alloc_trace = nn_policy.wealth_rollout(
            net, panel, scenario, trace=True)
        n_rb = panel.n_rebalances
        times = np.arange(n_rb + 1) * scenario.dt
        w0 = scenario.invest.w0
        bench_gross = sum(w * panel.asset(a)[0]
                          for a, w in scenario.benchmark_weights.items())
        wh_trace = np.empty(n_rb + 1)
        wh_trace[0] = w0
        q = scenario.invest.q * scenario.dt
        for n in range(n_rb):
            wh_trace[n + 1] = (wh_trace[n] + q) * bench_gross[n]
        out[win] = OutcomeSample(
            terminal_w=W.detach().numpy(),
            terminal_w_hat=W_hat.detach().numpy(),
            wealth=W_trace.numpy(),
            benchmark_wealth=wh_trace.reshape(-1, 1),
            allocations=alloc_trace[:, :, -1].numpy(),
            times=times,
        )
    return out
