"""Command-line orchestration: experiment subcommands with deterministic
artifact emission.

Every run writes CSVs with fixed float formatting plus a ``run.json``
sidecar (command, config hash, seed, package version), so identical
config+seed re-runs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, bootstrap, closed_form, evaluation, lump_sum, market, nn_policy
from .closed_form import (BenchmarkPolicy, ClosedFormStrategy,
                          simulate_controlled_paths)
from .config import (ScenarioConfig, config_digest, discrete_scenario,
                     load_config, network_config, train_config)
from .errors import (ConfigError, DataError, DegenerateModelError,
                     MomentDivergenceError, TrainingDivergedError,
                     UndefinedIRError)
from .rng import substream

__all__ = ["main"]

_FMT = "%.12g"


def _write_csv(path: Path, header: str, rows):
    with open(path, "w", newline="") as f:
        f.write(header + "\n")
        for row in rows:
            f.write(",".join(
                x if isinstance(x, str) else _FMT % x for x in row) + "\n")


def _sidecar(out: Path, command: str, cfg: ScenarioConfig):
    payload = {
        "command": command,
        "config_sha256": config_digest(cfg),
        "seed": cfg.run["seed"],
        "version": __version__,
    }
    with open(out / "run.json", "w") as f:
        json.dump(payload, f, indent=1, sort_keys=True)
        f.write("\n")


def _build_source(cfg: ScenarioConfig):
    if cfg.data["source"] == "synthetic":
        rng = substream(cfg.run["seed"], stream=1_000_003)
        raw = bootstrap.synthetic_source(
            cfg.params, cfg.data["years"], rng,
            bond_noise=cfg.data["bond_noise"])
    else:
        files = cfg.data["files"]
        raw = {
            "T30": bootstrap.load_series(files["t30"], "monthly"),
            "B10": bootstrap.load_series(files["b10"], "monthly"),
            "MarketDaily": bootstrap.load_series(files["market_daily"], "daily"),
            "Inflation": bootstrap.load_series(files["inflation"], "monthly"),
        }
        daily = raw["MarketDaily"]
        months = sorted({d[:7] for d in daily.dates})
        keys = np.array([d[:7] for d in daily.dates])
        monthly = np.array([
            np.prod(1.0 + daily.returns[keys == m]) - 1.0 for m in months])
        raw["Market"] = bootstrap.ReturnSeries("monthly", months, monthly)
    return bootstrap.build_panel_source(raw, cfg.vetf, cfg.letf)


def _build_panel(cfg: ScenarioConfig, keep_indices: bool = False):
    source = _build_source(cfg)
    bs = bootstrap.BootstrapConfig(
        expected_block_size=cfg.data["expected_block_size"],
        n_paths=cfg.data["n_paths"],
        horizon=cfg.invest.T,
        rebalance_interval=cfg.data["rebalance_interval"],
        seed=cfg.run["seed"])
    rng = substream(cfg.run["seed"], stream=2_000_003)
    panel = bootstrap.stationary_block_bootstrap(source, bs, rng,
                                                 keep_indices=keep_indices)
    return source, panel


def cmd_moments(cfg: ScenarioConfig, out: Path) -> int:
    """Jump-moment table with a Monte Carlo cross-check."""
    beta = cfg.letf.beta
    mom = market.letf_jump_moments(cfg.params, beta)
    rows = [("kappa1_s", mom.kappa1_s), ("kappa2_s", mom.kappa2_s),
            ("kappa1_l", mom.kappa1_l), ("kappa2_l", mom.kappa2_l),
            ("kappa_chi", mom.kappa_chi)]
    for name, val in rows:
        print(f"{name:10s} {val: .6f}")
    _write_csv(out / "moments.csv", "name,value", rows)
    _sidecar(out, "moments", cfg)
    if cfg.params.lam == 0:
        return 0
    n = 1_000_000
    rng = substream(cfg.run["seed"], stream=7)
    xi_s = market.sample_jump_multipliers(cfg.params, n, rng)
    xi_l = market.letf_jump_multiplier(xi_s, beta)
    checks = {
        "kappa1_s": xi_s - 1.0, "kappa2_s": (xi_s - 1.0) ** 2,
        "kappa1_l": xi_l - 1.0, "kappa2_l": (xi_l - 1.0) ** 2,
        "kappa_chi": (xi_l - 1.0) * (xi_s - 1.0),
    }
    ok = True
    for name, sample in checks.items():
        target = dict(rows)[name]
        se = sample.std(ddof=1) / np.sqrt(n)
        if abs(sample.mean() - target) > 3.0 * se:
            print(f"monte carlo mismatch for {name}: "
                  f"{sample.mean():.6f} vs {target:.6f} (se {se:.2g})",
                  file=sys.stderr)
            ok = False
    return 0 if ok else 2


def cmd_lumpsum(cfg: ScenarioConfig, out: Path) -> int:
    """Single-period payoff diagrams and grid-search optima per target."""
    if not cfg.run["gammas"]:
        raise ConfigError("no gamma values configured ([run] gammas)")
    scen = lump_sum.LumpSumScenario(
        params=cfg.params, vetf=cfg.vetf, letf=cfg.letf,
        dt=cfg.data["rebalance_interval"],
        borrowing_premium=cfg.invest.borrowing_premium)
    opt_rows = []
    for gamma in cfg.run["gammas"]:
        for kind in ("letf", "vetf"):
            rng = substream(cfg.run["seed"], stream=11)
            res = lump_sum.grid_search_ir_optimal(
                kind, gamma, scen, cfg.run["paths"], rng)
            opt_rows.append((_FMT % gamma, kind, res.p_star, res.objective))
            print(f"gamma={gamma:g} {kind}: p*={res.p_star:.3f} "
                  f"objective={res.objective:.4f}")
    _write_csv(out / "lumpsum_optima.csv",
               "gamma,kind,p_star,objective_value", opt_rows)
    p_l = next(float(r[2]) for r in opt_rows if r[1] == "letf")
    p_v = next(float(r[2]) for r in opt_rows if r[1] == "vetf")
    lattice, lp, vp, bp = lump_sum.payoff_diagram(scen, p_l, p_v)
    _write_csv(out / "lumpsum_payoffs.csv",
               "index_gross,payoff_letf,payoff_vetf,payoff_benchmark",
               zip(lattice, lp, vp, bp))
    _sidecar(out, "lumpsum", cfg)
    return 0


def cmd_closedform(cfg: ScenarioConfig, out: Path) -> int:
    """Control heatmaps, fraction-ratio grid, ensemble percentiles, CDFs."""
    inv, pol = cfg.invest, cfg.policy
    letf = ClosedFormStrategy("letf", cfg.params, cfg.letf, pol, inv)
    vetf = ClosedFormStrategy("vetf", cfg.params, cfg.vetf, pol, inv)

    w_hat = inv.w0
    gaps = np.linspace(-100.0, 100.0, 41)
    ts = np.linspace(0.0, inv.T, 21)
    heat, ratio = [], []
    for t in ts:
        for gap in gaps:
            W = w_hat + gap
            a_l = float(letf.amount(float(t), W, w_hat))
            a_v = float(vetf.amount(float(t), W, w_hat))
            if W == 0:  # fraction undefined at zero wealth; amounts are fine
                heat.append((t, gap, np.nan, np.nan))
            else:
                heat.append((t, gap, a_l / W, a_v / W))
            ratio.append((t, gap, a_v / a_l if a_l != 0 else np.nan))
    _write_csv(out / "closedform_heatmap.csv",
               "t,wealth_gap,fraction_letf,fraction_vetf", heat)
    _write_csv(out / "closedform_ratio.csv", "t,wealth_gap,ratio", ratio)

    ens = simulate_controlled_paths(
        {"letf": letf, "vetf": vetf}, cfg.params, pol, inv,
        n_paths=cfg.run["paths"], steps_per_year=cfg.run["steps_per_year"],
        seed=cfg.run["seed"])
    for name, e in ens.items():
        _write_csv(out / f"closedform_percentiles_{name}.csv",
                   "t,p05,p50,p95",
                   ((t, *pw) for t, pw in zip(e.times, e.pct_w)))
        x, F = evaluation.empirical_cdf(e.terminal_w)
        _write_csv(out / f"closedform_cdf_{name}.csv", "x,F", zip(x, F))
        sample = evaluation.OutcomeSample(e.terminal_w, e.terminal_w_hat)
        print(f"{name}: IR = {evaluation.information_ratio(sample):.4f}")
    _write_csv(out / "closedform_terminals.csv",
               "path_id,W_T_letf,W_T_vetf,W_hat_T",
               ((i, wl, wv, wh) for i, (wl, wv, wh) in enumerate(
                   zip(ens["letf"].terminal_w, ens["vetf"].terminal_w,
                       ens["letf"].terminal_w_hat))))
    _sidecar(out, "closedform", cfg)
    return 0


def cmd_bootstrap(cfg: ScenarioConfig, out: Path) -> int:
    """Emit a bootstrapped joint return panel plus metadata."""
    source, panel = _build_panel(cfg)
    np.save(out / "panel.npy", panel.gross)
    meta = {
        "assets": list(panel.assets),
        "n_paths": panel.n_paths,
        "n_rebalances": panel.n_rebalances,
        "panel_sha256": nn_policy.panel_hash(panel),
        "source_months": len(next(iter(source.values()))),
    }
    with open(out / "panel_meta.json", "w") as f:
        json.dump(meta, f, indent=1, sort_keys=True)
        f.write("\n")
    print(f"panel {panel.n_paths} x {panel.n_rebalances} "
          f"({', '.join(panel.assets)})")
    _sidecar(out, "bootstrap", cfg)
    return 0


def cmd_train(cfg: ScenarioConfig, out: Path) -> int:
    """Train the policy network on the 80% split and checkpoint it."""
    _, panel = _build_panel(cfg)
    train_panel, _ = panel.split()
    scen = discrete_scenario(cfg)
    mean_cash = float(np.mean(train_panel.asset("T30")) - 1.0)
    wscale = nn_policy.wealth_scale_for(scen.invest, mean_cash, scen.dt)
    net_cfg = network_config(cfg, scen, wscale)
    params, history = nn_policy.train(train_panel, scen, net_cfg,
                                      train_config(cfg))
    digest = nn_policy.panel_hash(panel)
    nn_policy.save_checkpoint(str(out / "policy.json"), params,
                              cfg.run["seed"], digest)
    _write_csv(out / "loss_history.csv", "step,loss", history)
    floor = nn_policy.constant_mix_floor(train_panel, scen,
                                         scen.invest.p_max, n_grid=11)
    final = float(history[-1, 1])
    print(f"final batch loss {final:.2f}; constant-mix floor {floor:.2f}")
    _sidecar(out, "train", cfg)
    return 0


def _evaluate_checkpoint(cfg: ScenarioConfig, checkpoint: str, fund: str):
    params, _, digest = nn_policy.load_checkpoint(checkpoint)
    _, panel = _build_panel(cfg)
    if nn_policy.panel_hash(panel) != digest:
        raise DataError("checkpoint was trained on a different panel "
                        "(config/seed mismatch)")
    _, eval_panel = panel.split()
    scen = discrete_scenario(cfg, fund=fund, p_max=params.config.p_max)
    sample = evaluation.rollout_sample(params, eval_panel, scen)
    return sample, scen


def cmd_evaluate(cfg: ScenarioConfig, out: Path, checkpoint: str,
                 compare: str | None) -> int:
    """Held-out evaluation of a checkpoint; optional dominance comparison."""
    sample, scen = _evaluate_checkpoint(cfg, checkpoint, cfg.nn["fund"])
    x, F = evaluation.empirical_cdf(sample.terminal_w)
    _write_csv(out / "evaluate_cdf.csv", "x,F", zip(x, F))
    curve = evaluation.outperformance_curve(sample)
    _write_csv(out / "evaluate_outperformance.csv", "t,prob",
               zip(sample.times, curve))
    pct = evaluation.allocation_percentiles(sample.allocations)
    _write_csv(out / "evaluate_allocation_percentiles.csv",
               "t,p05,p20,p50,p80,p95",
               ((t, *row) for t, row in zip(sample.times[:-1], pct)))
    ir = evaluation.information_ratio(sample)
    print(f"IR {ir:.4f}; terminal outperformance {curve[-1]:.3f}")
    if compare is not None:
        other_fund = "vetf" if cfg.nn["fund"] == "letf" else "letf"
        other, _ = _evaluate_checkpoint(cfg, compare, other_fund)
        rep = evaluation.partial_dominance(sample.terminal_w, other.terminal_w)
        with open(out / "dominance.json", "w") as f:
            json.dump({
                "dominant_above_floor": rep.dominant,
                "left_tail_violation": rep.left_tail_violation,
                "floor_level": rep.floor_level,
                "crossing_points": list(rep.crossing_points),
            }, f, indent=1, sort_keys=True)
            f.write("\n")
        print(f"dominance above floor: {rep.dominant} "
              f"(left tail violation: {rep.left_tail_violation})")
    _sidecar(out, "evaluate", cfg)
    return 0


def cmd_replay(cfg: ScenarioConfig, out: Path, checkpoint: str) -> int:
    """Run a checkpoint through the named historical decade windows."""
    params, _, _ = nn_policy.load_checkpoint(checkpoint)
    source = _build_source(cfg)
    scen = discrete_scenario(cfg, p_max=params.config.p_max)
    traces = evaluation.historical_replay(params, source, scen)
    rows = []
    for win in sorted(traces):
        s = traces[win]
        for i, t in enumerate(s.times):
            rows.append((win, t, s.wealth[i, 0], s.benchmark_wealth[i, 0]))
    _write_csv(out / "replay.csv", "window,t,W,W_hat", rows)
    for win in sorted(traces):
        s = traces[win]
        print(f"{win}: W(T)={s.terminal_w[0]:.1f} "
              f"W_hat(T)={s.terminal_w_hat[0]:.1f}")
    _sidecar(out, "replay", cfg)
    return 0


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="letflab",
        description="Benchmark-outperformance strategy lab for leveraged "
                    "and vanilla ETFs")
    p.add_argument("--config", help="INI scenario file")
    p.add_argument("--seed", type=int, help="override [run] seed")
    p.add_argument("--out", default="out", help="artifact directory")
    p.add_argument("--paths", type=int, help="override [run] paths")
    p.add_argument("--threads", type=int, help="override [run] threads")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("moments", "lumpsum", "closedform", "bootstrap", "train"):
        sub.add_parser(name)
    ev = sub.add_parser("evaluate")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--compare", help="second checkpoint for dominance report")
    rp = sub.add_parser("replay")
    rp.add_argument("--checkpoint", required=True)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        overrides = {"run": {}}
        if args.seed is not None:
            overrides["run"]["seed"] = args.seed
        if args.paths is not None:
            overrides["run"]["paths"] = args.paths
        if args.threads is not None:
            overrides["run"]["threads"] = args.threads
        cfg = load_config(args.config, overrides)
        if cfg.run["threads"] > 0:
            import torch
            torch.set_num_threads(cfg.run["threads"])
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "moments":
            return cmd_moments(cfg, out)
        if args.command == "lumpsum":
            return cmd_lumpsum(cfg, out)
        if args.command == "closedform":
            return cmd_closedform(cfg, out)
        if args.command == "bootstrap":
            return cmd_bootstrap(cfg, out)
        if args.command == "train":
            return cmd_train(cfg, out)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, out, args.checkpoint, args.compare)
        if args.command == "replay":
            return cmd_replay(cfg, out, args.checkpoint)
        raise ConfigError(f"unknown command {args.command!r}")
    except TrainingDivergedError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (MomentDivergenceError, DegenerateModelError, UndefinedIRError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ConfigError, DataError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
