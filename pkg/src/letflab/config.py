"""Scenario configuration: INI files with fixed sections, unknown keys
rejected, every field defaulted to the calibrated illustration setup.
"""

from __future__ import annotations

import configparser
import hashlib
import os
from dataclasses import dataclass, field

from .closed_form import BenchmarkPolicy, InvestmentParams
from .errors import ConfigError
from .market import EtfSpec, KouParams
from .nn_policy import NetworkConfig, TrainConfig, DiscreteScenario

__all__ = ["ScenarioConfig", "load_config", "config_digest", "ENV_PREFIX"]

ENV_PREFIX = "LETFLAB_"

# section -> {key: default-as-string}; the single source of schema truth
_SCHEMA = {
    "model": {
        "kind": "kou", "r": "0.0031", "mu": "0.0873", "sigma": "0.1477",
        "lam": "0.3163", "p_up": "0.2258", "eta1": "4.3591", "eta2": "5.5337",
    },
    "etf": {
        "beta": "2.0", "vetf_expense": "0.0006", "letf_expense": "0.0089",
    },
    "benchmark": {
        "equity_weight": "0.7", "t30": "0.15", "b10": "0.15", "market": "0.70",
    },
    "invest": {
        "horizon": "10", "w0": "100", "q": "5", "gamma": "125",
        "borrowing_premium": "0.03", "p_max": "1.5",
    },
    "data": {
        "source": "synthetic", "years": "98", "expected_block_size": "3",
        "n_paths": "10000", "rebalance_interval": "0.25", "bond_noise": "0.002",
        "t30_file": "", "b10_file": "", "market_daily_file": "",
        "inflation_file": "",
    },
    "nn": {
        "fund": "letf", "hidden_layers": "2", "hidden_width": "8",
        "p_max": "1.0", "steps": "20000", "batch_size": "1024", "lr": "0.01",
    },
    "run": {
        "seed": "0", "steps_per_year": "252", "paths": "10000",
        "gammas": "20,50", "threads": "0",
    },
}


@dataclass
class ScenarioConfig:
    """Fully resolved scenario: model, contracts, benchmark, data and run
    settings, ready for the experiment commands."""

    params: KouParams
    vetf: EtfSpec
    letf: EtfSpec
    policy: BenchmarkPolicy
    benchmark_weights: dict
    invest: InvestmentParams
    data: dict
    nn: dict
    run: dict
    raw: dict = field(repr=False, default_factory=dict)


def _read_ini(path: str | None) -> dict:
    cp = configparser.ConfigParser()
    cp.optionxform = str  # case-sensitive keys
    if path is not None:
        if not cp.read(path):
            raise ConfigError(f"cannot read config file {path}")
    out = {}
    for section, defaults in _SCHEMA.items():
        out[section] = dict(defaults)
        if cp.has_section(section):
            for key, val in cp.items(section):
                if key not in defaults:
                    raise ConfigError(
                        f"unknown key [{section}] {key}; "
                        f"known keys: {sorted(defaults)}")
                out[section][key] = val
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]; "
                              f"known sections: {sorted(_SCHEMA)}")
    return out


def _apply_env(raw: dict):
    """Environment overrides: LETFLAB_SECTION_KEY=value."""
    for section, keys in raw.items():
        for key in keys:
            env = f"{ENV_PREFIX}{section.upper()}_{key.upper()}"
            if env in os.environ:
                raw[section][key] = os.environ[env]


def load_config(path: str | None = None, overrides: dict | None = None
                ) -> ScenarioConfig:
    """Parse, override (env then explicit), validate, and build a scenario."""
    raw = _read_ini(path)
    _apply_env(raw)
    for section, kv in (overrides or {}).items():
        for key, val in kv.items():
            if section not in raw or key not in raw[section]:
                raise ConfigError(f"unknown override [{section}] {key}")
            raw[section][key] = str(val)

    def f(sec, key):
        try:
            return float(raw[sec][key])
        except ValueError:
            raise ConfigError(
                f"[{sec}] {key}: not a number: {raw[sec][key]!r}") from None

    def i(sec, key):
        v = f(sec, key)
        if v != int(v):
            raise ConfigError(f"[{sec}] {key}: expected integer, got {v}")
        return int(v)

    kind = raw["model"]["kind"].lower()
    if kind == "gbm":
        params = KouParams.gbm(f("model", "r"), f("model", "mu"),
                               f("model", "sigma"))
    elif kind == "kou":
        params = KouParams(r=f("model", "r"), mu=f("model", "mu"),
                           sigma=f("model", "sigma"), lam=f("model", "lam"),
                           p_up=f("model", "p_up"), eta1=f("model", "eta1"),
                           eta2=f("model", "eta2"))
    else:
        raise ConfigError(f"[model] kind must be 'kou' or 'gbm', got {kind!r}")

    vetf = EtfSpec(1.0, f("etf", "vetf_expense"))
    letf = EtfSpec(f("etf", "beta"), f("etf", "letf_expense"))
    if letf.beta <= 1.0:
        raise ConfigError("[etf] beta must exceed 1 for the leveraged fund")

    weights = {"T30": f("benchmark", "t30"), "B10": f("benchmark", "b10"),
               "Market": f("benchmark", "market")}
    if any(w < 0 for w in weights.values()) or abs(sum(weights.values()) - 1) > 1e-9:
        raise ConfigError("[benchmark] discrete weights must be nonnegative "
                          "and sum to 1")
    policy = BenchmarkPolicy(f("benchmark", "equity_weight"))

    invest = InvestmentParams(
        T=f("invest", "horizon"), w0=f("invest", "w0"), q=f("invest", "q"),
        gamma=f("invest", "gamma"),
        borrowing_premium=f("invest", "borrowing_premium"),
        p_max=f("invest", "p_max"))

    source = raw["data"]["source"].lower()
    if source not in ("synthetic", "files"):
        raise ConfigError("[data] source must be 'synthetic' or 'files'")
    data = {
        "source": source, "years": i("data", "years"),
        "expected_block_size": f("data", "expected_block_size"),
        "n_paths": i("data", "n_paths"),
        "rebalance_interval": f("data", "rebalance_interval"),
        "bond_noise": f("data", "bond_noise"),
        "files": {k: raw["data"][f"{k}_file"]
                  for k in ("t30", "b10", "market_daily", "inflation")},
    }
    if source == "files":
        missing = [k for k, v in data["files"].items() if not v]
        if missing:
            raise ConfigError(f"[data] source=files needs paths for {missing}")

    fund = raw["nn"]["fund"].lower()
    if fund not in ("letf", "vetf"):
        raise ConfigError("[nn] fund must be 'letf' or 'vetf'")
    nn = {
        "fund": fund,
        "hidden_layers": i("nn", "hidden_layers"),
        "hidden_width": i("nn", "hidden_width"),
        "p_max": f("nn", "p_max"),
        "steps": i("nn", "steps"),
        "batch_size": i("nn", "batch_size"),
        "lr": f("nn", "lr"),
    }
    try:
        gammas = [float(g) for g in raw["run"]["gammas"].split(",") if g.strip()]
    except ValueError:
        raise ConfigError(
            f"[run] gammas: not a number list: {raw['run']['gammas']!r}") from None
    run = {
        "seed": i("run", "seed"),
        "steps_per_year": i("run", "steps_per_year"),
        "paths": i("run", "paths"),
        "gammas": gammas,
        "threads": i("run", "threads"),
    }
    return ScenarioConfig(params, vetf, letf, policy, weights, invest,
                          data, nn, run, raw=raw)


def config_digest(cfg: ScenarioConfig) -> str:
    """Stable hash of the fully resolved configuration."""
    text = "\n".join(
        f"{sec}.{key}={cfg.raw[sec][key]}"
        for sec in sorted(cfg.raw) for key in sorted(cfg.raw[sec]))
    return hashlib.sha256(text.encode()).hexdigest()


def discrete_scenario(cfg: ScenarioConfig, fund: str | None = None,
                      p_max: float | None = None,
                      borrowing_premium: float | None = None
                      ) -> DiscreteScenario:
    """DiscreteScenario for the configured fund (overridable per experiment)."""
    fund = (fund or cfg.nn["fund"]).upper()
    inv = cfg.invest
    invest = InvestmentParams(
        T=inv.T, w0=inv.w0, q=inv.q, gamma=inv.gamma,
        borrowing_premium=(inv.borrowing_premium if borrowing_premium is None
                           else borrowing_premium),
        p_max=cfg.nn["p_max"] if p_max is None else p_max)
    return DiscreteScenario(
        invest=invest, investor_assets=("T30", fund),
        benchmark_weights=dict(cfg.benchmark_weights),
        dt=cfg.data["rebalance_interval"])


def network_config(cfg: ScenarioConfig, scenario: DiscreteScenario,
                   wealth_scale: float) -> NetworkConfig:
    return NetworkConfig(
        n_assets=len(scenario.investor_assets),
        hidden_layers=cfg.nn["hidden_layers"],
        hidden_width=cfg.nn["hidden_width"],
        p_max=scenario.invest.p_max,
        horizon=scenario.invest.T,
        wealth_scale=wealth_scale)


def train_config(cfg: ScenarioConfig) -> TrainConfig:
    return TrainConfig(steps=cfg.nn["steps"], batch_size=cfg.nn["batch_size"],
                       lr=cfg.nn["lr"], seed=cfg.run["seed"])
