"""Single-period payoff analytics and grid-search tracking optimization.

One quarter, one decision: what fraction of wealth to put in the fund so
that terminal wealth lands closest (in mean square) to the benchmark plus a
fixed outperformance target.  Common random numbers across the fraction grid
make the argmin deterministic for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import market
from .errors import ConfigError
from .market import EtfSpec, KouParams

__all__ = [
    "LumpSumScenario",
    "benchmark_payoff",
    "vetf_investor_payoff",
    "letf_investor_payoff",
    "GridSearchResult",
    "grid_search_ir_optimal",
    "payoff_diagram",
]


@dataclass(frozen=True)
class LumpSumScenario:
    """Single-period setup shared by both investors and the benchmark."""

    params: KouParams
    vetf: EtfSpec = market.VETF_SPEC
    letf: EtfSpec = market.LETF_SPEC
    dt: float = 0.25
    p_hat_s: float = 0.7
    borrowing_premium: float = 0.03
    grid: np.ndarray = field(
        default_factory=lambda: np.round(np.arange(0.0, 2.0 + 1e-12, 0.001), 3))

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not 0.0 <= self.p_hat_s <= 1.0:
            raise ConfigError(f"benchmark fraction must lie in [0,1], got {self.p_hat_s}")
        g = np.asarray(self.grid, dtype=float)
        if g.size == 0:
            raise ConfigError("empty fraction grid")
        if not np.all(np.isfinite(g)) or np.any(np.diff(g) < 0):
            raise ConfigError("fraction grid must be finite and sorted")


def benchmark_payoff(p_hat_s, index_gross, r: float, dt: float):
    """Benchmark gross wealth return: (1 - p)e^{r dt} + p * index_gross."""
    return (1.0 - p_hat_s) * math.exp(r * dt) + p_hat_s * np.asarray(
        index_gross, dtype=float)


def _cash_rate(p: float, scenario: LumpSumScenario) -> float:
    """Financing rate for the cash leg: premium applies only when borrowing
    (fraction strictly above 1)."""
    b = scenario.borrowing_premium if p > 1.0 else 0.0
    return scenario.params.r + b


def vetf_investor_payoff(p, index_gross, scenario: LumpSumScenario):
    """(1-p)e^{(r + b*1[p>1])dt} + p e^{-c_v dt} * index_gross."""
    dt = scenario.dt
    cash = math.exp(_cash_rate(p, scenario) * dt)
    fund = market.vetf_gross_return(index_gross, dt, scenario.vetf)
    return (1.0 - p) * cash + p * fund


def letf_investor_payoff(p, index_gross, jump_list, scenario: LumpSumScenario):
    """(1-p)e^{(r + b*1[p>1])dt} + p * leveraged-fund gross return.

    For p <= 1 the payoff is bounded below by the cash leg (fund value cannot
    go negative); for p > 1 leverage reintroduces unlimited downside.
    """
    dt = scenario.dt
    cash = math.exp(_cash_rate(p, scenario) * dt)
    fund = market.letf_gross_return(index_gross, jump_list, dt, scenario.letf,
                                    scenario.params)
    return (1.0 - p) * cash + p * fund


@dataclass
class GridSearchResult:
    p_star: float
    objective: float
    grid: np.ndarray
    objective_curve: np.ndarray


def grid_search_ir_optimal(kind: str, gamma: float, scenario: LumpSumScenario,
                           n_paths: int, rng: np.random.Generator,
                           w0: float = 100.0) -> GridSearchResult:
    """Exhaustive grid search for the fraction minimizing
    E[(W(dt;p) - (W_hat(dt) + gamma))^2] under common random numbers.

    The objective is quadratic in p within each borrowing regime, so it is
    evaluated from sufficient statistics (three inner products per regime)
    rather than materializing a paths-by-grid matrix.  Ties break toward the
    smaller fraction.
    """
    if kind not in ("letf", "vetf"):
        raise ConfigError(f"kind must be 'letf' or 'vetf', got {kind!r}")
    params, dt = scenario.params, scenario.dt
    iv = market.simulate_intervals(params, dt, n_paths, rng,
                                   beta=scenario.letf.beta)
    if kind == "vetf":
        fund = market.vetf_gross_return(iv.index_gross, dt, scenario.vetf)
    else:
        fund = market.letf_gross_from_components(iv.index_gross, iv.ytilde,
                                                 dt, scenario.letf, params)
    target = w0 * benchmark_payoff(scenario.p_hat_s, iv.index_gross,
                                   params.r, dt) + gamma

    grid = np.asarray(scenario.grid, dtype=float)
    objective = np.empty_like(grid)
    for borrow in (False, True):
        mask = (grid > 1.0) if borrow else (grid <= 1.0)
        if not mask.any():
            continue
        rate = params.r + (scenario.borrowing_premium if borrow else 0.0)
        cash = math.exp(rate * dt)
        # W(p) = w0*cash + p*w0*(fund - cash); residual affine in p
        a = w0 * cash - target
        c = w0 * (fund - cash)
        saa = float(np.mean(a * a))
        sac = float(np.mean(a * c))
        scc = float(np.mean(c * c))
        ps = grid[mask]
        objective[mask] = saa + 2.0 * ps * sac + ps * ps * scc
    i = int(np.argmin(objective))  # argmin takes the first (smallest p) tie
    return GridSearchResult(float(grid[i]), float(objective[i]), grid, objective)


def payoff_diagram(scenario: LumpSumScenario, p_letf: float, p_vetf: float,
                   rng: np.random.Generator | None = None,
                   lattice: np.ndarray | None = None):
    """Payoff curves on a deterministic index-gross-return lattice.

    Without an rng, jumps are suppressed (smooth deterministic curves); with
    an rng, one jump history is resampled per lattice point, producing the
    scatter of realized leveraged-fund payoffs around the jump-free curve.
    Returns (lattice, letf_payoff, vetf_payoff, benchmark_payoff).
    """
    if lattice is None:
        lattice = np.round(np.arange(0.2, 1.8 + 1e-12, 0.005), 3)
    lattice = np.asarray(lattice, dtype=float)
    params, dt = scenario.params, scenario.dt
    vp = vetf_investor_payoff(p_vetf, lattice, scenario)
    bp = benchmark_payoff(scenario.p_hat_s, lattice, params.r, dt)
    lp = np.empty_like(lattice)
    for i, x in enumerate(lattice):
        if rng is None or params.lam == 0:
            jumps = []
        else:
            _, jumps = market.simulate_interval(params, dt, rng,
                                                beta=scenario.letf.beta)
        lp[i] = letf_investor_payoff(p_letf, x, jumps, scenario)
    return lattice, lp, vp, bp
