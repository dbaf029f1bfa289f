"""Closed-form benchmark-outperformance feedback controls under continuous
rebalancing, their deterministic coefficient functions, and Monte Carlo
realization of the controlled wealth dynamics.

The optimal control is affine in wealth: invest a multiple of the gap between
a target level (benchmark wealth scaled by ``g`` plus an annuity/target term)
and current wealth, plus a benchmark-mirroring term.  The coefficients follow
from a quadratic value-function ansatz; an independent ODE integrator for the
ansatz coefficients is kept as a validation oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import market
from .errors import DegenerateModelError
from .market import EtfSpec, JumpMoments, KouParams
from .rng import substream

__all__ = [
    "BenchmarkPolicy",
    "InvestmentParams",
    "ClosedFormCoefficients",
    "k_beta",
    "coeff_g",
    "coeff_h",
    "make_coefficients",
    "optimal_letf_amount",
    "optimal_vetf_amount",
    "ClosedFormStrategy",
    "Ensemble",
    "simulate_controlled_paths",
    "ir_zero_cost",
    "OdeOracleResult",
    "ode_oracle",
]


class BenchmarkPolicy:
    """Deterministic benchmark equity weight as a function of time.

    Either a constant or a piecewise-constant schedule on [0, T].  The time
    integral needed by the coefficient functions is computed exactly.
    """

    def __init__(self, weight=0.7, breakpoints=None):
        if breakpoints is None:
            w = float(weight)
            self._edges = None
            self._weights = np.array([w])
        else:
            edges = np.asarray(breakpoints, dtype=float)
            self._weights = np.asarray(weight, dtype=float)
            if edges.ndim != 1 or np.any(np.diff(edges) <= 0):
                raise ValueError("breakpoints must be strictly increasing")
            if len(self._weights) != len(edges) + 1:
                raise ValueError("need one weight per piece (len(breakpoints)+1)")
            self._edges = edges
        if np.any(self._weights < 0) or np.any(self._weights > 1):
            raise ValueError("benchmark equity weight must lie in [0, 1]")

    def __call__(self, t):
        if self._edges is None:
            return self._weights[0] + 0.0 * np.asarray(t, dtype=float)
        idx = np.searchsorted(self._edges, t, side="right")
        out = self._weights[idx]
        return float(out) if np.ndim(t) == 0 else out

    def integral(self, a: float, b: float) -> float:
        """Exact integral of the weight schedule over [a, b]."""
        if b < a:
            return -self.integral(b, a)
        if self._edges is None:
            return self._weights[0] * (b - a)
        knots = np.concatenate(([a], self._edges[(self._edges > a) & (self._edges < b)], [b]))
        mids = 0.5 * (knots[:-1] + knots[1:])
        return float(np.sum(self(mids) * np.diff(knots)))


@dataclass(frozen=True)
class InvestmentParams:
    """Horizon, wealth scale, injections and outperformance-target settings."""

    T: float = 10.0
    w0: float = 100.0
    q: float = 5.0
    gamma: float = 125.0
    borrowing_premium: float = 0.03
    p_max: float = 1.5

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if self.w0 <= 0:
            raise ValueError(f"w0 must be positive, got {self.w0}")
        if self.q < 0:
            raise ValueError(f"q must be nonnegative, got {self.q}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.borrowing_premium < 0:
            raise ValueError("borrowing premium must be nonnegative")
        if self.p_max < 1:
            raise ValueError(f"p_max must be >= 1, got {self.p_max}")


def k_beta(params: KouParams, spec: EtfSpec, moments: JumpMoments) -> float:
    """Exponential-growth constant of the coefficient g for a fund with
    multiplier beta and expense ratio c:

    K = mu - r - (beta*[mu + lam*(k1_l - k1_s) - r] - c) * (sigma^2 + lam*k_chi)
                 / (beta*(sigma^2 + lam*k2_l))
    """
    b, c = spec.beta, spec.expense_ratio
    denom = b * (params.sigma ** 2 + params.lam * moments.kappa2_l)
    if denom <= 0:
        raise DegenerateModelError("vanishing denominator in growth constant")
    excess = b * (params.mu + params.lam * (moments.kappa1_l - moments.kappa1_s)
                  - params.r) - c
    return params.mu - params.r - excess * (
        params.sigma ** 2 + params.lam * moments.kappa_chi) / denom


def coeff_g(t: float, K: float, policy: BenchmarkPolicy, T: float) -> float:
    """g(t) = exp{K * integral_t^T of the benchmark equity weight}."""
    return math.exp(K * policy.integral(t, T))


def coeff_h(t: float, K: float, policy: BenchmarkPolicy, T: float,
            q: float, r: float) -> float:
    """Injection-annuity coefficient.

    h(t) = -(q/r)(1 - e^{-r(T-t)})
           + q e^{-r(T-t)} * integral_t^T exp{r(T-y) + K*I(y,T)} dy
    where I(y,T) is the benchmark-weight integral.  The r=0 case uses the
    analytic limit -q(T-t) + q*integral_t^T exp{K*I(y,T)} dy.
    """
    if q == 0.0 or t >= T:
        return 0.0

    def integrand(y):
        return math.exp(r * (T - y) + K * policy.integral(y, T))

    pts = None
    if policy._edges is not None:
        inside = policy._edges[(policy._edges > t) & (policy._edges < T)]
        pts = list(inside) if len(inside) else None
    integral, _ = integrate.quad(integrand, t, T, points=pts, limit=200)
    if r == 0.0:
        return -q * (T - t) + q * integral
    return -(q / r) * (1.0 - math.exp(-r * (T - t))) + (
        q * math.exp(-r * (T - t)) * integral)


@dataclass
class ClosedFormCoefficients:
    """Bundle (K, g, h) for one fund; g and h are callables of time."""

    K: float
    g: callable
    h: callable


def make_coefficients(params: KouParams, spec: EtfSpec, policy: BenchmarkPolicy,
                      invest: InvestmentParams) -> ClosedFormCoefficients:
    if spec.beta == 1.0:
        K = spec.expense_ratio
    else:
        K = k_beta(params, spec, market.letf_jump_moments(params, spec.beta))
    g = lambda t: coeff_g(t, K, policy, invest.T)
    h = lambda t: coeff_h(t, K, policy, invest.T, invest.q, params.r)
    return ClosedFormCoefficients(K, g, h)


def optimal_letf_amount(t, W, W_hat, coeffs: ClosedFormCoefficients,
                        moments: JumpMoments, params: KouParams,
                        spec: EtfSpec, invest: InvestmentParams,
                        policy: BenchmarkPolicy):
    """Currency amount the leveraged-fund investor holds in the fund.

    amount = m * [h(t) + gamma*e^{-r(T-t)} - (W - g(t)*W_hat)]
             + (1/beta) * g(t) * (sigma^2 + lam*k_chi)/(sigma^2 + lam*k2_l)
               * rho_hat(t) * W_hat

    with m = (beta*[mu + lam*(k1_l-k1_s) - r] - c) / (beta^2*(sigma^2+lam*k2_l)).
    Affine and strictly decreasing in W (contrarian).  Valid for any W,
    including W <= 0; callers wanting a fraction divide by W themselves.
    """
    b, c = spec.beta, spec.expense_ratio
    var_l = params.sigma ** 2 + params.lam * moments.kappa2_l
    m = (b * (params.mu + params.lam * (moments.kappa1_l - moments.kappa1_s)
              - params.r) - c) / (b ** 2 * var_l)
    g_t = coeffs.g(t)
    bracket = coeffs.h(t) + invest.gamma * np.exp(-params.r * (invest.T - t)) - (
        W - g_t * W_hat)
    mirror = (g_t / b) * ((params.sigma ** 2 + params.lam * moments.kappa_chi)
                          / var_l) * policy(t) * W_hat
    return m * bracket + mirror


def optimal_vetf_amount(t, W, W_hat, coeffs: ClosedFormCoefficients,
                        moments: JumpMoments, params: KouParams,
                        spec: EtfSpec, invest: InvestmentParams,
                        policy: BenchmarkPolicy):
    """Currency amount the vanilla-fund investor holds in the fund:

    amount = (mu - r - c)/(sigma^2 + lam*k2_s)
             * [h(t) + gamma*e^{-r(T-t)} - (W - g(t)*W_hat)]
             + g(t) * rho_hat(t) * W_hat
    """
    m = (params.mu - params.r - spec.expense_ratio) / (
        params.sigma ** 2 + params.lam * moments.kappa2_s)
    g_t = coeffs.g(t)
    bracket = coeffs.h(t) + invest.gamma * np.exp(-params.r * (invest.T - t)) - (
        W - g_t * W_hat)
    return m * bracket + g_t * policy(t) * W_hat


def ir_zero_cost(params: KouParams, T: float) -> float:
    """Information ratio attained by the optimal strategy with zero expense
    ratios and no jumps: sqrt(exp{((mu-r)/sigma)^2 * T} - 1)."""
    z = (params.mu - params.r) / params.sigma
    return math.sqrt(math.expm1(z * z * T))


class ClosedFormStrategy:
    """Feedback control on a fixed rebalance grid with cached coefficients."""

    def __init__(self, kind: str, params: KouParams, spec: EtfSpec,
                 policy: BenchmarkPolicy, invest: InvestmentParams):
        if kind not in ("letf", "vetf"):
            raise ValueError(f"kind must be 'letf' or 'vetf', got {kind!r}")
        if kind == "letf" and spec.beta <= 1.0:
            raise ValueError("leveraged control requires beta > 1")
        self.kind = kind
        self.params = params
        self.spec = spec
        self.policy = policy
        self.invest = invest
        self.moments = market.letf_jump_moments(params, spec.beta)
        self.coeffs = make_coefficients(params, spec, policy, invest)
        self._g_cache: dict[float, float] = {}
        self._h_cache: dict[float, float] = {}

    def amount(self, t, W, W_hat):
        """Vectorized control amount using cached coefficient values at t."""
        if t not in self._g_cache:
            self._g_cache[t] = self.coeffs.g(t)
            self._h_cache[t] = self.coeffs.h(t)
        cached = ClosedFormCoefficients(
            self.coeffs.K,
            lambda _t: self._g_cache[t],
            lambda _t: self._h_cache[t],
        )
        fn = optimal_letf_amount if self.kind == "letf" else optimal_vetf_amount
        return fn(t, W, W_hat, cached, self.moments, self.params, self.spec,
                  self.invest, self.policy)


@dataclass
class Ensemble:
    """Simulation output: time grid, per-time percentiles, terminal samples."""

    times: np.ndarray
    pct_w: np.ndarray        # shape (n_times, 3): 5th/50th/95th of W
    pct_fraction: np.ndarray  # same layout for the control fraction
    terminal_w: np.ndarray
    terminal_w_hat: np.ndarray
    max_gap: dict = field(default_factory=dict)  # max_{t,path}|W_a - W_b| per pair
    path_gap: dict = field(default_factory=dict)  # per-path max_t |W_a - W_b|


def simulate_controlled_paths(strategies, params: KouParams,
                              policy: BenchmarkPolicy, invest: InvestmentParams,
                              n_paths: int, steps_per_year: int,
                              seed: int = 0, batch: int = 200_000):
    """Simulate benchmark and one-or-more controlled investors on shared shocks.

    ``strategies`` is a dict name -> ClosedFormStrategy; all investors and the
    benchmark see identical Brownian and jump shocks, so cross-strategy wealth
    gaps measure only the effect of the control.  Per-interval asset returns
    are exact in law (no Euler error in the asset lines); the control is held
    constant within each step.

    Injections accrue as q*dt added at the start of each step.  Returns a dict
    name -> Ensemble; every Ensemble carries the same benchmark terminal
    sample, and ``max_gap`` on the first ensemble holds the running maximum
    pathwise wealth gap for every strategy pair.
    """
    if steps_per_year < 12:
        raise ValueError("need at least 12 steps per year")
    names = list(strategies)
    lev_betas = {s.spec.beta for s in strategies.values() if s.spec.beta > 1.0}
    if len(lev_betas) > 1:
        raise ValueError("at most one leveraged multiplier per shared-shock run")
    n_steps = int(round(invest.T * steps_per_year))
    dt = invest.T / n_steps
    times = np.linspace(0.0, invest.T, n_steps + 1)
    specs = {nm: strategies[nm].spec for nm in names}

    q_lvls = (5, 50, 95)
    pct_w = {nm: np.zeros((n_steps + 1, 3)) for nm in names}
    pct_f = {nm: np.zeros((n_steps + 1, 3)) for nm in names}
    term_w = {nm: np.empty(n_paths) for nm in names}
    term_wh = np.empty(n_paths)
    pairs = [(a, b) for i, a in enumerate(names) for b in names[i + 1:]]
    max_gap = {pair: 0.0 for pair in pairs}
    path_gap = {pair: np.zeros(n_paths) for pair in pairs}

    done = 0
    stream = 0
    while done < n_paths:
        nb = min(batch, n_paths - done)
        rng = substream(seed, stream)
        stream += 1
        W = {nm: np.full(nb, float(invest.w0)) for nm in names}
        W_hat = np.full(nb, float(invest.w0))
        # percentiles on the first batch only (order statistics of >= 10^4
        # paths are stable enough for reporting; terminal stats use all paths)
        first = done == 0
        if first:
            for nm in names:
                pct_w[nm][0] = np.percentile(W[nm], q_lvls)

        for n in range(n_steps):
            t = times[n]
            # one interval of shared shocks; build per-fund gross returns
            beta_max = max(s.beta for s in specs.values())
            iv = market.simulate_intervals(params, dt, nb, rng, beta=beta_max)
            cash = math.exp(params.r * dt)
            gross = {}
            for nm, sp in specs.items():
                if sp.beta == beta_max and sp.beta > 1.0:
                    gross[nm] = market.letf_gross_from_components(
                        iv.index_gross, iv.ytilde, dt, sp, params)
                else:
                    gross[nm] = market.vetf_gross_return(iv.index_gross, dt, sp)

            rho = policy(t)
            W_hat += invest.q * dt
            for nm in names:
                W[nm] += invest.q * dt
                amt = strategies[nm].amount(t, W[nm], W_hat)
                frac = amt / W[nm]
                W[nm] = (W[nm] - amt) * cash + amt * gross[nm]
                if first:
                    pct_f[nm][n] = np.percentile(frac, q_lvls)
                    pct_w[nm][n + 1] = np.percentile(W[nm], q_lvls)
            W_hat = (W_hat - rho * W_hat) * cash + rho * W_hat * iv.index_gross
            for a, b in pairs:
                gaps = np.abs(W[a] - W[b])
                np.maximum(path_gap[(a, b)][done:done + nb], gaps,
                           out=path_gap[(a, b)][done:done + nb])
                gap = float(gaps.max())
                if gap > max_gap[(a, b)]:
                    max_gap[(a, b)] = gap

        for nm in names:
            term_w[nm][done:done + nb] = W[nm]
            if first:
                pct_f[nm][n_steps] = pct_f[nm][n_steps - 1]
        term_wh[done:done + nb] = W_hat
        done += nb

    return {
        nm: Ensemble(times, pct_w[nm], pct_f[nm], term_w[nm], term_wh,
                     max_gap, path_gap)
        for nm in names
    }


@dataclass
class OdeOracleResult:
    times: np.ndarray
    A_rk4: np.ndarray
    D_rk4: np.ndarray
    F_rk4: np.ndarray
    A_exact: np.ndarray
    D_exact: np.ndarray
    F_exact: np.ndarray


def ode_oracle(params: KouParams, spec: EtfSpec, policy: BenchmarkPolicy,
               invest: InvestmentParams, n_steps: int = 10_000) -> OdeOracleResult:
    """Backward RK4 integration of the value-function ansatz coefficients,
    together with their analytic solutions, for cross-validation.

    With eta the squared market price of fund risk,
        A' = -(2r - eta) A,              A(T) = 1
        D' = -(2r - eta + K*rho(t)) D,   D(T) = -2
        F' = -2qA - (r - eta) F - qD,    F(T) = -2*gamma
    and the identities -D/(2A) = g and -F/(2A) - gamma*e^{-r(T-t)} = h tie the
    oracle to the control coefficients.
    """
    moments = market.letf_jump_moments(params, spec.beta)
    b, c = spec.beta, spec.expense_ratio
    var_l = params.sigma ** 2 + params.lam * moments.kappa2_l
    excess = b * (params.mu + params.lam * (moments.kappa1_l - moments.kappa1_s)
                  - params.r) - c
    eta = excess ** 2 / (b ** 2 * var_l)
    if b == 1.0:
        K = c
    else:
        K = k_beta(params, spec, moments)
    r, q, gamma, T = params.r, invest.q, invest.gamma, invest.T

    def rhs(t, y):
        A, D, F = y
        dA = -(2.0 * r - eta) * A
        dD = -(2.0 * r - eta + K * policy(t)) * D
        dF = -2.0 * q * A - (r - eta) * F - q * D
        return np.array([dA, dD, dF])

    times = np.linspace(0.0, T, n_steps + 1)
    hstep = T / n_steps
    ys = np.empty((n_steps + 1, 3))
    ys[-1] = [1.0, -2.0, -2.0 * gamma]
    for i in range(n_steps, 0, -1):
        t = times[i]
        y = ys[i]
        k1 = rhs(t, y)
        k2 = rhs(t - hstep / 2, y - hstep / 2 * k1)
        k3 = rhs(t - hstep / 2, y - hstep / 2 * k2)
        k4 = rhs(t - hstep, y - hstep * k3)
        ys[i - 1] = y - hstep / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    tau = T - times
    A_exact = np.exp((2.0 * r - eta) * tau)
    g_vals = np.array([coeff_g(t, K, policy, T) for t in times])
    D_exact = -2.0 * A_exact * g_vals
    h_vals = np.array([coeff_h(t, K, policy, T, q, r) for t in times])
    F_exact = -2.0 * A_exact * (h_vals + gamma * np.exp(-r * tau))
    return OdeOracleResult(times, ys[:, 0], ys[:, 1], ys[:, 2],
                           A_exact, D_exact, F_exact)
