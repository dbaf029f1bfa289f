"""Parametric asset dynamics: double-exponential jump-diffusion index, T-bill,
vanilla ETF and leveraged ETF with a limited-liability jump transform.

The index follows GBM plus compound-Poisson jumps with asymmetric
double-exponential log-jump sizes.  A leveraged ETF with daily multiplier
``beta`` experiences the same jumps, except that a large downward index jump
(multiplier at or below (beta-1)/beta) wipes the fund out instead of driving
it negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MomentDivergenceError

__all__ = [
    "KouParams",
    "EtfSpec",
    "JumpMoments",
    "JumpEvent",
    "IntervalBatch",
    "letf_jump_multiplier",
    "index_jump_moments",
    "letf_jump_moments",
    "sample_jump_multipliers",
    "simulate_interval",
    "simulate_intervals",
    "vetf_gross_return",
    "letf_gross_return",
    "letf_gross_from_components",
    "volatility_decay_factor",
]

_ETA1_GUARD = 2.0 + 1e-9


@dataclass(frozen=True)
class KouParams:
    """Calibrated market-model parameters (annualized, inflation-adjusted).

    ``lam = 0`` selects pure GBM; the jump-distribution parameters are then
    ignored.  For ``lam > 0`` the upward-jump exponent must exceed 2 so that
    second jump moments exist.
    """

    r: float
    mu: float
    sigma: float
    lam: float = 0.0
    p_up: float = 0.5
    eta1: float = 4.0
    eta2: float = 4.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.lam < 0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")
        if not 0.0 <= self.p_up <= 1.0:
            raise ValueError(f"p_up must lie in [0, 1], got {self.p_up}")
        if self.lam > 0:
            if self.eta1 <= _ETA1_GUARD:
                raise MomentDivergenceError(
                    f"eta1 = {self.eta1} <= 2: second jump moment diverges"
                )
            if self.eta2 <= 0:
                raise ValueError(f"eta2 must be positive, got {self.eta2}")

    @classmethod
    def gbm(cls, r: float, mu: float, sigma: float) -> "KouParams":
        """Pure-diffusion special case (no jumps)."""
        return cls(r=r, mu=mu, sigma=sigma, lam=0.0)


# Calibrated parameters for US equity/bond data, 1926-2023 (jump threshold 3).
KOU_CALIBRATED = KouParams(
    r=0.0031, mu=0.0873, sigma=0.1477, lam=0.3163,
    p_up=0.2258, eta1=4.3591, eta2=5.5337,
)
GBM_CALIBRATED = KouParams.gbm(r=0.0031, mu=0.0819, sigma=0.1850)


@dataclass(frozen=True)
class EtfSpec:
    """ETF contract: daily-return multiplier and annual expense ratio."""

    beta: float = 1.0
    expense_ratio: float = 0.0

    def __post_init__(self):
        if self.beta < 1.0:
            raise ValueError(f"beta must be >= 1 (bullish only), got {self.beta}")
        if self.expense_ratio < 0:
            raise ValueError(f"expense_ratio must be >= 0, got {self.expense_ratio}")

    @property
    def wipeout_threshold(self) -> float:
        """Index jump multiplier at or below which the fund value hits zero."""
        return 1.0 - 1.0 / self.beta


# Indicative expense ratios used throughout the illustrations.
VETF_SPEC = EtfSpec(beta=1.0, expense_ratio=0.0006)
LETF_SPEC = EtfSpec(beta=2.0, expense_ratio=0.0089)


@dataclass(frozen=True)
class JumpMoments:
    """First/second jump moments of the index and fund jump multipliers.

    kappa1_* = E[xi - 1]; kappa2_* = E[(xi - 1)^2];
    kappa_chi = E[(xi_fund - 1)(xi_index - 1)].
    """

    kappa1_s: float
    kappa2_s: float
    kappa1_l: float
    kappa2_l: float
    kappa_chi: float


@dataclass(frozen=True)
class JumpEvent:
    """Single jump inside a simulated interval (time offset in years)."""

    time: float
    xi_s: float
    xi_l: float


def letf_jump_multiplier(xi_s, beta: float):
    """Fund jump multiplier implied by an index jump multiplier.

    Passes xi_s through unless it falls at or below (beta-1)/beta, in which
    case the limited-liability floor applies and the fund value drops to zero
    (the multiplier saturates at the floor so 1 + beta*(xi_l - 1) = 0).
    """
    xi_s = np.asarray(xi_s, dtype=float)
    if np.any(xi_s <= 0):
        raise ValueError("index jump multiplier must be positive")
    if beta < 1.0:
        raise ValueError(f"beta must be >= 1, got {beta}")
    floor = 1.0 - 1.0 / beta
    out = np.maximum(xi_s, floor)
    return float(out) if out.ndim == 0 else out


def index_jump_moments(params: KouParams) -> tuple[float, float]:
    """(kappa1, kappa2) of the index jump multiplier.

    Closed form for the asymmetric double-exponential log-jump density:
    E[xi]   = p*eta1/(eta1-1) + (1-p)*eta2/(eta2+1),
    E[xi^2] = p*eta1/(eta1-2) + (1-p)*eta2/(eta2+2).
    """
    if params.lam == 0:
        return 0.0, 0.0
    if params.eta1 <= _ETA1_GUARD:
        raise MomentDivergenceError(
            f"eta1 = {params.eta1} <= 2: second jump moment diverges"
        )
    p, e1, e2 = params.p_up, params.eta1, params.eta2
    m1 = p * e1 / (e1 - 1.0) + (1.0 - p) * e2 / (e2 + 1.0)
    m2 = p * e1 / (e1 - 2.0) + (1.0 - p) * e2 / (e2 + 2.0)
    return m1 - 1.0, m2 - 2.0 * m1 + 1.0


def letf_jump_moments(params: KouParams, beta: float) -> JumpMoments:
    """Jump moments of index and fund multipliers, including the cross term.

    The floored fund multiplier truncates the downward-jump branch at
    theta = (beta-1)/beta, giving (with p = p_up):

    E[xi_l]      = p*eta1/(eta1-1)
                   + (1-p)*eta2*[theta^(eta2+1)/eta2 + (1-theta^(eta2+1))/(eta2+1)]
    E[xi_l^2]    = p*eta1/(eta1-2)
                   + (1-p)*eta2*[theta^(eta2+2)/eta2 + (1-theta^(eta2+2))/(eta2+2)]
    E[xi_l*xi_s] = p*eta1/(eta1-2)
                   + (1-p)*eta2*[theta^(eta2+2)/(eta2+1) + (1-theta^(eta2+2))/(eta2+2)]

    For beta = 1 this collapses exactly to the index moments (cross moment
    equal to kappa2 of the index).
    """
    if beta < 1.0:
        raise ValueError(f"beta must be >= 1, got {beta}")
    k1s, k2s = index_jump_moments(params)
    if params.lam == 0:
        return JumpMoments(0.0, 0.0, 0.0, 0.0, 0.0)
    if beta == 1.0:
        return JumpMoments(k1s, k2s, k1s, k2s, k2s)

    p, e1, e2 = params.p_up, params.eta1, params.eta2
    theta = 1.0 - 1.0 / beta
    t1 = theta ** (e2 + 1.0)
    t2 = theta ** (e2 + 2.0)
    m1_l = p * e1 / (e1 - 1.0) + (1.0 - p) * e2 * (t1 / e2 + (1.0 - t1) / (e2 + 1.0))
    m2_l = p * e1 / (e1 - 2.0) + (1.0 - p) * e2 * (t2 / e2 + (1.0 - t2) / (e2 + 2.0))
    m_ls = p * e1 / (e1 - 2.0) + (1.0 - p) * e2 * (
        t2 / (e2 + 1.0) + (1.0 - t2) / (e2 + 2.0)
    )
    m1_s = k1s + 1.0
    k1l = m1_l - 1.0
    k2l = m2_l - 2.0 * m1_l + 1.0
    kchi = m_ls - m1_l - m1_s + 1.0
    return JumpMoments(k1s, k2s, k1l, k2l, kchi)


def sample_jump_multipliers(params: KouParams, size: int, rng: np.random.Generator):
    """Draw i.i.d. index jump multipliers xi_s.

    Branch with probability p_up, then an exponential log-magnitude:
    log xi = +Exp(eta1) (up) or -Exp(eta2) (down).
    """
    up = rng.random(size) < params.p_up
    mag = np.empty(size)
    n_up = int(up.sum())
    mag[up] = rng.exponential(1.0 / params.eta1, n_up)
    mag[~up] = -rng.exponential(1.0 / params.eta2, size - n_up)
    return np.exp(mag)


@dataclass
class IntervalBatch:
    """Vectorized per-path interval outcomes used by wealth simulations."""

    index_gross: np.ndarray      # exact gross index return over the interval
    sum_jump_s: np.ndarray       # sum of (xi_s - 1) per path
    sum_jump_l: np.ndarray       # sum of (xi_l - 1) per path
    ytilde: np.ndarray           # jump-decay product for the leveraged fund
    normal: np.ndarray = field(default=None, repr=False)


def simulate_intervals(
    params: KouParams,
    dt: float,
    n_paths: int,
    rng: np.random.Generator,
    beta: float = 1.0,
) -> IntervalBatch:
    """Simulate one interval of length dt across n_paths (exact in law).

    Uses the exact log-return representation: Poisson jump count, i.i.d.
    double-exponential jump multipliers and one Gaussian increment, so the
    index return carries no time-stepping error.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    k1s, _ = index_jump_moments(params)
    if params.lam > 0:
        counts = rng.poisson(params.lam * dt, n_paths)
        total = int(counts.sum())
        xi_s = sample_jump_multipliers(params, total, rng)
        xi_l = letf_jump_multiplier(xi_s, beta) if total else xi_s
        path_idx = np.repeat(np.arange(n_paths), counts)
        sum_log_s = np.bincount(path_idx, weights=np.log(xi_s), minlength=n_paths)
        sum_jump_s = np.bincount(path_idx, weights=xi_s - 1.0, minlength=n_paths)
        sum_jump_l = np.bincount(path_idx, weights=xi_l - 1.0, minlength=n_paths)
        factor = (1.0 + beta * (xi_l - 1.0)) / xi_s ** beta
        with np.errstate(divide="ignore"):
            log_factor = np.log(factor)
        ytilde = np.exp(np.bincount(path_idx, weights=log_factor, minlength=n_paths))
    else:
        sum_log_s = sum_jump_s = sum_jump_l = np.zeros(n_paths)
        ytilde = np.ones(n_paths)

    z = rng.standard_normal(n_paths)
    drift = (params.mu - params.lam * k1s - 0.5 * params.sigma ** 2) * dt
    index_gross = np.exp(drift + params.sigma * math.sqrt(dt) * z + sum_log_s)
    return IntervalBatch(index_gross, sum_jump_s, sum_jump_l, ytilde, normal=z)


def simulate_interval(
    params: KouParams,
    dt: float,
    rng: np.random.Generator,
    beta: float = 1.0,
) -> tuple[float, list[JumpEvent]]:
    """Single-path interval simulation returning the jump decomposition.

    Jump times within the interval are uniform (needed only for
    intra-interval strategies; recorded for completeness).
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    k1s, _ = index_jump_moments(params)
    jumps: list[JumpEvent] = []
    sum_log = 0.0
    if params.lam > 0:
        n_jumps = rng.poisson(params.lam * dt)
        if n_jumps:
            xi_s = sample_jump_multipliers(params, n_jumps, rng)
            times = np.sort(rng.uniform(0.0, dt, n_jumps))
            for t, x in zip(times, xi_s):
                jumps.append(JumpEvent(float(t), float(x),
                                       float(letf_jump_multiplier(x, beta))))
            sum_log = float(np.log(xi_s).sum())
    z = rng.standard_normal()
    drift = (params.mu - params.lam * k1s - 0.5 * params.sigma ** 2) * dt
    gross = math.exp(drift + params.sigma * math.sqrt(dt) * z + sum_log)
    return gross, jumps


def vetf_gross_return(index_gross, dt: float, spec: EtfSpec):
    """Vanilla-fund gross return: the index return net of the expense drag."""
    return math.exp(-spec.expense_ratio * dt) * np.asarray(index_gross, dtype=float)


def volatility_decay_factor(dt: float, spec: EtfSpec, params: KouParams) -> float:
    """Deterministic volatility/time-decay drag on a held leveraged position:
    exp{-[(beta-1)r + 0.5*(beta-1)*beta*sigma^2] * dt}.
    """
    b = spec.beta
    return math.exp(-((b - 1.0) * params.r + 0.5 * (b - 1.0) * b * params.sigma ** 2) * dt)


def _ytilde_from_jumps(jump_list, beta: float) -> float:
    y = 1.0
    for ev in jump_list:
        if ev.xi_s <= 0:
            raise ValueError("jump list contains non-positive index multiplier")
        y *= (1.0 + beta * (ev.xi_l - 1.0)) / ev.xi_s ** beta
    return y


def letf_gross_return(index_gross, jump_list, dt: float, spec: EtfSpec,
                      params: KouParams):
    """Leveraged-fund gross return over an interval.

    exp{-c*dt} * f(dt) * Ytilde * index_gross^beta, where f is the
    volatility/time-decay factor and Ytilde the jump-decay product over the
    interval's jumps.  Nonnegative for all inputs (limited liability).
    """
    ytilde = _ytilde_from_jumps(jump_list, spec.beta)
    return letf_gross_from_components(index_gross, ytilde, dt, spec, params)


def letf_gross_from_components(index_gross, ytilde, dt: float, spec: EtfSpec,
                               params: KouParams):
    """Same as letf_gross_return but with the jump-decay product precomputed
    (vectorized path simulations carry it per path)."""
    g = np.asarray(index_gross, dtype=float)
    out = (math.exp(-spec.expense_ratio * dt)
           * volatility_decay_factor(dt, spec, params)
           * np.asarray(ytilde, dtype=float) * g ** spec.beta)
    return float(out) if out.ndim == 0 else out
