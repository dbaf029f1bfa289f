"""Historical return-data plumbing: ingestion and validation, proxy ETF
series construction, inflation adjustment, stationary block bootstrap
resampling into joint return panels, and a synthetic fallback history.

All resampling is joint: every asset's return in a given path/time slot comes
from the same source month, preserving cross-asset dependence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import market
from .errors import ConfigError, DataError
from .market import EtfSpec, KouParams

__all__ = [
    "ReturnSeries",
    "ReturnsPanel",
    "BootstrapConfig",
    "load_series",
    "build_proxy_etf",
    "stationary_block_bootstrap",
    "apply_borrowing_premium",
    "synthetic_source",
    "build_panel_source",
    "REPLAY_WINDOWS",
    "replay_slice",
    "PANEL_ASSETS",
]

# Canonical asset ordering for panels: cash-like first (premium applies to
# asset 1), then bond, index, and fund proxies.
PANEL_ASSETS = ("T30", "B10", "Market", "VETF", "LETF")

# Decade-long windows used for historical replays.
REPLAY_WINDOWS = {
    "2000-2009": ("2000-01", "2009-12"),
    "2005-2014": ("2005-01", "2014-12"),
    "2010-2019": ("2010-01", "2019-12"),
    "2014-2023": ("2014-01", "2023-12"),
}


@dataclass
class ReturnSeries:
    """Validated simple-return series at daily or monthly frequency."""

    frequency: str
    dates: list[str]
    returns: np.ndarray

    def __post_init__(self):
        if self.frequency not in ("daily", "monthly"):
            raise DataError(f"unknown frequency {self.frequency!r}")
        self.returns = np.asarray(self.returns, dtype=float)
        if len(self.dates) != len(self.returns):
            raise DataError("dates and returns length mismatch")
        if np.any(self.returns <= -1.0):
            raise DataError("returns must exceed -100%")
        if list(self.dates) != sorted(set(self.dates)):
            raise DataError("dates must be strictly increasing")
        self._check_gaps()

    def _check_gaps(self):
        if self.frequency == "monthly":
            for prev, cur in zip(self.dates, self.dates[1:]):
                expected = _next_month(prev)
                if cur != expected:
                    raise DataError(f"gap in monthly series: missing {expected}")
        else:
            # daily data may skip weekends/holidays; only a fully absent
            # calendar month counts as a gap
            for prev, cur in zip(self.dates, self.dates[1:]):
                pm, cm = prev[:7], cur[:7]
                if cm != pm and cm != _next_month(pm):
                    raise DataError(
                        f"gap in daily series between {prev} and {cur}")

    def __len__(self):
        return len(self.returns)

    def month_of(self, i: int) -> str:
        return self.dates[i][:7]


def _next_month(ym: str) -> str:
    y, m = int(ym[:4]), int(ym[5:7])
    m += 1
    if m == 13:
        y, m = y + 1, 1
    return f"{y:04d}-{m:02d}"


def load_series(path: str, frequency: str) -> ReturnSeries:
    """Parse a `date,return` CSV into a validated series.

    Monthly files use YYYY-MM dates (YYYY-MM-DD accepted, day ignored);
    daily files use YYYY-MM-DD.  Errors name the offending line.
    """
    dates: list[str] = []
    rets: list[float] = []
    with open(path) as f:
        header = f.readline().strip().lower()
        if header.replace(" ", "") != "date,return":
            raise DataError(f"{path}: expected header 'date,return', got {header!r}")
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected 2 fields, got {len(parts)}")
            d, r = parts[0].strip(), parts[1].strip()
            try:
                val = float(r)
            except ValueError:
                raise DataError(f"{path}:{lineno}: unparseable return {r!r}") from None
            if val <= -1.0:
                raise DataError(f"{path}:{lineno}: return {val} <= -1")
            if frequency == "monthly":
                d = d[:7]
                if len(d) != 7 or d[4] != "-":
                    raise DataError(f"{path}:{lineno}: bad monthly date {parts[0]!r}")
            else:
                if len(d) != 10 or d[4] != "-" or d[7] != "-":
                    raise DataError(f"{path}:{lineno}: bad daily date {d!r}")
            dates.append(d)
            rets.append(val)
    try:
        return ReturnSeries(frequency, dates, np.array(rets))
    except DataError as e:
        raise DataError(f"{path}: {e}") from None


def build_proxy_etf(index_daily: ReturnSeries, tbill: ReturnSeries,
                    spec: EtfSpec, inflation: ReturnSeries) -> ReturnSeries:
    """Monthly proxy fund return series from daily index returns.

    Per month: scale each daily return by beta with the limited-liability
    floor at -100%, compound the dailies, deduct the financing drag
    (beta-1) * observed monthly T-bill return plus expense_ratio/12, then
    deflate by monthly inflation.  beta=1, c=0, zero inflation is the
    identity proxy.
    """
    if index_daily.frequency != "daily":
        raise DataError("index series must be daily")
    months = sorted({d[:7] for d in index_daily.dates})
    if months != list(tbill.dates) or months != list(inflation.dates):
        raise DataError("date misalignment between index, T-bill and inflation")
    out = np.empty(len(months))
    keys = np.array([d[:7] for d in index_daily.dates])
    for i, m in enumerate(months):
        daily = index_daily.returns[keys == m]
        scaled = np.maximum(spec.beta * daily, -1.0)
        gross = float(np.prod(1.0 + scaled))
        nominal = gross - 1.0 - ((spec.beta - 1.0) * tbill.returns[i]
                                 + spec.expense_ratio / 12.0)
        out[i] = (1.0 + nominal) / (1.0 + inflation.returns[i]) - 1.0
    if np.any(out <= -1.0):
        out = np.maximum(out, -1.0 + 1e-12)
    return ReturnSeries("monthly", months, out)


@dataclass(frozen=True)
class BootstrapConfig:
    """Stationary-bootstrap resampling settings (block lengths in months)."""

    expected_block_size: float = 3.0
    n_paths: int = 10_000
    horizon: float = 10.0
    rebalance_interval: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.expected_block_size < 1.0:
            raise ConfigError("expected block size must be at least one month")
        if self.n_paths < 1:
            raise ConfigError("need at least one path")
        months = self.horizon * 12.0
        per_rb = self.rebalance_interval * 12.0
        if abs(months - round(months)) > 1e-9 or abs(per_rb - round(per_rb)) > 1e-9:
            raise ConfigError("horizon and rebalance interval must be whole months")

    @property
    def n_months(self) -> int:
        return int(round(self.horizon * 12.0))

    @property
    def months_per_rebalance(self) -> int:
        return int(round(self.rebalance_interval * 12.0))


@dataclass
class ReturnsPanel:
    """Joint per-rebalance gross returns: shape (n_assets, n_paths, n_rb)."""

    assets: tuple
    gross: np.ndarray
    source_indices: np.ndarray | None = None  # (n_paths, n_months) provenance

    def __post_init__(self):
        if self.gross.shape[0] != len(self.assets):
            raise DataError("asset labels do not match panel first axis")
        if np.any(self.gross[1:] <= 0.0):
            raise DataError("long-only asset gross returns must be positive")

    @property
    def n_paths(self) -> int:
        return self.gross.shape[1]

    @property
    def n_rebalances(self) -> int:
        return self.gross.shape[2]

    def asset(self, label: str) -> np.ndarray:
        return self.gross[self.assets.index(label)]

    def split(self, train_fraction: float = 0.8):
        """Deterministic train/eval split by path id (leading block trains)."""
        cut = int(round(self.n_paths * train_fraction))
        tr = ReturnsPanel(self.assets, self.gross[:, :cut])
        ev = ReturnsPanel(self.assets, self.gross[:, cut:])
        return tr, ev


def stationary_block_bootstrap(series: dict[str, ReturnSeries],
                               config: BootstrapConfig,
                               rng: np.random.Generator,
                               keep_indices: bool = False,
                               force_start: int | None = None) -> ReturnsPanel:
    """Jointly resample aligned monthly series into per-rebalance gross returns.

    Each month either continues the previous block (next source index, with
    circular wraparound) or, with probability 1/expected_block_size, restarts
    at a uniformly drawn index — so block lengths are geometric with the
    configured mean.  One index sequence drives every asset.
    """
    labels = tuple(series)
    n_src = {len(s) for s in series.values()}
    if len(n_src) != 1:
        raise DataError("source series have unequal lengths")
    dates0 = next(iter(series.values())).dates
    for s in series.values():
        if s.frequency != "monthly" or list(s.dates) != list(dates0):
            raise DataError("source series must be monthly and date-aligned")
    n = n_src.pop()
    n_months = config.n_months
    if n < config.months_per_rebalance:
        raise ConfigError("source shorter than one rebalance interval")

    n_paths = config.n_paths
    idx = np.empty((n_paths, n_months), dtype=np.int64)
    p_restart = 1.0 / config.expected_block_size
    if force_start is not None:
        idx[:, 0] = force_start
    else:
        idx[:, 0] = rng.integers(0, n, n_paths)
    for m in range(1, n_months):
        restart = rng.random(n_paths) < p_restart
        fresh = rng.integers(0, n, n_paths)
        idx[:, m] = np.where(restart, fresh, (idx[:, m - 1] + 1) % n)

    k = config.months_per_rebalance
    n_rb = n_months // k
    gross = np.empty((len(labels), n_paths, n_rb))
    for a, lab in enumerate(labels):
        monthly = 1.0 + series[lab].returns[idx]
        gross[a] = monthly.reshape(n_paths, n_rb, k).prod(axis=2)
    return ReturnsPanel(labels, gross,
                        source_indices=idx if keep_indices else None)


def apply_borrowing_premium(gross_return_t30, premium: float, shorted):
    """Simple-return premium on the cash leg when it is shorted."""
    return np.where(shorted, np.asarray(gross_return_t30) + premium,
                    gross_return_t30)


def synthetic_source(params: KouParams, years: int, rng: np.random.Generator,
                     start_year: int = 1926, bond_noise: float = 0.002,
                     term_premium: float = 0.015, days_per_month: int = 21):
    """Generate a synthetic aligned history so the full pipeline runs without
    proprietary data.

    Returns a dict with monthly `T30`, `B10`, `Market`, `Inflation` series and
    a daily `MarketDaily` series.  The index follows the configured market
    model; T30 is the constant short rate plus optional AR(1) noise; B10 adds
    a term premium and noise (a stand-in model, not a calibrated one);
    inflation is zero (the market parameters are already real).
    """
    n_months = years * 12
    months = []
    y, m = start_year, 1
    for _ in range(n_months):
        months.append(f"{y:04d}-{m:02d}")
        m += 1
        if m == 13:
            y, m = y + 1, 1

    # daily index returns, days_per_month trading days per calendar month
    iv = market.simulate_intervals(params, 1.0 / (12 * days_per_month),
                                   n_months * days_per_month, rng)
    daily_ret = iv.index_gross - 1.0
    daily_dates = []
    for mm in months:
        for d in range(1, days_per_month + 1):
            daily_dates.append(f"{mm}-{d:02d}")
    market_daily = ReturnSeries("daily", daily_dates, daily_ret)

    monthly_ret = (1.0 + daily_ret).reshape(n_months, days_per_month).prod(axis=1) - 1.0
    market_monthly = ReturnSeries("monthly", list(months), monthly_ret)

    base = math.expm1(params.r / 12.0)
    if bond_noise > 0:
        eps = np.empty(n_months)
        prev = 0.0
        shocks = rng.standard_normal(n_months) * bond_noise / 12.0
        for i in range(n_months):
            prev = 0.9 * prev + shocks[i]
            eps[i] = prev
        t30 = base + eps
    else:
        t30 = np.full(n_months, base)
    b10 = np.full(n_months, (params.r + term_premium) / 12.0)
    if bond_noise > 0:
        b10 = b10 + rng.standard_normal(n_months) * 0.02 / math.sqrt(12.0)
    return {
        "T30": ReturnSeries("monthly", list(months), t30),
        "B10": ReturnSeries("monthly", list(months), b10),
        "Market": market_monthly,
        "MarketDaily": market_daily,
        "Inflation": ReturnSeries("monthly", list(months),
                                  np.zeros(n_months)),
    }


def build_panel_source(source: dict[str, ReturnSeries],
                       vetf_spec: EtfSpec = market.VETF_SPEC,
                       letf_spec: EtfSpec = market.LETF_SPEC
                       ) -> dict[str, ReturnSeries]:
    """Assemble the aligned monthly panel source [T30, B10, Market, VETF,
    LETF], constructing the fund proxies from the daily index series."""
    vetf = build_proxy_etf(source["MarketDaily"], source["T30"], vetf_spec,
                           source["Inflation"])
    letf = build_proxy_etf(source["MarketDaily"], source["T30"], letf_spec,
                           source["Inflation"])
    return {
        "T30": source["T30"],
        "B10": source["B10"],
        "Market": source["Market"],
        "VETF": vetf,
        "LETF": letf,
    }


def replay_slice(series: dict[str, ReturnSeries], window: str,
                 months_per_rebalance: int = 3) -> ReturnsPanel:
    """Single-path panel of per-rebalance gross returns for a named
    contiguous historical window."""
    if window not in REPLAY_WINDOWS:
        raise ConfigError(f"unknown replay window {window!r}; "
                          f"choose from {sorted(REPLAY_WINDOWS)}")
    start, end = REPLAY_WINDOWS[window]
    dates = next(iter(series.values())).dates
    if start not in dates or end not in dates:
        raise DataError(f"window {window} not covered by source "
                        f"({dates[0]}..{dates[-1]})")
    i0, i1 = dates.index(start), dates.index(end) + 1
    labels = tuple(series)
    n_months = i1 - i0
    n_rb = n_months // months_per_rebalance
    gross = np.empty((len(labels), 1, n_rb))
    for a, lab in enumerate(labels):
        monthly = 1.0 + series[lab].returns[i0:i0 + n_rb * months_per_rebalance]
        gross[a, 0] = monthly.reshape(n_rb, months_per_rebalance).prod(axis=1)
    return ReturnsPanel(labels, gross)
