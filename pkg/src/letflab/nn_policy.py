"""Leverage-feasible neural-network policy for discrete rebalancing.

A small feedforward net maps (t, W, W_hat) to an allocation over cash plus
risky assets.  The output head guarantees feasibility by construction: total
long exposure L = p_max * sigmoid(raw_0), split across risky assets by a
softmax, with the cash weight 1 - L picking up any implied borrowing.  A
negative-wealth gate forces the all-debt allocation until injections restore
solvency.  Training minimizes the mean squared shortfall of terminal wealth
against benchmark-plus-target.
"""

from __future__ import annotations

import base64
import hashlib
import json
import math
from dataclasses import dataclass, asdict

import numpy as np
import torch
from torch import nn

from .bootstrap import ReturnsPanel
from .closed_form import InvestmentParams
from .errors import ConfigError, TrainingDivergedError

__all__ = [
    "NetworkConfig",
    "DiscreteScenario",
    "PolicyNet",
    "PolicyParams",
    "features",
    "leverage_feasible_output",
    "wealth_rollout",
    "loss",
    "TrainConfig",
    "train",
    "constant_mix_floor",
    "save_checkpoint",
    "load_checkpoint",
    "panel_hash",
]

torch.set_default_dtype(torch.float64)


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture and feature scaling of the policy network."""

    n_assets: int = 2
    hidden_layers: int = 2
    hidden_width: int = 8
    p_max: float = 1.0
    horizon: float = 10.0
    wealth_scale: float = 100.0

    def __post_init__(self):
        if self.hidden_layers < 1:
            raise ConfigError("need at least one hidden layer")
        if self.n_assets < 2:
            raise ConfigError("need cash plus at least one risky asset")
        if self.p_max < 1.0:
            raise ConfigError(f"p_max must be >= 1, got {self.p_max}")


@dataclass(frozen=True)
class DiscreteScenario:
    """Discrete-rebalancing investment problem on a returns panel.

    ``investor_assets`` are panel labels the policy allocates over (first is
    the cash-like asset carrying the borrowing premium); the benchmark holds
    ``benchmark_weights`` fixed.  ``dt`` is the rebalance interval in years.
    """

    invest: InvestmentParams
    investor_assets: tuple = ("T30", "LETF")
    benchmark_weights: dict = None
    dt: float = 0.25

    def __post_init__(self):
        if self.benchmark_weights is None:
            object.__setattr__(self, "benchmark_weights",
                               {"T30": 0.15, "B10": 0.15, "Market": 0.70})
        w = np.array(list(self.benchmark_weights.values()))
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ConfigError("benchmark weights must be nonnegative and sum to 1")


def features(t, W, W_hat, horizon: float, wealth_scale: float):
    """Normalized network inputs (t/T, W/w_bar, W_hat/w_bar)."""
    if torch.is_tensor(W):
        tt = torch.as_tensor(t, dtype=W.dtype).expand_as(W)
        return torch.stack([tt / horizon, W / wealth_scale,
                            W_hat / wealth_scale], dim=-1)
    W = np.asarray(W, dtype=float)
    return np.stack([np.broadcast_to(t / horizon, W.shape),
                     W / wealth_scale,
                     np.asarray(W_hat) / wealth_scale], axis=-1)


def wealth_scale_for(invest: InvestmentParams, mean_cash_return: float,
                     dt: float) -> float:
    """Feature scale w_bar = w0 compounded at the panel's mean cash rate."""
    n = int(round(invest.T / dt))
    return invest.w0 * (1.0 + mean_cash_return) ** n


def leverage_feasible_output(raw, W, p_max: float):
    """Map raw network outputs to a feasible allocation.

    Solvent: L = p_max*sigmoid(raw[...,0]) total long exposure, split over
    risky assets by softmax(raw[...,1:]), cash weight 1-L (negative when
    borrowing).  Insolvent (W < 0): the all-debt allocation e_1.  Weights sum
    to one identically in both branches.
    """
    raw_t = torch.as_tensor(raw)
    W_t = torch.as_tensor(W, dtype=raw_t.dtype)
    L = p_max * torch.sigmoid(raw_t[..., 0:1])
    longs = L * torch.softmax(raw_t[..., 1:], dim=-1)
    alloc = torch.cat([1.0 - L, longs], dim=-1)
    e1 = torch.zeros_like(alloc)
    e1[..., 0] = 1.0
    gate = (W_t < 0).detach().unsqueeze(-1)
    out = torch.where(gate, e1, alloc)
    return out if torch.is_tensor(raw) else out.numpy()


class PolicyNet(nn.Module):
    """Shallow tanh network emitting raw pre-head outputs of size n_assets."""

    def __init__(self, config: NetworkConfig):
        super().__init__()
        self.config = config
        layers = []
        width_in = 3
        for _ in range(config.hidden_layers):
            layers += [nn.Linear(width_in, config.hidden_width), nn.Tanh()]
            width_in = config.hidden_width
        layers.append(nn.Linear(width_in, config.n_assets))
        self.net = nn.Sequential(*layers)

    def forward(self, t, W, W_hat):
        x = features(t, W, W_hat, self.config.horizon, self.config.wealth_scale)
        raw = self.net(x)
        return leverage_feasible_output(raw, W, self.config.p_max)


@dataclass
class PolicyParams:
    """Flat parameter vector plus the architecture that interprets it."""

    theta: np.ndarray
    config: NetworkConfig

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if not np.all(np.isfinite(self.theta)):
            raise ConfigError("policy parameters must be finite")

    def build(self) -> PolicyNet:
        net = PolicyNet(self.config)
        vec = torch.from_numpy(self.theta.copy())
        if vec.numel() != sum(p.numel() for p in net.parameters()):
            raise ConfigError("parameter vector length does not match config")
        nn.utils.vector_to_parameters(vec, net.parameters())
        return net

    @classmethod
    def from_net(cls, net: PolicyNet) -> "PolicyParams":
        vec = nn.utils.parameters_to_vector(net.parameters())
        return cls(vec.detach().numpy().copy(), net.config)


def _panel_tensors(panel: ReturnsPanel, scenario: DiscreteScenario,
                   path_idx=None):
    """Investor-asset and benchmark per-interval gross returns as tensors."""
    sel = slice(None) if path_idx is None else path_idx
    inv = np.stack([panel.asset(a)[sel] for a in scenario.investor_assets],
                   axis=-1)
    bench = sum(w * panel.asset(a)[sel]
                for a, w in scenario.benchmark_weights.items())
    return torch.from_numpy(inv), torch.from_numpy(np.ascontiguousarray(bench))


def wealth_rollout(policy, panel: ReturnsPanel, scenario: DiscreteScenario,
                   trace: bool = False, path_idx=None):
    """Run the discrete wealth recursion for all paths under a policy.

    ``policy`` maps (t, W, W_hat) to allocation rows; at each rebalance the
    injection is added first, the insolvency gate applied, and the borrowing
    premium charged on the cash leg whenever it is shorted or wealth is
    negative.  Returns (W_T, W_hat_T) tensors, plus per-time wealth and
    allocation traces when requested.
    """
    inv_gross, bench_gross = _panel_tensors(panel, scenario, path_idx)
    n_paths, n_rb, n_assets = inv_gross.shape
    invest = scenario.invest
    if abs(n_rb * scenario.dt - invest.T) > 1e-9:
        raise ConfigError(f"panel has {n_rb} intervals of {scenario.dt}y; "
                          f"horizon is {invest.T}y")
    q = invest.q * scenario.dt  # q is an annual rate; inject per interval
    prem = invest.borrowing_premium * scenario.dt

    W = torch.full((n_paths,), invest.w0)
    W_hat = torch.full((n_paths,), invest.w0)
    W_trace = [W.detach().clone()] if trace else None
    alloc_trace = [] if trace else None

    for n in range(n_rb):
        t = n * scenario.dt
        W = W + q
        W_hat = W_hat + q
        alloc = policy(t, W, W_hat)
        needs_premium = ((alloc[:, 0] < 0) | (W < 0)).detach()
        cash_gross = inv_gross[:, n, 0] + torch.where(
            needs_premium, torch.as_tensor(prem), torch.as_tensor(0.0))
        growth = alloc[:, 0] * cash_gross + (
            alloc[:, 1:] * inv_gross[:, n, 1:]).sum(dim=-1)
        W = W * growth
        W_hat = W_hat * bench_gross[:, n]
        if trace:
            W_trace.append(W.detach().clone())
            alloc_trace.append(alloc.detach().clone())

    if trace:
        return W, W_hat, torch.stack(W_trace), torch.stack(alloc_trace)
    return W, W_hat


def loss(policy, panel: ReturnsPanel, scenario: DiscreteScenario,
         path_idx=None):
    """Mean squared gap between terminal wealth and benchmark-plus-target."""
    W, W_hat = wealth_rollout(policy, panel, scenario, path_idx=path_idx)
    resid = W - (W_hat + scenario.invest.gamma)
    return (resid * resid).mean()


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings: adaptive-moment SGD with a two-stage decay."""

    steps: int = 20_000
    batch_size: int = 1024
    lr: float = 1e-2
    decay_at: tuple = (0.6, 0.85)
    decay_factor: float = 0.1
    seed: int = 0


def train(panel: ReturnsPanel, scenario: DiscreteScenario,
          net_config: NetworkConfig, train_config: TrainConfig = TrainConfig(),
          theta0: np.ndarray | None = None):
    """Fit the policy network by minibatch gradient descent on the panel.

    Deterministic for a fixed (seed, panel, config): single-threaded CPU,
    seeded initialization and batch sampling.  Returns (PolicyParams,
    loss_history) where loss_history is an array of (step, batch loss).
    """
    if panel.n_paths == 0:
        raise ConfigError("empty training panel")
    n_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        torch.manual_seed(train_config.seed)
        net = PolicyNet(net_config)
        if theta0 is not None:
            nn.utils.vector_to_parameters(torch.from_numpy(
                np.asarray(theta0, dtype=float).copy()), net.parameters())
        opt = torch.optim.Adam(net.parameters(), lr=train_config.lr)
        milestones = [int(f * train_config.steps) for f in train_config.decay_at]
        sched = torch.optim.lr_scheduler.MultiStepLR(
            opt, milestones=milestones, gamma=train_config.decay_factor)
        batch_rng = np.random.default_rng(train_config.seed)

        def policy(t, W, W_hat):
            return net(t, W, W_hat)

        history = np.empty((train_config.steps, 2))
        for step in range(train_config.steps):
            idx = batch_rng.integers(0, panel.n_paths,
                                     min(train_config.batch_size, panel.n_paths))
            opt.zero_grad()
            batch_loss = loss(policy, panel, scenario, path_idx=idx)
            if not torch.isfinite(batch_loss):
                raise TrainingDivergedError(
                    f"non-finite loss at step {step}: {batch_loss.item()}")
            batch_loss.backward()
            opt.step()
            sched.step()
            history[step] = (step, batch_loss.item())
        return PolicyParams.from_net(net), history
    finally:
        torch.set_num_threads(n_threads)


def constant_mix_floor(panel: ReturnsPanel, scenario: DiscreteScenario,
                       p_max: float, n_grid: int = 41) -> float:
    """Best loss achievable by any constant allocation to the risky asset
    (coarse grid); used as a sanity floor for trained-policy loss."""
    best = math.inf
    for p in np.linspace(0.0, p_max, n_grid):
        def policy(t, W, W_hat, p=p):
            a = torch.zeros((W.shape[0], len(scenario.investor_assets)))
            a[:, 0] = 1.0 - p
            a[:, 1] = p
            gate = (W < 0).unsqueeze(-1)
            e1 = torch.zeros_like(a)
            e1[:, 0] = 1.0
            return torch.where(gate, e1, a)
        val = loss(policy, panel, scenario).item()
        best = min(best, val)
    return best


def panel_hash(panel: ReturnsPanel) -> str:
    h = hashlib.sha256()
    h.update(",".join(panel.assets).encode())
    h.update(np.ascontiguousarray(panel.gross).tobytes())
    return h.hexdigest()


def save_checkpoint(path: str, params: PolicyParams, seed: int,
                    panel_digest: str):
    """Versioned, byte-deterministic checkpoint (JSON with base64 weights)."""
    payload = {
        "format": "letflab-policy-v1",
        "config": asdict(params.config),
        "seed": seed,
        "panel_hash": panel_digest,
        "theta_dtype": "float64",
        "theta": base64.b64encode(
            np.ascontiguousarray(params.theta).tobytes()).decode(),
    }
    with open(path, "w") as f:
        json.dump(payload, f, indent=1, sort_keys=True)
        f.write("\n")


def load_checkpoint(path: str):
    """Returns (PolicyParams, seed, panel_hash)."""
    with open(path) as f:
        payload = json.load(f)
    if payload.get("format") != "letflab-policy-v1":
        raise ConfigError(f"{path}: not a recognized policy checkpoint")
    config = NetworkConfig(**payload["config"])
    theta = np.frombuffer(base64.b64decode(payload["theta"]), dtype=np.float64)
    return PolicyParams(theta.copy(), config), payload["seed"], payload["panel_hash"]
