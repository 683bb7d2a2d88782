"""Closed-loop simulation: arrivals, policy decision, deliveries, debt updates."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .arrivals import DELIVERY_STREAM, ArrivalModel, client_stream, make_sampler
from .errors import ConfigError
from .model import DebtState, Decision, PeriodState, SystemConfig
from .policy import solve_period, solve_period_no_sharing, update_debts

__all__ = ["RunConfig", "RunRecord", "run", "POLICIES", "sample_delivery_flips", "write_trace"]

POLICIES: dict[str, Callable[[SystemConfig, PeriodState, DebtState], Decision]] = {
    "sharing": solve_period,
    "no_sharing": solve_period_no_sharing,
}


@dataclass(frozen=True)
class RunConfig:
    system: SystemConfig
    arrivals: Mapping[tuple[int, int], ArrivalModel]
    policy: str = "sharing"
    seed: int = 0
    trace: bool = False

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ConfigError(f"unknown policy {self.policy!r}; expected one of {sorted(POLICIES)}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


@dataclass(eq=False)
class RunRecord:
    """Aggregates of one run over ``K`` periods.

    ``net_sharing[i, j]`` is ``|slots i received from j - slots i gave j| / K``
    summed over regions. The ``*_trace`` arrays hold one value per period,
    taken after that period's debt update.
    """

    per_client_timely: np.ndarray
    net_sharing: np.ndarray
    avg_shared_per_period: float
    max_delivery_debt_trace: np.ndarray
    max_sharing_debt_trace: np.ndarray
    lyapunov_trace: np.ndarray
    final_debts: DebtState
    periods: int
    trace: dict | None = field(default=None, repr=False)

    def total_timely(self) -> float:
        return float(self.per_client_timely.sum())

    def debt_at(self, k: int) -> float:
        """Max delivery debt after period ``k`` (1-based)."""
        return float(self.max_delivery_debt_trace[k - 1])


def sample_delivery_flips(cfg: SystemConfig, seed: int, periods: int) -> np.ndarray:
    """``periods x N`` channel outcomes, one independent stream per client."""
    out = np.empty((periods, cfg.n_clients), dtype=np.int8)
    P = cfg.delivery_prob
    for i, r, n in cfg.keys():
        k = cfg.index(i, r, n)
        out[:, k] = client_stream(seed, DELIVERY_STREAM, i, r, n).random(periods) < P[k]
    return out


def _region_counts_block(cfg: SystemConfig, arrivals: np.ndarray) -> np.ndarray:
    K = arrivals.shape[0]
    out = np.zeros((K, cfg.n_operators, cfg.n_regions), dtype=np.int64)
    for i, row in enumerate(cfg.groups()):
        for r, sl in enumerate(row):
            out[:, i, r] = arrivals[:, sl].sum(axis=1)
    return out


def run(rc: RunConfig) -> RunRecord:
    """Simulate ``rc.system.horizon`` periods.

    Arrivals and channel outcomes are drawn up front from streams keyed by
    client, so runs with the same seed but different policies face the same
    traffic and the same channel. The policy never sees the outcomes.
    """
    cfg = rc.system
    K, N, O = cfg.horizon, cfg.n_clients, cfg.n_operators
    decide = POLICIES[rc.policy]

    arrivals = make_sampler(cfg, rc.arrivals, rc.seed).sample(K)
    counts = _region_counts_block(cfg, arrivals)
    flips = sample_delivery_flips(cfg, rc.seed, K)

    debts = DebtState.zeros(cfg)
    scheduled = np.empty((K, N), dtype=np.int8)
    delta = np.empty((K, N))
    moved = np.empty((K, O, O), dtype=np.int64)
    sigma = np.empty((K, O, O))
    for k in range(K):
        state = PeriodState(arrivals[k], counts[k], flips[k])
        d = decide(cfg, state, debts)
        debts = update_debts(cfg, debts, d, state)
        scheduled[k] = d.schedule
        moved[k] = d.share.sum(axis=2)
        delta[k] = debts.delivery_debt
        sigma[k] = debts.sharing_debt

    delivered = scheduled * flips
    moved_sum = moved.sum(axis=0)  # [giver, receiver]
    cross_total = int(moved_sum.sum() - np.trace(moved_sum))
    lyap = np.einsum("kn,kn->k", delta, delta) + np.einsum("kij,kij->k", sigma, sigma)
    trace = None
    if rc.trace:
        trace = {
            "arrived": arrivals,
            "scheduled": scheduled,
            "delivered": delivered,
            "delta": delta,
            "moved": moved,
            "sigma": sigma,
        }
    return RunRecord(
        per_client_timely=delivered.sum(axis=0) / K,
        net_sharing=np.abs(moved_sum.T - moved_sum) / K,
        avg_shared_per_period=cross_total / K,
        max_delivery_debt_trace=delta.max(axis=1) if N else np.zeros(K),
        max_sharing_debt_trace=sigma.reshape(K, -1).max(axis=1),
        lyapunov_trace=lyap,
        final_debts=debts,
        periods=K,
        trace=trace,
    )


def write_trace(rec: RunRecord, cfg: SystemConfig, client_path, pair_path) -> None:
    """Per-period CSV traces; the run must have been made with ``trace=True``."""
    if rec.trace is None:
        raise ConfigError("run was not traced; set RunConfig.trace=True")
    t = rec.trace
    keys = cfg.keys()
    with open(client_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "operator", "region", "client", "arrived", "scheduled", "delivered", "delta"])
        for k in range(rec.periods):
            for pos, (i, r, n) in enumerate(keys):
                w.writerow([k + 1, i, r, n, int(t["arrived"][k, pos]), int(t["scheduled"][k, pos]),
                            int(t["delivered"][k, pos]), repr(float(t["delta"][k, pos]))])
    O = cfg.n_operators
    with open(pair_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "i", "j", "sigma", "net_shared"])
        for k in range(rec.periods):
            m = t["moved"][k]
            for i in range(O):
                for j in range(O):
                    if i != j:
                        # slots i received from j minus slots i gave to j this period
                        w.writerow([k + 1, i, j, repr(float(t["sigma"][k, i, j])), int(m[j, i] - m[i, j])])
