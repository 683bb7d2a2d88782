"""Requirement checks, improvement statistics and debt diagnostics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, UndefinedGainError, UnknownIndexError
from .model import DebtState, SystemConfig
from .simulator import RunRecord

__all__ = [
    "Tolerances",
    "throughput_satisfied",
    "sharing_satisfied",
    "improvement_percent",
    "improvement_by_operator",
    "lyapunov_value",
    "debt_checkpoints",
    "running_mean",
]


@dataclass(frozen=True)
class Tolerances:
    """Finite-horizon slack on the throughput and sharing-balance requirements."""

    xi1: float = 0.01
    xi2: float = 0.01

    def __post_init__(self):
        if not (self.xi1 > 0 and self.xi2 > 0):
            raise ConfigError(f"tolerances must be > 0, got xi1={self.xi1}, xi2={self.xi2}")


def _check(rec: RunRecord, cfg: SystemConfig):
    if rec.per_client_timely.shape != (cfg.n_clients,):
        raise UnknownIndexError("run record has a different client set than the configuration")
    if rec.net_sharing.shape != (cfg.n_operators, cfg.n_operators):
        raise UnknownIndexError("run record has a different operator set than the configuration")


def throughput_satisfied(rec: RunRecord, cfg: SystemConfig, tol: Tolerances) -> dict[tuple[int, int, int], bool]:
    """Per client: empirical timely throughput >= requirement - xi1."""
    _check(rec, cfg)
    ok = rec.per_client_timely >= cfg.throughput_req - tol.xi1
    return {key: bool(v) for key, v in zip(cfg.keys(), ok)}


def sharing_satisfied(rec: RunRecord, cfg: SystemConfig, tol: Tolerances) -> dict[tuple[int, int], bool]:
    """Per unordered operator pair ``(i, j)``, ``i < j``: net sharing <= bound + xi2."""
    _check(rec, cfg)
    O = cfg.n_operators
    return {
        (i, j): bool(rec.net_sharing[i, j] <= cfg.sharing_bound[i, j] + tol.xi2)
        for i in range(O)
        for j in range(i + 1, O)
    }


def improvement_percent(with_sharing: RunRecord, without_sharing: RunRecord) -> float:
    """Relative gain in total timely throughput, in percent."""
    base = without_sharing.total_timely()
    if base == 0:
        raise UndefinedGainError("baseline timely throughput is zero")
    return 100.0 * (with_sharing.total_timely() - base) / base


def improvement_by_operator(with_sharing: RunRecord, without_sharing: RunRecord, cfg: SystemConfig) -> list[float]:
    """Per-operator version of :func:`improvement_percent`; NaN for an idle operator."""
    out = []
    for i in range(cfg.n_operators):
        idx = np.r_[tuple(slice(*b) for b in cfg.bounds[i])]
        base = without_sharing.per_client_timely[idx].sum()
        gain = with_sharing.per_client_timely[idx].sum() - base
        out.append(float(100.0 * gain / base) if base > 0 else float("nan"))
    return out


def lyapunov_value(debts: DebtState) -> float:
    """Sum of squared delivery and sharing debts."""
    d, s = debts.delivery_debt, debts.sharing_debt
    return float(d @ d) + float((s * s).sum())


def debt_checkpoints(rec: RunRecord, ks, window: int = 1) -> list[float]:
    """Max delivery debt at each 1-based period in ``ks``.

    With ``window > 1`` each value is the mean of the per-period maximum over
    the ``window`` periods ending at ``k``.
    """
    m = rec.max_delivery_debt_trace
    out = []
    for k in ks:
        if not 1 <= k <= len(m):
            raise UnknownIndexError(f"period {k} outside 1..{len(m)}")
        lo = max(k - window, 0)
        out.append(float(m[lo:k].mean()))
    return out


def running_mean(trace: np.ndarray) -> np.ndarray:
    return np.cumsum(trace) / np.arange(1, len(trace) + 1)
