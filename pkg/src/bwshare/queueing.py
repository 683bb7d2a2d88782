"""Deadline-success probability of an M/M/1 queue with impatient customers.

Customers abandon once they have waited a deterministic time ``deadline``.
Pooling two identical queues doubles both the arrival and service rate,
so the pooled queue has service rate ``2 * mu`` at the same intensity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, UndefinedGainError

__all__ = ["QueueParams", "p_succ", "g_pool", "RHO_ONE_BAND", "MIN_EXPONENT"]

#: |rho - 1| below which the analytic limit is returned.
RHO_ONE_BAND = 1e-9
#: Exponents below this are clamped; exp() has long since saturated at 0.
MIN_EXPONENT = -700.0


@dataclass(frozen=True)
class QueueParams:
    mu: float
    rho: float
    deadline: float

    def __post_init__(self):
        for name in ("mu", "rho", "deadline"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise DomainError(f"{name} must be a finite real, got {v!r}")
        if self.mu <= 0:
            raise DomainError(f"mu must be > 0, got {self.mu}")
        if self.deadline <= 0:
            raise DomainError(f"deadline must be > 0, got {self.deadline}")
        if self.rho < 0:
            raise DomainError(f"rho must be >= 0, got {self.rho}")


def p_succ(p: QueueParams) -> float:
    """Probability that a customer starts service before its deadline.

    ``(1 - e^x) / (1 - rho e^x)`` with ``x = mu D (rho - 1)``, and the
    limit ``mu D / (1 + mu D)`` at ``rho = 1``.
    """
    mu, rho, D = p.mu, p.rho, p.deadline
    md = mu * D
    if abs(rho - 1.0) < RHO_ONE_BAND:
        return md / (1.0 + md)
    x = md * (rho - 1.0)
    if x > 0:
        # divide through by e^x so large loads do not overflow
        y = math.exp(-x)
        val = (1.0 - y) / (rho - y)
    else:
        x = max(x, MIN_EXPONENT)
        num = -math.expm1(x)
        val = num / (num - (rho - 1.0) * math.exp(x))
    return min(max(val, 0.0), 1.0)


def g_pool(p: QueueParams) -> float:
    """Fractional gain in deadline success from pooling two identical queues."""
    base = p_succ(p)
    if base == 0.0:
        raise UndefinedGainError(f"success probability is zero for {p}")
    pooled = p_succ(QueueParams(2.0 * p.mu, p.rho, p.deadline))
    return (pooled - base) / base
