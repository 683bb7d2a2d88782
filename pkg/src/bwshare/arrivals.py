"""Per-client packet arrival processes.

Each client's arrival indicator is a stationary two-state Markov chain on
{0, 1}. The i.i.d. Bernoulli process is the memoryless special case.

Streams are derived from the master seed with
``numpy.random.SeedSequence(seed, spawn_key=(ARRIVAL_STREAM, i, r, n))``,
so a client's sequence depends only on the seed and its own identifier,
never on how many other clients exist.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ConfigError
from .model import SystemConfig, region_counts

__all__ = ["ArrivalModel", "ArrivalSampler", "make_sampler", "client_stream", "ARRIVAL_STREAM", "DELIVERY_STREAM"]

ARRIVAL_STREAM = 0
DELIVERY_STREAM = 1

KINDS = ("bernoulli", "two_state_markov")


def client_stream(seed: int, stream: int, i: int, r: int, n: int) -> np.random.Generator:
    """Independent generator for one client and one purpose."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(stream, i, r, n))))


@dataclass(frozen=True)
class ArrivalModel:
    """Arrival law shared by every client of one (operator, region).

    ``persistence`` sets the chain's memory: the lag-1 autocorrelation of
    the arrival sequence is ``2 * persistence - 1``. With ``rate = 0.5``
    that is exactly the probability of staying in the current state.
    """

    kind: str = "bernoulli"
    rate: float = 0.0
    persistence: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown arrival kind {self.kind!r}; expected one of {KINDS}")
        if not 0.0 <= self.rate <= 1.0:
            raise ConfigError(f"arrival rate must lie in [0, 1], got {self.rate}")
        if self.kind == "two_state_markov":
            p = self.persistence
            if p is None or not 0.0 <= p < 1.0:
                raise ConfigError(f"two_state_markov needs persistence in [0, 1), got {p}")
            up, stay = self.transition()
            if not (0.0 <= up <= 1.0 and 0.0 <= stay <= 1.0):
                raise ConfigError(
                    f"persistence {p} is not reachable at rate {self.rate}: "
                    f"P(1|0)={up:.4g}, P(1|1)={stay:.4g}"
                )
        elif self.persistence is not None:
            raise ConfigError("persistence applies only to two_state_markov")

    def transition(self) -> tuple[float, float]:
        """``(P(arrive | none last period), P(arrive | arrival last period))``."""
        a = self.rate
        if self.kind == "bernoulli":
            return a, a
        lag1 = 2.0 * self.persistence - 1.0
        return a * (1.0 - lag1), a + lag1 * (1.0 - a)


class ArrivalSampler:
    """Stateful sampler producing one period of arrivals per call.

    Uniform draws are buffered per client in blocks; the emitted sequence
    does not depend on the block size.
    """

    def __init__(self, cfg: SystemConfig, models: Mapping[tuple[int, int], ArrivalModel], seed: int, block: int = 4096):
        self.cfg = cfg
        self.seed = int(seed)
        self.block = int(block)
        N = cfg.n_clients
        self._p_up = np.empty(N)
        self._p_stay = np.empty(N)
        self._streams = []
        for i, r, n in cfg.keys():
            up, stay = models[i, r].transition()
            k = cfg.index(i, r, n)
            self._p_up[k], self._p_stay[k] = up, stay
            self._streams.append(client_stream(self.seed, ARRIVAL_STREAM, i, r, n))
        self._buf = np.empty((N, 0))
        self._pos = 0
        # first draw uses the stationary law, P(1) = rate
        self._prob = np.array([models[i, r].rate for i, r, _ in cfg.keys()], dtype=float)
        self.periods = 0

    def _refill(self):
        self._buf = np.stack([g.random(self.block) for g in self._streams]) if self._streams else np.empty((0, self.block))
        self._pos = 0

    def next_period(self) -> tuple[np.ndarray, np.ndarray]:
        """Advance every chain one step: ``(arrivals, region_arrivals)``."""
        if self._pos >= self._buf.shape[1]:
            self._refill()
        u = self._buf[:, self._pos]
        self._pos += 1
        a = (u < self._prob).astype(np.int8)
        self._prob = np.where(a == 1, self._p_stay, self._p_up)
        self.periods += 1
        return a, region_counts(self.cfg, a)

    def sample(self, periods: int) -> np.ndarray:
        """``periods x N`` block of arrival indicators, advancing the chains."""
        out = np.empty((periods, self.cfg.n_clients), dtype=np.int8)
        for k in range(periods):
            if self._pos >= self._buf.shape[1]:
                self._refill()
            a = self._buf[:, self._pos] < self._prob
            self._pos += 1
            out[k] = a
            self._prob = np.where(a, self._p_stay, self._p_up)
        self.periods += periods
        return out


def make_sampler(cfg: SystemConfig, models: Mapping[tuple[int, int], ArrivalModel], seed: int) -> ArrivalSampler:
    """Sampler for every client of ``cfg``; one model per (operator, region)."""
    missing = [(i, r) for i in range(cfg.n_operators) for r in range(cfg.n_regions) if (i, r) not in models]
    if missing:
        raise ConfigError(f"no arrival model for (operator, region) {missing}")
    return ArrivalSampler(cfg, models, seed)
