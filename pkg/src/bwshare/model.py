"""Domain types for multi-operator, multi-region slot sharing.

Clients are addressed by ``(operator, region, client)`` triples of dense
0-based integers. Internally every per-client quantity is a flat array in
operator-major, then region, then client order; ``SystemConfig.index``
maps a triple to its flat position.

Slot transfers are stored as an integer array ``share[giver, receiver,
region]``. The diagonal ``share[i, i, r]`` is the operator's own use.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from numbers import Integral, Real
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigError, UnknownIndexError

__all__ = [
    "SystemConfig",
    "PeriodState",
    "DebtState",
    "Decision",
    "Violation",
    "validate_decision",
    "CONSTRAINTS",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _names(value, prefix: str) -> tuple[str, ...]:
    if isinstance(value, Integral):
        if value < 1:
            raise ConfigError(f"need at least one {prefix}, got {value}")
        return tuple(f"{prefix}{k}" for k in range(int(value)))
    names = tuple(str(v) for v in value)
    if not names:
        raise ConfigError(f"need at least one {prefix}")
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate {prefix} identifiers: {names}")
    return names


@dataclass(frozen=True, eq=False)
class SystemConfig:
    """Static description of operators, regions and clients.

    ``clients_per[i][r]`` is the number of clients operator ``i`` serves in
    region ``r``; their identifiers are ``0 .. clients_per[i][r] - 1``.

    Per-client maps (``delivery_prob``, ``throughput_req``) accept a scalar,
    a flat sequence in canonical order, a nested ``[i][r][n]`` sequence or a
    ``{(i, r, n): value}`` mapping. ``sharing_bound`` accepts a scalar, an
    ``O x O`` symmetric matrix or a ``{(i, j): value}`` mapping over
    unordered pairs. Use :meth:`build` rather than the raw constructor when
    passing any of those shorthand forms.
    """

    operators: tuple[str, ...]
    regions: tuple[str, ...]
    clients_per: tuple[tuple[int, ...], ...]
    period_length: int
    horizon: int
    delivery_prob: np.ndarray
    throughput_req: np.ndarray
    sharing_bound: np.ndarray
    sharing_cap: int | None = None
    _starts: np.ndarray = field(init=False, repr=False)
    _n_clients: int = field(init=False, repr=False)
    #: ``bounds[i][r] = (start, stop)`` flat range of operator i's clients in region r
    bounds: tuple = field(init=False, repr=False)

    def __post_init__(self):
        ops = _names(self.operators, "op")
        regs = _names(self.regions, "region")
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "regions", regs)
        O, R = len(ops), len(regs)

        cp = self.clients_per
        if isinstance(cp, Integral):
            cp = [[int(cp)] * R for _ in range(O)]
        try:
            cp = tuple(tuple(int(c) for c in row) for row in cp)
        except TypeError as exc:
            raise ConfigError(f"clients_per must be an int or an [operator][region] table: {exc}")
        if len(cp) != O or any(len(row) != R for row in cp):
            raise ConfigError(f"clients_per must have shape {O}x{R}")
        if any(c < 0 for row in cp for c in row):
            raise ConfigError("clients_per entries must be non-negative")
        object.__setattr__(self, "clients_per", cp)

        flat = np.concatenate([[0], np.cumsum(np.array(cp, dtype=np.int64).ravel())])
        object.__setattr__(self, "_starts", _frozen(flat[:-1].reshape(O, R)))
        object.__setattr__(self, "_n_clients", int(flat[-1]))
        bounds = tuple(tuple((int(flat[i * R + r]), int(flat[i * R + r + 1])) for r in range(R)) for i in range(O))
        object.__setattr__(self, "bounds", bounds)

        if not isinstance(self.period_length, Integral) or self.period_length < 1:
            raise ConfigError(f"period_length must be an integer >= 1, got {self.period_length!r}")
        if not isinstance(self.horizon, Integral) or self.horizon < 1:
            raise ConfigError(f"horizon must be an integer >= 1, got {self.horizon!r}")
        object.__setattr__(self, "period_length", int(self.period_length))
        object.__setattr__(self, "horizon", int(self.horizon))

        p = self._per_client(self.delivery_prob, "delivery_prob")
        if np.any((p < 0) | (p > 1)):
            raise ConfigError("delivery_prob values must lie in [0, 1]")
        q = self._per_client(self.throughput_req, "throughput_req")
        if np.any(q < 0):
            raise ConfigError("throughput_req values must be >= 0")
        object.__setattr__(self, "delivery_prob", _frozen(p))
        object.__setattr__(self, "throughput_req", _frozen(q))
        object.__setattr__(self, "sharing_bound", _frozen(self._pair_matrix(self.sharing_bound)))

        cap = self.sharing_cap
        if cap is not None:
            if not isinstance(cap, Integral) or cap < 0:
                raise ConfigError(f"sharing_cap must be a non-negative integer or None, got {cap!r}")
            object.__setattr__(self, "sharing_cap", int(cap))

    @classmethod
    def build(
        cls,
        operators=2,
        regions=2,
        clients_per=10,
        period_length: int = 5,
        horizon: int = 10_000,
        delivery_prob=0.99,
        throughput_req=0.0,
        sharing_bound=0.001,
        sharing_cap: int | None = None,
    ) -> "SystemConfig":
        return cls(
            operators=operators,
            regions=regions,
            clients_per=clients_per,
            period_length=period_length,
            horizon=horizon,
            delivery_prob=delivery_prob,
            throughput_req=throughput_req,
            sharing_bound=sharing_bound,
            sharing_cap=sharing_cap,
        )

    # -- shape helpers -------------------------------------------------

    @property
    def n_operators(self) -> int:
        return len(self.operators)

    @property
    def n_regions(self) -> int:
        return len(self.regions)

    @property
    def n_clients(self) -> int:
        return self._n_clients

    def client_slice(self, i: int, r: int) -> slice:
        self._check_ir(i, r)
        start = int(self._starts[i, r])
        return slice(start, start + self.clients_per[i][r])

    def index(self, i: int, r: int, n: int) -> int:
        """Flat position of client ``(i, r, n)``."""
        self._check_ir(i, r)
        if not (isinstance(n, Integral) and 0 <= n < self.clients_per[i][r]):
            raise UnknownIndexError(f"client {n!r} does not exist in operator {i}, region {r}")
        return int(self._starts[i, r]) + int(n)

    def keys(self) -> list[tuple[int, int, int]]:
        """All ``(i, r, n)`` triples in flat order."""
        return [
            (i, r, n)
            for i in range(self.n_operators)
            for r in range(self.n_regions)
            for n in range(self.clients_per[i][r])
        ]

    def groups(self) -> list[list[slice]]:
        """``groups()[i][r]`` is the flat slice of operator i's clients in region r."""
        return [[slice(*b) for b in row] for row in self.bounds]

    def _check_ir(self, i, r):
        if not (isinstance(i, Integral) and 0 <= i < self.n_operators):
            raise UnknownIndexError(f"unknown operator {i!r}")
        if not (isinstance(r, Integral) and 0 <= r < self.n_regions):
            raise UnknownIndexError(f"unknown region {r!r}")

    def _per_client(self, value, name: str) -> np.ndarray:
        N = self.n_clients
        if isinstance(value, Real):
            return np.full(N, float(value))
        if isinstance(value, Mapping):
            out = np.full(N, np.nan)
            for key, v in value.items():
                out[self.index(*key)] = float(v)
            if np.isnan(out).any():
                raise ConfigError(f"{name}: mapping does not cover every client")
            return out
        arr = np.asarray(value, dtype=object)
        if arr.ndim == 1 and len(arr) == N and all(isinstance(v, Real) for v in arr):
            return np.asarray(value, dtype=float).copy()
        try:
            out = np.empty(N)
            for i in range(self.n_operators):
                if len(value[i]) != self.n_regions:
                    raise ConfigError(f"{name}: operator {i} needs {self.n_regions} regions")
                for r in range(self.n_regions):
                    row = value[i][r]
                    sl = self.client_slice(i, r)
                    if isinstance(row, Real):
                        out[sl] = float(row)
                    else:
                        row = np.asarray(row, dtype=float)
                        if row.shape != (sl.stop - sl.start,):
                            raise ConfigError(f"{name}[{i}][{r}] has the wrong number of clients")
                        out[sl] = row
        except (TypeError, IndexError) as exc:
            raise ConfigError(f"{name}: cannot interpret {value!r} as a per-client map ({exc})")
        return out

    def _pair_matrix(self, value) -> np.ndarray:
        O = self.n_operators
        if isinstance(value, Real):
            m = np.full((O, O), float(value))
        elif isinstance(value, Mapping):
            m = np.full((O, O), np.nan)
            for (i, j), v in value.items():
                self._check_ir(i, 0)
                self._check_ir(j, 0)
                for a, b in ((i, j), (j, i)):
                    if not np.isnan(m[a, b]) and m[a, b] != float(v):
                        raise ConfigError(f"sharing_bound given twice for pair {{{i},{j}}} with different values")
                    m[a, b] = float(v)
            np.fill_diagonal(m, 0.0)
            if np.isnan(m).any():
                raise ConfigError("sharing_bound mapping does not cover every operator pair")
        else:
            m = np.array(value, dtype=float)
            if m.shape != (O, O):
                raise ConfigError(f"sharing_bound must be a scalar or a {O}x{O} matrix")
            if not np.array_equal(m, m.T):
                raise ConfigError("sharing_bound must be symmetric")
        np.fill_diagonal(m, 0.0)
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise ConfigError("sharing_bound values must be finite and >= 0")
        return m

    def replace(self, **changes) -> "SystemConfig":
        fields = dict(
            operators=self.operators,
            regions=self.regions,
            clients_per=self.clients_per,
            period_length=self.period_length,
            horizon=self.horizon,
            delivery_prob=self.delivery_prob,
            throughput_req=self.throughput_req,
            sharing_bound=self.sharing_bound,
            sharing_cap=self.sharing_cap,
        )
        fields.update(changes)
        return SystemConfig(**fields)

    def to_dict(self) -> dict:
        """Plain-Python snapshot, nested ``[i][r][n]`` for per-client maps."""

        def nested(arr):
            return [[arr[self.client_slice(i, r)].tolist() for r in range(self.n_regions)] for i in range(self.n_operators)]

        return {
            "operators": list(self.operators),
            "regions": list(self.regions),
            "clients_per": [list(row) for row in self.clients_per],
            "period_length": self.period_length,
            "horizon": self.horizon,
            "delivery_prob": nested(self.delivery_prob),
            "throughput_req": nested(self.throughput_req),
            "sharing_bound": self.sharing_bound.tolist(),
            "sharing_cap": self.sharing_cap,
        }


@dataclass(frozen=True, eq=False)
class PeriodState:
    """Arrivals and pre-sampled delivery outcomes for one period."""

    arrivals: np.ndarray
    region_arrivals: np.ndarray
    delivery_flip: np.ndarray

    @classmethod
    def build(cls, cfg: SystemConfig, arrivals, delivery_flip=None) -> "PeriodState":
        """Assemble a state, deriving per-(operator, region) arrival counts.

        ``arrivals`` and ``delivery_flip`` take the same forms as the
        per-client maps of :class:`SystemConfig`. Missing flips default to 1.
        """
        a = _indicator(cfg, arrivals, "arrivals")
        f = np.ones(cfg.n_clients, dtype=np.int8) if delivery_flip is None else _indicator(cfg, delivery_flip, "delivery_flip")
        return cls(_frozen(a), _frozen(region_counts(cfg, a)), _frozen(f))

    def check(self, cfg: SystemConfig) -> None:
        N = cfg.n_clients
        if self.arrivals.shape != (N,) or self.delivery_flip.shape != (N,):
            raise UnknownIndexError(f"state does not match a configuration with {N} clients")
        if self.region_arrivals.shape != (cfg.n_operators, cfg.n_regions):
            raise UnknownIndexError("region_arrivals shape does not match the configuration")


def region_counts(cfg: SystemConfig, arrivals: np.ndarray) -> np.ndarray:
    out = np.zeros((cfg.n_operators, cfg.n_regions), dtype=np.int64)
    for i, row in enumerate(cfg.groups()):
        for r, sl in enumerate(row):
            out[i, r] = int(arrivals[sl].sum())
    return out


def _indicator(cfg: SystemConfig, value, name: str) -> np.ndarray:
    if isinstance(value, Mapping):
        out = np.zeros(cfg.n_clients, dtype=np.int8)
        for key, v in value.items():
            out[cfg.index(*key)] = int(v)
    else:
        out = cfg._per_client(value, name).astype(np.int8)
    if not np.isin(out, (0, 1)).all():
        raise ConfigError(f"{name} entries must be 0 or 1")
    return out


@dataclass(frozen=True, eq=False)
class DebtState:
    """Per-client delivery debts and per-ordered-pair sharing debts.

    ``sharing_debt[i, j]`` is what operator ``i`` owes operator ``j``; the
    diagonal is unused and kept at zero.
    """

    delivery_debt: np.ndarray
    sharing_debt: np.ndarray

    @classmethod
    def zeros(cls, cfg: SystemConfig) -> "DebtState":
        return cls(
            _frozen(np.zeros(cfg.n_clients)),
            _frozen(np.zeros((cfg.n_operators, cfg.n_operators))),
        )

    @classmethod
    def build(cls, cfg: SystemConfig, delivery_debt=0.0, sharing_debt=0.0) -> "DebtState":
        d = cfg._per_client(delivery_debt, "delivery_debt")
        O = cfg.n_operators
        if isinstance(sharing_debt, Real):
            s = np.full((O, O), float(sharing_debt))
        elif isinstance(sharing_debt, Mapping):
            s = np.zeros((O, O))
            for (i, j), v in sharing_debt.items():
                cfg._check_ir(i, 0)
                cfg._check_ir(j, 0)
                if i == j:
                    raise UnknownIndexError("sharing debt is defined only for distinct operators")
                s[i, j] = float(v)
        else:
            s = np.array(sharing_debt, dtype=float)
            if s.shape != (O, O):
                raise ConfigError(f"sharing_debt must be {O}x{O}")
        np.fill_diagonal(s, 0.0)
        if np.any(d < 0) or np.any(s < 0):
            raise ConfigError("debts must be non-negative")
        return cls(_frozen(d), _frozen(s))

    def check(self, cfg: SystemConfig) -> None:
        if self.delivery_debt.shape != (cfg.n_clients,):
            raise UnknownIndexError("delivery_debt does not match the configuration")
        if self.sharing_debt.shape != (cfg.n_operators, cfg.n_operators):
            raise UnknownIndexError("sharing_debt does not match the configuration")


@dataclass(frozen=True, eq=False)
class Decision:
    """Scheduling indicators and slot allocation for one period."""

    schedule: np.ndarray
    share: np.ndarray

    @classmethod
    def empty(cls, cfg: SystemConfig) -> "Decision":
        return cls(
            _frozen(np.zeros(cfg.n_clients, dtype=np.int64)),
            _frozen(np.zeros((cfg.n_operators, cfg.n_operators, cfg.n_regions), dtype=np.int64)),
        )

    @classmethod
    def from_maps(
        cls,
        cfg: SystemConfig,
        schedule: Mapping[tuple[int, int, int], int] | Iterable[tuple[int, int, int]] = (),
        share: Mapping[tuple[int, int, int], int] | None = None,
    ) -> "Decision":
        """Build from sparse maps: ``schedule`` keyed ``(i, r, n)`` (or an
        iterable of scheduled triples), ``share`` keyed ``(giver, receiver, r)``.
        """
        b = np.zeros(cfg.n_clients, dtype=np.int64)
        items = schedule.items() if isinstance(schedule, Mapping) else ((k, 1) for k in schedule)
        for key, v in items:
            b[cfg.index(*key)] = int(v)
        s = np.zeros((cfg.n_operators, cfg.n_operators, cfg.n_regions), dtype=np.int64)
        for (j, i, r), v in (share or {}).items():
            cfg._check_ir(j, r)
            cfg._check_ir(i, r)
            s[j, i, r] = int(v)
        return cls(_frozen(b), _frozen(s))

    def cross_shared(self) -> int:
        """Total slots moved between distinct operators, over all regions."""
        total = int(self.share.sum())
        own = int(np.trace(self.share, axis1=0, axis2=1).sum())
        return total - own


@dataclass(frozen=True)
class Violation:
    """One violated constraint. ``constraint`` is one of :data:`CONSTRAINTS`."""

    constraint: str
    index: tuple
    detail: str


CONSTRAINTS = {
    "schedule_binary": "scheduling indicators are 0 or 1",
    "schedule_arrival": "only clients with an arrival may be scheduled",
    "schedule_capacity": "scheduled clients <= own plus received slots",
    "nonnegative": "slot counts are non-negative",
    "slot_budget": "own use plus slots given <= T",
    "own_use": "own use <= arrivals",
    "give_limit": "slots given <= max(T - arrivals, 0)",
    "receive_limit": "slots received <= max(arrivals - T, 0)",
    "sharing_cap": "slots given and received <= sharing cap",
}


def validate_decision(cfg: SystemConfig, state: PeriodState, d: Decision) -> list[Violation]:
    """Check every per-period constraint; return one :class:`Violation` each.

    An empty list means the decision is feasible. Shape mismatches against
    ``cfg`` raise :class:`UnknownIndexError` instead.
    """
    O, R, N, T = cfg.n_operators, cfg.n_regions, cfg.n_clients, cfg.period_length
    state.check(cfg)
    b = np.asarray(d.schedule)
    S = np.asarray(d.share)
    if b.shape != (N,):
        raise UnknownIndexError(f"schedule has shape {b.shape}, configuration has {N} clients")
    if S.shape != (O, O, R):
        raise UnknownIndexError(f"share has shape {S.shape}, expected {(O, O, R)}")

    out: list[Violation] = []
    keys = cfg.keys()
    for pos in np.flatnonzero((b != 0) & (b != 1)):
        out.append(Violation("schedule_binary", keys[pos], f"b={b[pos]}"))
    for pos in np.flatnonzero(b > state.arrivals):
        out.append(Violation("schedule_arrival", keys[pos], f"b={b[pos]} > A={state.arrivals[pos]}"))
    for j, i, r in zip(*np.nonzero(S < 0)):
        out.append(Violation("nonnegative", (int(j), int(i), int(r)), f"S={S[j, i, r]}"))

    A = state.region_arrivals
    L = cfg.sharing_cap
    groups = cfg.groups()
    for r in range(R):
        for i in range(O):
            a = int(A[i, r])
            got = int(S[:, i, r].sum())
            scheduled = int(b[groups[i][r]].sum())
            if scheduled > got:
                out.append(Violation("schedule_capacity", (i, r), f"scheduled {scheduled} > available {got}"))
            used = int(S[i, :, r].sum())
            if used > T:
                out.append(Violation("slot_budget", (i, r), f"own use + given = {used} > T={T}"))
            if S[i, i, r] > a:
                out.append(Violation("own_use", (i, r), f"own use {S[i, i, r]} > arrivals {a}"))
            given = used - int(S[i, i, r])
            if given > max(T - a, 0):
                out.append(Violation("give_limit", (i, r), f"given {given} > max(T - A, 0) = {max(T - a, 0)}"))
            received = got - int(S[i, i, r])
            if received > max(a - T, 0):
                out.append(Violation("receive_limit", (i, r), f"received {received} > max(A - T, 0) = {max(a - T, 0)}"))
            if L is not None:
                if given > L:
                    out.append(Violation("sharing_cap", (i, r), f"given {given} > cap {L}"))
                if received > L:
                    out.append(Violation("sharing_cap", (i, r), f"received {received} > cap {L}"))
    return out
