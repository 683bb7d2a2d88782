"""Debt-weighted sharing and scheduling policy.

Each period the policy minimises

    f(b, S) = - sum_n delta_n * P_n * b_n
              + sum_{i != j} sigma[i, j] * (sum_r S[j, i, r] - sum_r S[i, j, r])

over integer decisions satisfying the per-period slot constraints, then
updates the delivery debts ``delta`` with the realized deliveries and the
sharing debts ``sigma`` with the net slots exchanged.

Collecting the coefficient of one slot moved from giver ``j`` to receiver
``i`` gives ``sigma[i, j] - sigma[j, i]``; own use carries no cost. The
problem therefore separates by region. Within a region an operator with
``A <= T`` arrivals serves all of them on its own slots and may give away
``T - A``; one with ``A > T`` serves its best ``T`` and may receive up to
``A - T`` more, each extra slot worth the next client's ``delta * P``.
What remains is a small transportation problem with concave receiver
values, solved exactly by successive shortest paths (a plain greedy when
the region has a single giver and a single receiver).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import DebtState, Decision, PeriodState, SystemConfig

__all__ = [
    "ObjectiveWeights",
    "objective_weights",
    "objective",
    "solve_period",
    "solve_period_no_sharing",
    "update_debts",
]

# relative band inside which a float sign test is re-done in exact arithmetic
_EXACT_BAND = 1e-9


@dataclass(frozen=True, eq=False)
class ObjectiveWeights:
    """``client_weight[n] = delta_n * P_n``; ``transfer_cost[j, i]`` is the
    objective change for one slot given by ``j`` to ``i``."""

    client_weight: np.ndarray
    transfer_cost: np.ndarray


def objective_weights(cfg: SystemConfig, debts: DebtState) -> ObjectiveWeights:
    sigma = debts.sharing_debt
    cost = sigma.T - sigma  # cost[j, i] = sigma[i, j] - sigma[j, i]
    return ObjectiveWeights(debts.delivery_debt * cfg.delivery_prob, cost)


def objective(cfg: SystemConfig, debts: DebtState, d: Decision, exact: bool = False):
    """Value of f for decision ``d``; with ``exact`` a :class:`Fraction`.

    Evaluated term by term from the definition, independent of the solver.
    """
    O = cfg.n_operators
    delta, P, sigma = debts.delivery_debt, cfg.delivery_prob, debts.sharing_debt
    num = Fraction if exact else float
    total = num(0)
    for k in np.flatnonzero(d.schedule):
        total -= num(float(delta[k])) * num(float(P[k])) * int(d.schedule[k])
    moved = d.share.sum(axis=2)  # moved[j, i] = sum_r S[j, i, r]
    for i in range(O):
        for j in range(O):
            if i != j and sigma[i, j] != 0:
                total += num(float(sigma[i, j])) * (int(moved[j, i]) - int(moved[i, j]))
    return total


def _is_positive(approx: float, scale: float, exact) -> bool:
    """Sign of a quantity computed in floats, re-checked exactly near zero.

    ``exact`` is a zero-argument callable returning the exact value.
    """
    if abs(approx) > _EXACT_BAND * max(scale, 1.0):
        return approx > 0
    return exact() > 0


class _Region:
    """One region's subproblem, with lists prepared for fast access."""

    def __init__(self, T, cap, ranked, weights, cost, exact_weight, exact_cost):
        self.T = T
        self.cap = cap
        self.ranked = ranked  # ranked[i]: arrived flat positions, best first
        self.weights = weights  # weights[i]: parallel client weights
        self.cost = cost  # cost[j][i]
        self.exact_weight = exact_weight
        self.exact_cost = exact_cost

    def solve(self, sharing: bool = True):
        """``(n_served, transfers)``; ``transfers`` maps (giver, receiver) -> slots."""
        T, cap = self.T, self.cap
        O = len(self.ranked)
        arrivals = [len(c) for c in self.ranked]
        served = [min(a, T) for a in arrivals]
        transfers: dict[tuple[int, int], int] = {}
        if not sharing or cap == 0:
            return served, transfers
        spare = {}
        need = {}
        for i, a in enumerate(arrivals):
            if a < T:
                spare[i] = T - a if cap is None else min(T - a, cap)
            elif a > T:
                need[i] = a - T if cap is None else min(a - T, cap)
        if not spare or not need:
            return served, transfers
        if len(spare) == 1 and len(need) == 1:
            (j, s), (i, m) = next(iter(spare.items())), next(iter(need.items()))
            x = self._greedy_pair(j, i, min(s, m))
            if x:
                transfers[j, i] = x
                served[i] += x
            return served, transfers
        return self._ssp(spare, need, served, transfers, O)

    def _greedy_pair(self, j: int, i: int, limit: int) -> int:
        # receiver values are non-increasing, so stop at the first slot that
        # does not strictly pay for its transfer cost
        c = self.cost[j][i]
        ws = self.weights[i]
        x = 0
        while x < limit:
            w = ws[self.T + x]
            if not _is_positive(
                w - c,
                abs(w) + abs(c),
                lambda: self.exact_weight(self.ranked[i][self.T + x]) - self.exact_cost(j, i),
            ):
                break
            x += 1
        return x

    def _ssp(self, spare, need, served, transfers, O):
        # Residual graph: source -> giver j while it has spare slots (cost 0);
        # giver j -> receiver i at cost[j][i]; receiver i -> giver j at
        # -cost[j][i] while transfers[j, i] > 0. Reaching receiver i and
        # serving its next client is worth that client's weight. Starting
        # from zero flow with no negative cycles, augmenting one slot along
        # the best path until no path has positive value is exact.
        # Runs in exact arithmetic: float round-off can fake negative cycles.
        used = dict.fromkeys(spare, 0)
        got = dict.fromkeys(need, 0)
        givers, receivers = sorted(spare), sorted(need)
        cost = {(j, i): self.exact_cost(j, i) for j in givers for i in receivers}
        value = {i: [self.exact_weight(k) for k in self.ranked[i][self.T:]] for i in receivers}
        inf = math.inf
        while True:
            dist_g = {j: (Fraction(0) if used[j] < spare[j] else inf) for j in givers}
            dist_r = dict.fromkeys(receivers, inf)
            pred_g = dict.fromkeys(givers)
            pred_r = dict.fromkeys(receivers)
            for _ in range(len(givers) + len(receivers)):
                changed = False
                for j in givers:
                    dj = dist_g[j]
                    if dj == inf:
                        continue
                    for i in receivers:
                        nd = dj + cost[j, i]
                        if nd < dist_r[i]:
                            dist_r[i], pred_r[i], changed = nd, j, True
                for i in receivers:
                    di = dist_r[i]
                    if di == inf:
                        continue
                    for j in givers:
                        if transfers.get((j, i), 0) > 0:
                            nd = di - cost[j, i]
                            if nd < dist_g[j]:
                                dist_g[j], pred_g[j], changed = nd, i, True
                if not changed:
                    break
            best, best_i = 0, None
            for i in receivers:
                if dist_r[i] == inf or got[i] >= need[i]:
                    continue
                gain = value[i][got[i]] - dist_r[i]
                if gain > best:
                    best, best_i = gain, i
            if best_i is None:
                break
            path = self._trace(best_i, pred_r, pred_g, len(givers))
            for j, i, sign in path:
                x = transfers.get((j, i), 0) + sign
                if x:
                    transfers[j, i] = x
                else:
                    del transfers[j, i]
            used[path[0][0]] += 1
            got[best_i] += 1
            served[best_i] += 1
        return served, transfers

    @staticmethod
    def _trace(end, pred_r, pred_g, n_givers):
        # arcs (giver, receiver, +1 forward / -1 reverse), source side first
        arcs = []
        i = end
        for _ in range(n_givers):
            j = pred_r[i]
            arcs.append((j, i, +1))
            i = pred_g[j]
            if i is None:
                break
            arcs.append((j, i, -1))
        else:
            raise RuntimeError("augmenting path did not reach the source")
        arcs.reverse()
        return arcs


def _regions(cfg: SystemConfig, state: PeriodState, debts: DebtState):
    state.check(cfg)
    debts.check(cfg)
    delta, P, sigma = debts.delivery_debt, cfg.delivery_prob, debts.sharing_debt
    w = (delta * P).tolist()
    a = state.arrivals.tolist()
    cost = (sigma.T - sigma).tolist()

    def exact_weight(k):
        return Fraction(float(delta[k])) * Fraction(float(P[k]))

    def exact_cost(j, i):
        return Fraction(float(sigma[i, j])) - Fraction(float(sigma[j, i]))

    T, cap = cfg.period_length, cfg.sharing_cap
    by_region = list(zip(*cfg.bounds))
    for r, spans in enumerate(by_region):
        ranked, weights = [], []
        for start, stop in spans:
            arrived = [k for k in range(start, stop) if a[k]]
            arrived.sort(key=lambda k: (-w[k], k))
            ranked.append(arrived)
            weights.append([w[k] for k in arrived])
        yield r, _Region(T, cap, ranked, weights, cost, exact_weight, exact_cost)


def _decide(cfg: SystemConfig, state: PeriodState, debts: DebtState, sharing: bool) -> Decision:
    O, R, T = cfg.n_operators, cfg.n_regions, cfg.period_length
    b = [0] * cfg.n_clients
    S = np.zeros((O, O, R), dtype=np.int64)
    for r, region in _regions(cfg, state, debts):
        served, transfers = region.solve(sharing)
        for i, ranked in enumerate(region.ranked):
            S[i, i, r] = min(len(ranked), T)
            for k in ranked[: served[i]]:
                b[k] = 1
        for (j, i), x in transfers.items():
            S[j, i, r] = x
    b = np.array(b, dtype=np.int64)
    b.flags.writeable = False
    S.flags.writeable = False
    return Decision(b, S)


def solve_period(cfg: SystemConfig, state: PeriodState, debts: DebtState) -> Decision:
    """Exact minimiser of the per-period objective.

    Own slots are always filled (``min(A, T)`` clients, best ``delta * P``
    first, lowest client index on ties), including clients whose weight is
    zero. A cross-operator slot is moved only when it strictly lowers the
    objective.
    """
    return _decide(cfg, state, debts, sharing=True)


def solve_period_no_sharing(cfg: SystemConfig, state: PeriodState, debts: DebtState) -> Decision:
    """Largest-debt-first scheduling on own slots only."""
    return _decide(cfg, state, debts, sharing=False)


def update_debts(cfg: SystemConfig, debts: DebtState, d: Decision, state: PeriodState) -> DebtState:
    """Advance both debt families by one period using realized deliveries."""
    delivered = d.schedule * state.delivery_flip
    delta = np.maximum(debts.delivery_debt + cfg.throughput_req - delivered, 0.0)
    moved = d.share.sum(axis=2).astype(float)  # moved[j, i]
    # sigma[i, j] += received by i from j - given by i to j - zeta
    sigma = np.maximum(debts.sharing_debt + moved.T - moved - cfg.sharing_bound, 0.0)
    np.fill_diagonal(sigma, 0.0)
    delta.flags.writeable = False
    sigma.flags.writeable = False
    return DebtState(delta, sigma)
