"""Exhaustive minimiser of the per-period objective for small instances.

Used as ground truth for the policy. Every integer slot allocation that
satisfies the per-period constraints is enumerated region by region; the
joint optimum is found over the full product of per-region candidates.
All scoring is exact: weights are converted to fractions and scaled to a
common integer denominator.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .errors import InstanceTooLargeError
from .model import DebtState, Decision, PeriodState, SystemConfig

__all__ = ["brute_force_optimum", "OracleResult", "BUDGET"]

BUDGET = 10**7


class OracleResult(NamedTuple):
    decision: Decision
    value: Fraction


def _allocations(O, T, A, cap, no_sharing):
    """All integer O x O slot matrices ``S[giver][receiver]`` for one region."""
    hi = []
    for j in range(O):
        for i in range(O):
            if i == j:
                hi.append(min(A[j], T))
            elif no_sharing:
                hi.append(0)
            else:
                h = min(max(T - A[j], 0), max(A[i] - T, 0))
                hi.append(h if cap is None else min(h, cap))
    for flat in itertools.product(*(range(h + 1) for h in hi)):
        S = [flat[j * O:(j + 1) * O] for j in range(O)]
        ok = True
        for j in range(O):
            given = sum(S[j]) - S[j][j]
            received = sum(S[k][j] for k in range(O)) - S[j][j]
            if (
                sum(S[j]) > T
                or S[j][j] > A[j]
                or given > max(T - A[j], 0)
                or received > max(A[j] - T, 0)
                or (cap is not None and (given > cap or received > cap))
            ):
                ok = False
                break
        if ok:
            yield S


def _schedules(ranked, capacity, full_subsets):
    """Schedules for one operator given its slot capacity."""
    if full_subsets:
        for m in range(min(capacity, len(ranked)) + 1):
            yield from itertools.combinations(ranked, m)
    else:
        # with non-negative weights the best m-subset is the top m
        yield tuple(ranked[: min(capacity, len(ranked))])


def brute_force_optimum(
    cfg: SystemConfig,
    state: PeriodState,
    debts: DebtState,
    restrict_no_sharing: bool = False,
    full_subsets: bool = False,
    budget: int = BUDGET,
) -> OracleResult:
    """Feasible decision attaining the exact minimum of the objective.

    ``full_subsets`` enumerates every subset of arrived clients instead of
    the top-weighted ones (slower; used to check that reduction).
    """
    state.check(cfg)
    debts.check(cfg)
    O, R, T = cfg.n_operators, cfg.n_regions, cfg.period_length
    cap = cfg.sharing_cap

    w = [Fraction(float(d)) * Fraction(float(p)) for d, p in zip(debts.delivery_debt, cfg.delivery_prob)]
    sig = [[Fraction(float(debts.sharing_debt[i, j])) for j in range(O)] for i in range(O)]
    denom = 1
    for v in itertools.chain(w, *sig):
        denom = math.lcm(denom, v.denominator)
    W = [int(v * denom) for v in w]
    SIG = [[int(v * denom) for v in row] for row in sig]

    per_region = []
    count = 1
    for r in range(R):
        ranked = []
        for i in range(O):
            sl = cfg.client_slice(i, r)
            arrived = [k for k in range(sl.start, sl.stop) if state.arrivals[k]]
            arrived.sort(key=lambda k: (-W[k], k))
            ranked.append(arrived)
        A = [len(x) for x in ranked]
        bound = 1
        for j in range(O):
            bound *= min(A[j], T) + 1
            for i in range(O):
                if i != j and not restrict_no_sharing:
                    bound *= min(max(T - A[j], 0), max(A[i] - T, 0)) + 1
            if full_subsets:
                bound *= 2 ** A[j]
        if bound * count > budget:
            raise InstanceTooLargeError(f"region {r}: up to {bound} candidates, joint bound {bound * count} > {budget}")

        cands = []
        for S in _allocations(O, T, A, cap, restrict_no_sharing):
            # literal sharing term: sum_{i != j} sigma[i][j] * (S[j][i] - S[i][j])
            share_term = sum(SIG[i][j] * (S[j][i] - S[i][j]) for i in range(O) for j in range(O) if i != j)
            capacity = [sum(S[j][i] for j in range(O)) for i in range(O)]
            for combo in itertools.product(*(_schedules(ranked[i], capacity[i], full_subsets) for i in range(O))):
                score = share_term - sum(W[k] for sched in combo for k in sched)
                cands.append((score, S, combo))
        count *= len(cands)
        if count > budget:
            raise InstanceTooLargeError(f"joint candidate count {count} exceeds budget {budget}")
        per_region.append(cands)

    best_score, best = None, None
    for joint in itertools.product(*per_region):
        score = sum(c[0] for c in joint)
        if best_score is None or score < best_score:
            best_score, best = score, joint

    b = np.zeros(cfg.n_clients, dtype=np.int64)
    share = np.zeros((O, O, R), dtype=np.int64)
    for r, (_, S, combo) in enumerate(best):
        for j in range(O):
            for i in range(O):
                share[j, i, r] = S[j][i]
        for sched in combo:
            b[list(sched)] = 1
    return OracleResult(Decision(b, share), Fraction(best_score, denom))
