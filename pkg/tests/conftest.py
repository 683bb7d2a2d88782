import numpy as np
import pytest

from bwshare.model import DebtState, PeriodState, SystemConfig


def random_instance(rng, operators=2, regions=2, max_clients=4, max_T=3, debt_hi=5.0, cap=None):
    """Random small system, period state and debt state."""
    cp = rng.integers(0, max_clients + 1, size=(operators, regions)).tolist()
    cfg = SystemConfig.build(
        operators=operators,
        regions=regions,
        clients_per=cp,
        period_length=int(rng.integers(1, max_T + 1)),
        horizon=1,
        delivery_prob=rng.uniform(0.5, 1.0, size=int(np.sum(cp))).tolist() if np.sum(cp) else 0.9,
        sharing_cap=cap,
    )
    N = cfg.n_clients
    state = PeriodState.build(cfg, rng.integers(0, 2, size=N).tolist() if N else [])
    sigma = rng.uniform(0, debt_hi, size=(operators, operators))
    debts = DebtState.build(cfg, rng.uniform(0, debt_hi, size=N).tolist() if N else [], sigma)
    return cfg, state, debts


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def policy_example():
    """One region, T=2: op0 has one client (weight 5), op1 three (4, 3, 2)."""
    cfg = SystemConfig.build(
        operators=2, regions=1, clients_per=[[1], [3]], period_length=2, horizon=1,
        delivery_prob=1.0, sharing_bound=0.001,
    )
    state = PeriodState.build(cfg, [1, 1, 1, 1])

    def debts(sigma_10):
        # sigma[1, 0]: what operator 1 owes operator 0
        return DebtState.build(cfg, [5, 4, 3, 2], {(1, 0): sigma_10})

    return cfg, state, debts


ACCEPTANCE_LINES: list[str] = []


def report(name: str, ok: bool, detail: str) -> bool:
    """Record one acceptance line; shown in the terminal summary."""
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
