"""Debt-based spectrum sharing between operators: policy, simulator, experiments."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DomainError,
    InstanceTooLargeError,
    UndefinedGainError,
    UnknownIndexError,
)
from .model import Decision, DebtState, PeriodState, SystemConfig, validate_decision  # noqa: E402
from .queueing import QueueParams, g_pool, p_succ  # noqa: E402
from .arrivals import ArrivalModel, ArrivalSampler  # noqa: E402
from .policy import objective, solve_period, solve_period_no_sharing, update_debts  # noqa: E402
from .oracle import brute_force_optimum  # noqa: E402
from .simulator import RunConfig, RunRecord, run  # noqa: E402
from .metrics import (  # noqa: E402
    Tolerances,
    improvement_percent,
    lyapunov_value,
    sharing_satisfied,
    throughput_satisfied,
)

__all__ = [
    "__version__",
    "ConfigError",
    "DomainError",
    "InstanceTooLargeError",
    "UndefinedGainError",
    "UnknownIndexError",
    "SystemConfig",
    "PeriodState",
    "DebtState",
    "Decision",
    "validate_decision",
    "QueueParams",
    "p_succ",
    "g_pool",
    "ArrivalModel",
    "ArrivalSampler",
    "objective",
    "solve_period",
    "solve_period_no_sharing",
    "update_debts",
    "brute_force_optimum",
    "RunConfig",
    "RunRecord",
    "run",
    "Tolerances",
    "throughput_satisfied",
    "sharing_satisfied",
    "improvement_percent",
    "lyapunov_value",
]
