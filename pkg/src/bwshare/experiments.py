"""Scenario sweeps with paired sharing / no-sharing runs.

A scenario is a two-operator, two-region system (by default 10 clients per
operator and region, T = 5, P = 0.99, K = 10000, zeta = 0.001 and each
client's requirement 0.95 x its arrival rate). Rates are given per
(operator, region); sweeps rewrite them:

* ``sharing_cap``: cap ``L`` on slots given/received per region and period.
* ``imbalance``: operator 0 has rate ``scale * b`` in region 0 and
  ``scale * (1 - b)`` in region 1; operator 1 the reverse.
* ``load``: region-0 rates ``0.25 g`` and ``0.75 g`` for operators 0 and 1,
  reversed in region 1, for every period length in ``period_lengths``.

Per-client rates above 1 are clamped to 1 and flagged in the output.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .arrivals import ArrivalModel
from .errors import ConfigError, UndefinedGainError
from .metrics import (
    Tolerances,
    debt_checkpoints,
    improvement_by_operator,
    improvement_percent,
    sharing_satisfied,
    throughput_satisfied,
)
from .model import SystemConfig
from .queueing import QueueParams, g_pool
from .simulator import RunConfig, run

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = [
    "Sweep",
    "ScenarioSpec",
    "run_scenario",
    "summarize",
    "emit_fig1",
    "write_table",
    "write_manifest",
    "load_config",
    "spec_from_dict",
    "replication_seed",
    "fig3_spec",
    "fig4_spec",
    "fig5_spec",
    "SWEEP_KINDS",
]

SWEEP_KINDS = ("none", "sharing_cap", "imbalance", "load")


@dataclass(frozen=True)
class Sweep:
    kind: str = "none"
    values: tuple = ()
    period_lengths: tuple = ()
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in SWEEP_KINDS:
            raise ConfigError(f"unknown sweep kind {self.kind!r}; expected one of {SWEEP_KINDS}")
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "period_lengths", tuple(int(t) for t in self.period_lengths))
        if self.kind != "none" and not self.values:
            raise ConfigError(f"{self.kind} sweep needs at least one value")
        for v in self.values:
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"sweep value {v!r} is not a finite number")
        if self.kind == "sharing_cap" and any(v < 0 or v != int(v) for v in self.values):
            raise ConfigError("sharing caps must be non-negative integers")
        if self.kind == "imbalance" and any(not 0 <= v <= 1 for v in self.values):
            raise ConfigError("imbalance values must lie in [0, 1]")
        if self.kind == "imbalance" and not self.scale > 0:
            raise ConfigError("imbalance scale must be > 0")
        if self.kind == "load" and any(v < 0 for v in self.values):
            raise ConfigError("load values must be >= 0")
        if any(t < 1 for t in self.period_lengths):
            raise ConfigError("period lengths must be >= 1")


@dataclass(frozen=True)
class ScenarioSpec:
    operators: int = 2
    regions: int = 2
    clients_per: Any = 10
    period_length: int = 5
    horizon: int = 10_000
    delivery_prob: Any = 0.99
    sharing_bound: Any = 0.001
    sharing_cap: int | None = None
    throughput_req: Any = None
    requirement_factor: float = 0.95
    rate: Any = ((0.5, 0.5), (0.5, 0.5))
    arrival_kind: str = "bernoulli"
    persistence: float | None = None
    sweep: Sweep = field(default_factory=Sweep)
    replications: int = 1
    seed: int = 0
    jobs: int = 1
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.sweep.kind in ("imbalance", "load") and (self.operators != 2 or self.regions != 2):
            raise ConfigError(f"{self.sweep.kind} sweep is defined for 2 operators x 2 regions")
        # fail on malformed rate tables before any run starts
        self._rate_table(self.rate)

    def _rate_table(self, rate) -> list[list[float]]:
        O, R = self.operators, self.regions
        if isinstance(rate, (int, float)):
            return [[float(rate)] * R for _ in range(O)]
        table = [[float(v) for v in row] for row in rate]
        if len(table) != O or any(len(row) != R for row in table):
            raise ConfigError(f"rate must be a scalar or a {O}x{R} table")
        if any(v < 0 for row in table for v in row):
            raise ConfigError("arrival rates must be >= 0")
        return table

    def points(self) -> list[dict]:
        """Resolved sweep points: value, period length, cap and clamped rates."""
        sw = self.sweep
        base = dict(value=None, period_length=self.period_length, sharing_cap=self.sharing_cap, rate=self._rate_table(self.rate))
        if sw.kind == "none":
            pts = [base]
        elif sw.kind == "sharing_cap":
            pts = [dict(base, value=v, sharing_cap=int(v)) for v in sw.values]
        elif sw.kind == "imbalance":
            pts = []
            for b in sw.values:
                lo, hi = sw.scale * b, sw.scale * (1 - b)
                pts.append(dict(base, value=b, rate=[[lo, hi], [hi, lo]]))
        else:
            pts = []
            for T in sw.period_lengths or (self.period_length,):
                for g in sw.values:
                    a, c = 0.25 * g, 0.75 * g
                    pts.append(dict(base, value=g, period_length=T, rate=[[a, c], [c, a]]))
        out = []
        for p in pts:
            requested = p["rate"]
            clamped = [[min(v, 1.0) for v in row] for row in requested]
            out.append(dict(p, rate=clamped, requested_rate=requested, clamped=clamped != requested))
        return sorted(out, key=lambda p: (-math.inf if p["value"] is None else p["value"], p["period_length"]))

    def system(self, point: dict) -> SystemConfig:
        rate = point["rate"]
        if self.throughput_req is not None:
            q = self.throughput_req
        else:
            q = [[self.requirement_factor * v for v in row] for row in rate]
        return SystemConfig.build(
            operators=self.operators,
            regions=self.regions,
            clients_per=self.clients_per,
            period_length=point["period_length"],
            horizon=self.horizon,
            delivery_prob=self.delivery_prob,
            throughput_req=q,
            sharing_bound=self.sharing_bound,
            sharing_cap=point["sharing_cap"],
        )

    def models(self, point: dict) -> dict:
        return {
            (i, r): ArrivalModel(self.arrival_kind, point["rate"][i][r], self.persistence)
            for i in range(self.operators)
            for r in range(self.regions)
        }

    def to_dict(self) -> dict:
        d = asdict(self)
        d["points"] = self.points()
        return d


def replication_seed(master: int, replication: int) -> int:
    """64-bit seed for one replication, shared by every sweep point."""
    ss = np.random.SeedSequence(int(master), spawn_key=(0xE9, int(replication)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


ROW_FIELDS = [
    "sweep",
    "value",
    "period_length",
    "sharing_cap",
    "replication",
    "seed",
    "rates",
    "clamped",
    "improvement_percent",
    "improvement_by_operator",
    "avg_shared_per_period",
    "timely_with",
    "timely_without",
    "throughput_met_with",
    "throughput_met_without",
    "clients",
    "sharing_balanced",
    "max_net_sharing",
    "max_delta_mid",
    "max_delta_end",
    "mean_lyapunov",
]


def _run_point(spec: ScenarioSpec, point: dict, replication: int) -> dict:
    cfg = spec.system(point)
    models = spec.models(point)
    seed = replication_seed(spec.seed, replication)
    w = run(RunConfig(cfg, models, "sharing", seed))
    o = run(RunConfig(cfg, models, "no_sharing", seed))
    try:
        imp = improvement_percent(w, o)
    except UndefinedGainError:
        imp = math.nan
    K = cfg.horizon
    mid, end = debt_checkpoints(w, (max(K // 2, 1), K))
    return {
        "sweep": spec.sweep.kind,
        "value": point["value"],
        "period_length": point["period_length"],
        "sharing_cap": point["sharing_cap"],
        "replication": replication,
        "seed": seed,
        "rates": point["rate"],
        "clamped": point["clamped"],
        "improvement_percent": imp,
        "improvement_by_operator": improvement_by_operator(w, o, cfg),
        "avg_shared_per_period": w.avg_shared_per_period,
        "timely_with": w.total_timely(),
        "timely_without": o.total_timely(),
        "throughput_met_with": sum(throughput_satisfied(w, cfg, spec.tolerances).values()),
        "throughput_met_without": sum(throughput_satisfied(o, cfg, spec.tolerances).values()),
        "clients": cfg.n_clients,
        "sharing_balanced": all(sharing_satisfied(w, cfg, spec.tolerances).values()),
        "max_net_sharing": float(w.net_sharing.max()),
        "max_delta_mid": mid,
        "max_delta_end": end,
        "mean_lyapunov": float(w.lyapunov_trace.mean()),
    }


def _task(args):
    return _run_point(*args)


def run_scenario(spec: ScenarioSpec) -> list[dict]:
    """One row per (sweep point, replication), sorted by sweep value, period length, replication."""
    tasks = [(spec, p, rep) for p in spec.points() for rep in range(spec.replications)]
    if spec.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            rows = list(pool.map(_task, tasks))
    else:
        rows = [_task(t) for t in tasks]
    return rows


def summarize(rows: list[dict], key: str = "improvement_percent") -> dict[tuple, float]:
    """Mean of ``key`` over replications for each (period_length, value)."""
    acc: dict[tuple, list] = {}
    for row in rows:
        acc.setdefault((row["period_length"], row["value"]), []).append(row[key])
    return {k: float(np.mean(v)) for k, v in acc.items()}


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return json.dumps(v)
    if v is None:
        return ""
    return str(v)


def write_table(rows: list[dict], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROW_FIELDS)
        for row in rows:
            w.writerow([_cell(row[k]) for k in ROW_FIELDS])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def write_manifest(path, resolved: dict, command: str) -> Path:
    """Self-describing run manifest: resolved configuration, seed, version."""
    path = Path(path)
    doc = {"command": command, "software": {"package": "bwshare", "version": __version__}, "config": _jsonable(resolved)}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def emit_fig1(mu: float, rho: float, d_grid, out_path) -> Path:
    """CSV of pooling gain (percent) against deadline."""
    rows = [(d, 100.0 * g_pool(QueueParams(mu, rho, d))) for d in d_grid]
    out_path = Path(out_path)
    with open(out_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["D", "gain_percent"])
        for d, g in rows:
            w.writerow([repr(float(d)), repr(g)])
    return out_path


# -- presets -------------------------------------------------------------

FIG3_CAPS = (0, 1, 2, 3, 4, 5)
FIG3_RATE = ((0.2, 0.8), (0.8, 0.2))
FIG4_IMBALANCE = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
FIG5_LOADS = tuple(round(0.1 * k, 10) for k in range(21))
FIG5_PERIODS = (2, 4, 6, 8)


def fig3_spec(**overrides) -> ScenarioSpec:
    return replace(ScenarioSpec(rate=FIG3_RATE, sweep=Sweep("sharing_cap", FIG3_CAPS)), **overrides)


def fig4_spec(scale: float = 1.0, **overrides) -> ScenarioSpec:
    return replace(ScenarioSpec(sweep=Sweep("imbalance", FIG4_IMBALANCE, scale=scale)), **overrides)


def fig5_spec(**overrides) -> ScenarioSpec:
    return replace(ScenarioSpec(sweep=Sweep("load", FIG5_LOADS, FIG5_PERIODS)), **overrides)


# -- configuration files ---------------------------------------------------

_SECTIONS = {
    "system": {
        "operators": "operators",
        "regions": "regions",
        "clients_per": "clients_per",
        "period_length": "period_length",
        "horizon": "horizon",
        "delivery_prob": "delivery_prob",
        "throughput_req": "throughput_req",
        "requirement_factor": "requirement_factor",
        "sharing_bound": "sharing_bound",
        "sharing_cap": "sharing_cap",
    },
    "arrivals": {"kind": "arrival_kind", "rate": "rate", "persistence": "persistence"},
    "policy": {"seed": "seed", "replications": "replications", "jobs": "jobs"},
    "sweep": {f.name: f.name for f in fields(Sweep)},
    "tolerances": {f.name: f.name for f in fields(Tolerances)},
}


def spec_from_dict(doc: dict, base: ScenarioSpec | None = None) -> ScenarioSpec:
    """Overlay a parsed configuration document on ``base``.

    Unknown sections or keys raise :class:`ConfigError`.
    """
    base = base or ScenarioSpec()
    unknown = set(doc) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config section(s): {sorted(unknown)}")
    changes: dict[str, Any] = {}
    for section, body in doc.items():
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table")
        bad = set(body) - set(_SECTIONS[section])
        if bad:
            raise ConfigError(f"unknown key(s) in [{section}]: {sorted(bad)}")
        if section == "sweep":
            changes["sweep"] = Sweep(**{**asdict(base.sweep), **body})
        elif section == "tolerances":
            changes["tolerances"] = Tolerances(**{**asdict(base.tolerances), **body})
        else:
            for key, value in body.items():
                changes[_SECTIONS[section][key]] = value
    try:
        return replace(base, **changes)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, base: ScenarioSpec | None = None) -> ScenarioSpec:
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return spec_from_dict(doc, base)
