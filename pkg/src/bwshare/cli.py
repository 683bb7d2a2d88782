"""Command line entry point: ``bwshare {fig1,fig3,fig4,fig5,run} ...``.

Each table command writes ``<name>.csv`` and ``<name>.manifest.json`` into
``--out``. Failures exit nonzero with a single JSON line on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, DomainError, InstanceTooLargeError, UndefinedGainError, UnknownIndexError
from .experiments import (
    ScenarioSpec,
    Sweep,
    emit_fig1,
    fig3_spec,
    fig4_spec,
    fig5_spec,
    load_config,
    run_scenario,
    write_manifest,
    write_table,
)

_EXIT = {
    ConfigError: 2,
    DomainError: 3,
    UnknownIndexError: 4,
    UndefinedGainError: 5,
    InstanceTooLargeError: 6,
    OSError: 7,
}


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


class _Parser(argparse.ArgumentParser):
    """Usage errors also end with the JSON error line."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(json.dumps({"status": "error", "type": "UsageError", "message": message}), file=sys.stderr)
        sys.exit(2)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bwshare", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"bwshare {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="{fig1,fig3,fig4,fig5,run}")

    common = _Parser(add_help=False)
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")

    sim = _Parser(add_help=False)
    sim.add_argument("--config", type=Path, help="TOML file overriding the preset")
    sim.add_argument("--seed", type=_u64, help="master seed (unsigned 64-bit)")
    sim.add_argument("--replications", type=_positive, help="replications per sweep point")
    sim.add_argument("--jobs", type=_positive, help="worker processes")
    sim.add_argument("--horizon", type=_positive, help="periods per run (K)")

    f1 = sub.add_parser("fig1", parents=[common], help="pooling gain against deadline")
    f1.add_argument("--mu", type=float, default=1.0)
    f1.add_argument("--rho", type=float, default=0.9)
    f1.add_argument("--deadlines", type=_floats, default=[0.5 * k for k in range(1, 21)],
                    help="comma-separated deadlines (default 0.5,1,...,10)")

    sub.add_parser("fig3", parents=[common, sim], help="improvement against sharing cap")
    f4 = sub.add_parser("fig4", parents=[common, sim], help="improvement and sharing against imbalance")
    f4.add_argument("--scale", type=float, help="rate scale factor (default 1.0)")
    sub.add_parser("fig5", parents=[common, sim], help="improvement against load for several T")
    sub.add_parser("run", parents=[common, sim], help="single scenario from --config")

    # debugging aid, intentionally not listed in the usage line
    orc = sub.add_parser("oracle", parents=[common])
    orc.add_argument("--instance", type=Path, required=True, help="JSON instance file")
    return p


def _spec(args, preset: ScenarioSpec) -> ScenarioSpec:
    spec = load_config(args.config, preset) if args.config else preset
    changes = {}
    for name in ("seed", "replications", "jobs", "horizon"):
        v = getattr(args, name, None)
        if v is not None:
            changes[name] = v
    if getattr(args, "scale", None) is not None:
        changes["sweep"] = replace(spec.sweep, scale=args.scale)
    return replace(spec, **changes)


def _table(args, name: str, spec: ScenarioSpec) -> dict:
    args.out.mkdir(parents=True, exist_ok=True)
    rows = run_scenario(spec)
    csv_path = write_table(rows, args.out / f"{name}.csv")
    write_manifest(args.out / f"{name}.manifest.json", spec.to_dict(), name)
    return {"status": "ok", "command": name, "csv": str(csv_path), "rows": len(rows)}


def _fig1(args) -> dict:
    args.out.mkdir(parents=True, exist_ok=True)
    path = emit_fig1(args.mu, args.rho, args.deadlines, args.out / "fig1.csv")
    write_manifest(args.out / "fig1.manifest.json", {"mu": args.mu, "rho": args.rho, "deadlines": args.deadlines}, "fig1")
    return {"status": "ok", "command": "fig1", "csv": str(path), "rows": len(args.deadlines)}


def _oracle(args) -> dict:
    """Solve one period both ways from a JSON instance and report the values.

    Instance keys: ``system`` (SystemConfig.build keywords), ``arrivals``,
    optional ``delivery_debt`` and ``sharing_debt`` (list of [i, j, value]).
    """
    from .model import DebtState, PeriodState, SystemConfig, validate_decision
    from .oracle import brute_force_optimum
    from .policy import objective, solve_period

    doc = json.loads(args.instance.read_text())
    try:
        cfg = SystemConfig.build(**doc["system"])
        state = PeriodState.build(cfg, doc["arrivals"])
        delta = doc.get("delivery_debt", np.zeros(cfg.n_clients))
        sigma = {(int(i), int(j)): v for i, j, v in doc.get("sharing_debt", [])}
        debts = DebtState.build(cfg, delta, sigma)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed instance: {exc}") from exc
    d = solve_period(cfg, state, debts)
    best = brute_force_optimum(cfg, state, debts)
    value = objective(cfg, debts, d, exact=True)
    return {
        "status": "ok",
        "command": "oracle",
        "policy_value": str(value),
        "oracle_value": str(best.value),
        "match": value == best.value,
        "violations": len(validate_decision(cfg, state, d)),
        "schedule": d.schedule.tolist(),
        "share": d.share.tolist(),
    }


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "fig1":
            result = _fig1(args)
        elif args.command == "fig3":
            result = _table(args, "fig3", _spec(args, fig3_spec()))
        elif args.command == "fig4":
            result = _table(args, "fig4", _spec(args, fig4_spec()))
        elif args.command == "fig5":
            result = _table(args, "fig5", _spec(args, fig5_spec()))
        elif args.command == "run":
            result = _table(args, "run", _spec(args, ScenarioSpec(sweep=Sweep())))
        else:
            result = _oracle(args)
    except tuple(_EXIT) as exc:
        code = next(c for t, c in _EXIT.items() if isinstance(exc, t))
        print(json.dumps({"status": "error", "type": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return code
    print(json.dumps(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
