import csv
import json
import math

import pytest

from bwshare.errors import ConfigError
from bwshare.experiments import (
    ScenarioSpec,
    Sweep,
    emit_fig1,
    fig3_spec,
    fig4_spec,
    fig5_spec,
    load_config,
    replication_seed,
    run_scenario,
    spec_from_dict,
    write_manifest,
    write_table,
)


def test_fig1_rows(tmp_path):
    path = emit_fig1(1.0, 0.0, [1.0], tmp_path / "f.csv")
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["D", "gain_percent"]
    assert float(rows[1][1]) == pytest.approx(36.78, abs=0.01)
    empty = emit_fig1(1.0, 0.9, [], tmp_path / "e.csv")
    assert empty.read_text() == "D,gain_percent\n"


def test_fig1_decreasing(tmp_path):
    rows = list(csv.reader(open(emit_fig1(1.0, 0.9, [0.5 * k for k in range(1, 21)], tmp_path / "f.csv"))))[1:]
    g = [float(r[1]) for r in rows]
    assert all(a > b for a, b in zip(g, g[1:]))


def test_imbalance_points_are_crossed():
    pts = fig4_spec(scale=0.8).points()
    assert [p["value"] for p in pts] == [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
    r = pts[1]["rate"]
    assert r[0] == pytest.approx([0.08, 0.72]) and r[1] == pytest.approx([0.72, 0.08])


def test_load_points_clamp_and_flag():
    pts = fig5_spec().points()
    assert len(pts) == 21 * 4
    top = [p for p in pts if p["value"] == 2.0 and p["period_length"] == 4][0]
    assert top["rate"] == [[0.5, 1.0], [1.0, 0.5]]
    assert top["requested_rate"][0][1] == pytest.approx(1.5)
    assert top["clamped"]
    assert not [p for p in pts if p["value"] == 1.0][0]["clamped"]
    # sorted by sweep value, then period length
    keys = [(p["value"], p["period_length"]) for p in pts]
    assert keys == sorted(keys)


@pytest.mark.parametrize(
    "sweep",
    [
        dict(kind="bogus"),
        dict(kind="sharing_cap", values=[]),
        dict(kind="sharing_cap", values=[1.5]),
        dict(kind="imbalance", values=[1.2]),
        dict(kind="load", values=[-1]),
        dict(kind="load", values=[math.nan]),
        dict(kind="load", values=[1], period_lengths=[0]),
    ],
)
def test_invalid_sweeps(sweep):
    with pytest.raises(ConfigError):
        Sweep(**sweep)


def test_invalid_spec():
    with pytest.raises(ConfigError):
        ScenarioSpec(replications=0)
    with pytest.raises(ConfigError):
        ScenarioSpec(rate=[[0.1, 0.2]])
    with pytest.raises(ConfigError):
        ScenarioSpec(operators=3, rate=0.1, sweep=Sweep("imbalance", [0.1]))


def test_zero_cap_gives_zero_improvement():
    spec = fig3_spec(horizon=300, sweep=Sweep("sharing_cap", [0]), replications=2)
    rows = run_scenario(spec)
    assert [r["improvement_percent"] for r in rows] == [0.0, 0.0]
    assert all(r["avg_shared_per_period"] == 0 for r in rows)


def test_rows_sorted_and_seeded_by_replication():
    spec = fig4_spec(horizon=200, sweep=Sweep("imbalance", [0.4, 0.1]), replications=2)
    rows = run_scenario(spec)
    assert [(r["value"], r["replication"]) for r in rows] == [(0.1, 0), (0.1, 1), (0.4, 0), (0.4, 1)]
    assert rows[0]["seed"] == rows[2]["seed"] == replication_seed(0, 0)
    assert rows[0]["seed"] != rows[1]["seed"]


def test_parallel_matches_serial():
    spec = fig4_spec(horizon=150, sweep=Sweep("imbalance", [0.1, 0.3]), replications=2)
    serial = run_scenario(spec)
    parallel = run_scenario(ScenarioSpec(**{**spec.__dict__, "jobs": 2}))
    assert serial == parallel


def test_zero_load_improvement_is_nan():
    rows = run_scenario(fig5_spec(horizon=50, sweep=Sweep("load", [0.0], [2])))
    assert math.isnan(rows[0]["improvement_percent"])


def test_table_and_manifest_deterministic(tmp_path):
    spec = fig4_spec(horizon=100, sweep=Sweep("imbalance", [0.2]))
    a = write_table(run_scenario(spec), tmp_path / "a.csv").read_bytes()
    b = write_table(run_scenario(spec), tmp_path / "b.csv").read_bytes()
    assert a == b
    m = write_manifest(tmp_path / "m.json", spec.to_dict(), "fig4")
    doc = json.loads(m.read_text())
    assert doc["config"]["seed"] == 0
    assert doc["config"]["points"][0]["rate"] == [[0.2, 0.8], [0.8, 0.2]]
    assert doc["software"]["package"] == "bwshare"


def test_config_overlay(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text(
        '[system]\nperiod_length = 4\nrequirement_factor = 0.9\n'
        '[arrivals]\nkind = "two_state_markov"\nrate = [[0.2, 0.8], [0.8, 0.2]]\npersistence = 0.7\n'
        '[policy]\nseed = 5\nreplications = 3\n'
        '[sweep]\nkind = "sharing_cap"\nvalues = [0, 2]\n'
        '[tolerances]\nxi1 = 0.02\n'
    )
    spec = load_config(p)
    assert spec.period_length == 4 and spec.requirement_factor == 0.9
    assert spec.arrival_kind == "two_state_markov" and spec.persistence == 0.7
    assert spec.seed == 5 and spec.replications == 3
    assert spec.sweep.values == (0, 2)
    assert spec.tolerances.xi1 == 0.02 and spec.tolerances.xi2 == 0.01
    cfg = spec.system(spec.points()[0])
    assert cfg.throughput_req[0] == pytest.approx(0.9 * 0.2)


@pytest.mark.parametrize(
    "doc",
    [
        {"systen": {}},
        {"system": {"period_lenght": 3}},
        {"sweep": {"kindd": "none"}},
        {"policy": 3},
    ],
)
def test_unknown_keys_rejected(doc):
    with pytest.raises(ConfigError):
        spec_from_dict(doc)


def test_bad_toml(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("[system\n")
    with pytest.raises(ConfigError):
        load_config(p)
