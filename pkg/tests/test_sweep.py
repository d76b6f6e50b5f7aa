import io
import json
import math

import numpy as np
import pytest

from conftest import net
from starsync.lindblad import build_liouvillian, steady_state
from starsync.measures import sync_measure
from starsync.sweep import (
    CSV_COLUMNS,
    SweepAxis,
    default_workers,
    evaluate_point,
    run_points,
    sweep_1d,
    sweep_2d,
)

BASE = net(2, 0.0, 0.0, hub_gain=0.1, hub_damp=1.0, leaf_gain=0.1, leaf_damp=1.0)


@pytest.mark.parametrize(
    "parameter,values",
    [
        ("coupling", (0.1, 0.1)),
        ("coupling", (0.1, 0.3, 0.2)),
        ("coupling", (-0.1, 0.2)),
        ("hub_gain", ()),
        ("nonsense", (1.0,)),
        ("leaf_damp", (1.0, float("inf"))),
    ],
)
def test_axis_validation(parameter, values):
    with pytest.raises(ValueError):
        SweepAxis(parameter, values)


def test_axis_accepts_negative_detuning_and_decreasing():
    assert SweepAxis("detuning", (-2.0, 0.0, 2.0)).values == (-2.0, 0.0, 2.0)
    assert len(SweepAxis("coupling", (0.3, 0.2, 0.1))) == 3
    assert SweepAxis.linspace("coupling", 0, 1, 5).values[-1] == 1.0


def test_gain_ratio_axis_scales_with_damping():
    cfg = SweepAxis("gain_ratio", (0.5,)).apply(BASE.replace(hub_damp=2.0), 0.5)
    assert cfg.hub_gain == 1.0 and cfg.leaf_gain == 0.5


def test_sweep_rows_in_axis_order_and_zero_coupling_row():
    axis = SweepAxis("coupling", (0.0, 0.05, 0.2))
    table = sweep_1d(BASE, axis)
    assert [r.axis1 for r in table.rows] == list(axis.values)
    first = table.rows[0]
    assert first.s01 == 0.0 and first.s12 == 0.0
    assert first.abs_c1_01 < 1e-12 and first.abs_c2_12 < 1e-12
    assert table.all_within_tol and table.n_failed == 0
    assert np.all(table.column("s01") >= 0) and np.all(table.column("s12") >= 0)


def test_sweep_is_deterministic():
    axis = SweepAxis("coupling", (0.05, 0.2))
    a = sweep_1d(BASE, axis)
    b = sweep_1d(BASE, axis)
    for col in ("s01", "s12", "abs_c1_01", "abs_c2_12", "residual"):
        assert np.array_equal(a.column(col), b.column(col))


def test_parallel_matches_sequential():
    a = SweepAxis("detuning", (0.0, 2.0))
    b = SweepAxis("coupling", (0.05, 0.2))
    seq = sweep_2d(BASE, a, b, workers=1)
    par = sweep_2d(BASE, a, b, workers=2)
    for col in ("axis1", "axis2", "s01", "s12", "abs_c1_01", "abs_c2_01", "residual"):
        assert np.array_equal(seq.column(col), par.column(col))


def test_2d_is_row_major():
    a = SweepAxis("detuning", (0.0, 1.0, 2.0))
    b = SweepAxis("coupling", (0.05, 0.1))
    t = sweep_2d(BASE, a, b)
    assert [(r.axis1, r.axis2) for r in t.rows] == [(x, y) for x in a.values for y in b.values]
    assert t.grid("s12").shape == (3, 2)


def test_single_point_table_equals_direct_evaluation():
    a = SweepAxis("detuning", (1.0,))
    b = SweepAxis("coupling", (0.1,))
    t = sweep_2d(BASE, a, b)
    assert len(t.rows) == 1
    direct = evaluate_point(BASE.replace(delta=1.0, coupling=0.1))
    assert t.rows[0].s01 == direct.s01 and t.rows[0].s12 == direct.s12


def test_rows_reproduce_fresh_solves():
    axis = SweepAxis("coupling", (0.05, 0.15))
    table = sweep_1d(BASE, axis)
    for row in table.rows:
        rho = steady_state(build_liouvillian(BASE.replace(coupling=row.axis1)))
        assert abs(sync_measure(rho, 0, 1)[0].value - row.s01) < 1e-10
        assert abs(sync_measure(rho, 1, 2)[0].value - row.s12) < 1e-10


def test_2d_rejects_same_parameter_and_gain_conflict():
    a = SweepAxis("coupling", (0.1,))
    with pytest.raises(ValueError):
        sweep_2d(BASE, a, a)
    with pytest.raises(ValueError):
        sweep_2d(BASE, SweepAxis("gain_ratio", (0.5,)), SweepAxis("hub_gain", (0.5,)))


def test_sweep_needs_a_leaf():
    with pytest.raises(ValueError):
        sweep_1d(net(0), SweepAxis("coupling", (0.1,)))


def test_gain_ratio_sees_damping_from_other_axis():
    t = sweep_2d(BASE, SweepAxis("gain_ratio", (0.5,)), SweepAxis("hub_damp", (2.0,)))
    direct = evaluate_point(BASE.replace(hub_damp=2.0, hub_gain=1.0, leaf_gain=0.5))
    assert t.rows[0].s01 == direct.s01


def test_failure_is_recorded_not_raised():
    # an impossible tolerance makes every point fail its residual check
    row = evaluate_point(BASE.replace(coupling=0.1), tol=1e-30)
    assert row.failed and math.isnan(row.s01) and row.error
    t = sweep_1d(BASE, SweepAxis("coupling", (0.1,)), tol=1e-30)
    assert t.n_failed == 1 and not t.all_within_tol


def test_single_leaf_has_no_leaf_pair():
    row = evaluate_point(net(1, 0.0, 0.05, 1.0, 0.1, 0.1, 1.0))
    assert row.s01 > 0 and math.isnan(row.s12)


def test_csv_schema_and_precision():
    t = sweep_1d(BASE, SweepAxis("coupling", (0.0, 0.1)))
    text = t.to_csv(["tool: starsync"])
    lines = text.splitlines()
    assert lines[0] == "# tool: starsync"
    assert lines[1] == ",".join(CSV_COLUMNS)
    fields = lines[3].split(",")
    assert float(fields[CSV_COLUMNS.index("s01")]) == t.rows[1].s01
    assert fields[1] == ""  # no second axis
    assert fields[-1] == "0"


def test_json_round_trip():
    t = sweep_1d(BASE, SweepAxis("coupling", (0.1,)))
    data = json.loads(t.to_json({"x": 1}))
    assert data["metadata"] == {"x": 1}
    assert data["columns"] == list(CSV_COLUMNS)
    assert data["rows"][0]["s01"] == t.rows[0].s01


def test_default_workers_env(monkeypatch):
    monkeypatch.setenv("STARSYNC_WORKERS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("STARSYNC_WORKERS", "zero")
    assert default_workers() == 1
    monkeypatch.delenv("STARSYNC_WORKERS")
    assert default_workers() == 1


def test_run_points_preserves_order():
    pts = [(BASE.replace(coupling=v), v, None) for v in (0.2, 0.0, 0.1)]
    rows = run_points(pts, workers=2)
    assert [r.axis1 for r in rows] == [0.2, 0.0, 0.1]
