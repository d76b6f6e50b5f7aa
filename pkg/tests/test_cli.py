import csv
import io
import json

import numpy as np
import pytest
import yaml

from starsync.cli import EXIT_INPUT, EXIT_OK, EXIT_SOLVER, EXIT_TOL, main, read_metadata
from starsync.config import ConfigError, parse_spec, spec_from_dict
from starsync.presets import FIGURE_IDS, PRESETS, get_preset
from starsync.sweep import CSV_COLUMNS


def network(**over):
    d = dict(n_leaves=1, delta=0.0, coupling=0.05, hub_gain=1.0, hub_damp=0.1, leaf_gain=0.1, leaf_damp=1.0)
    d.update(over)
    return d


@pytest.fixture
def write_config(tmp_path):
    def write(data, name="cfg.yaml"):
        path = tmp_path / name
        path.write_text(yaml.safe_dump(data))
        return str(path)

    return write


def run(argv, capsys):
    status = main(argv)
    out = capsys.readouterr()
    return status, out.out, out.err


def table(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


# ---------------------------------------------------------------- config


def test_missing_coupling_is_named(write_config, capsys):
    net = network()
    del net["coupling"]
    status, _, err = run(["steady", "--config", write_config({"network": net})], capsys)
    assert status == EXIT_INPUT
    assert "coupling" in err


@pytest.mark.parametrize(
    "data,field",
    [
        ({"network": network(coupling=-1.0)}, "coupling"),
        ({"network": network(hub_gain="fast")}, "hub_gain"),
        ({"network": {**network(), "colour": 1}}, "colour"),
        ({"network": network(), "output": {"format": "xml"}}, "output.format"),
        ({"network": network(), "solver": {"method": "magic"}}, "solver.method"),
        ({"network": network(), "sweep": {"axes": []}}, "sweep.axes"),
        ({"network": network(), "sweep": {"axes": [{"parameter": "coupling", "values": [0.2, 0.1, 0.3]}]}}, "sweep.axes[0]"),
    ],
)
def test_config_errors_name_field(data, field):
    with pytest.raises(ConfigError) as info:
        spec_from_dict(data)
    assert field in str(info.value)


def test_unparseable_yaml():
    with pytest.raises(ConfigError):
        parse_spec("network: [unclosed")


def test_missing_file(capsys):
    status, _, err = run(["steady", "--config", "/nonexistent/cfg.yaml"], capsys)
    assert status == EXIT_INPUT and "config" in err


def test_spec_round_trip():
    data = {
        "network": network(n_leaves=3),
        "solver": {"tol": 1e-11, "method": "direct"},
        "measure": {"grid_size": 256},
        "sweep": {"axes": [{"parameter": "detuning", "linspace": [0, 2, 3]}, {"parameter": "coupling", "values": [0.1, 0.2]}], "workers": 2},
        "output": {"path": "x.csv", "format": "csv"},
    }
    spec = spec_from_dict(data)
    again = parse_spec(spec.to_yaml())
    assert again == spec and again.digest() == spec.digest()


# ---------------------------------------------------------------- steady


def test_steady_single_site(write_config, capsys):
    cfg = write_config({"network": network(n_leaves=0, hub_gain=1.0, hub_damp=1.0)})
    status, out, _ = run(["steady", "--config", cfg], capsys)
    assert status == EXIT_OK
    rows = table(out)
    assert len(rows) == 1
    pops = [float(rows[0][k]) for k in ("pop_plus", "pop_zero", "pop_minus")]
    assert np.allclose(pops, [0, 1, 0], atol=1e-10)
    meta = read_metadata(out)
    assert meta["residual"] < 1e-10 and meta["tool"] == "starsync"


def test_steady_json_and_overrides(write_config, capsys, tmp_path):
    cfg = write_config({"network": network()})
    out_path = tmp_path / "sub" / "steady.json"
    status, _, _ = run(
        ["steady", "--config", cfg, "--format", "json", "--output", str(out_path), "--set", "network.coupling=0.0"],
        capsys,
    )
    assert status == EXIT_OK
    data = json.loads(out_path.read_text())
    assert data["metadata"]["config"]["network"]["coupling"] == 0.0
    # uncoupled product of single-site fixed points
    for site in data["sites"]:
        assert np.isclose(site["populations"][1], 1.0)


def test_steady_unmet_tolerance(write_config, capsys):
    cfg = write_config({"network": network(), "solver": {"tol": 1e-30}})
    status, _, err = run(["steady", "--config", cfg], capsys)
    assert status == EXIT_SOLVER and "solver" in err


def test_bad_set_path(write_config, capsys):
    cfg = write_config({"network": network()})
    status, _, err = run(["steady", "--config", cfg, "--set", "network.coupling.x=1"], capsys)
    assert status == EXIT_INPUT


# -------------------------------------------------------------------- s2


def test_s2_columns_and_header(write_config, capsys):
    cfg = write_config({"network": network(), "measure": {"grid_size": 64}})
    status, out, _ = run(["s2", "--config", cfg], capsys)
    assert status == EXIT_OK
    header = [line for line in out.splitlines() if not line.startswith("#")][0]
    assert header == "phi,s2,s2_1,s2_2"
    rows = table(out)
    assert len(rows) == 64
    meta = read_metadata(out)
    for key in ("a1", "phi1", "a2", "phi2", "abs_c1", "abs_c2", "residual", "config_sha256", "version"):
        assert key in meta
    s2 = np.array([float(r["s2"]) for r in rows])
    parts = np.array([float(r["s2_1"]) + float(r["s2_2"]) for r in rows])
    assert np.allclose(s2, parts, atol=1e-15)
    # single dominant peak in the 1:1 regime
    assert np.sum((s2 > np.roll(s2, 1)) & (s2 > np.roll(s2, -1))) == 1


def test_s2_blockade_regime(write_config, capsys):
    cfg = write_config({"network": network(hub_gain=0.1, hub_damp=1.0)})
    status, out, _ = run(["s2", "--config", cfg], capsys)
    rows = table(out)
    first = np.array([float(r["s2_1"]) for r in rows])
    s2 = np.array([float(r["s2"]) for r in rows])
    assert np.max(np.abs(first)) < 1e-8
    peaks = s2[(s2 > np.roll(s2, 1)) & (s2 >= np.roll(s2, -1))]
    assert len(peaks) == 2 and abs(peaks[0] - peaks[1]) < 1e-12


def test_s2_zero_coupling_all_zero(write_config, capsys):
    cfg = write_config({"network": network(coupling=0.0)})
    _, out, _ = run(["s2", "--config", cfg, "--format", "json"], capsys)
    data = json.loads(out)
    for name in ("s2", "s2_1", "s2_2"):
        assert not any(data["data"][name])


def test_s2_bad_pair(write_config, capsys):
    cfg = write_config({"network": network()})
    status, _, err = run(["s2", "--config", cfg, "--pair", "1,2"], capsys)
    assert status == EXIT_INPUT and "pair" in err


# ----------------------------------------------------------------- sweep


def test_sweep_csv_schema_and_config_echo(write_config, capsys):
    data = {
        "network": network(n_leaves=2, hub_gain=0.1, hub_damp=1.0),
        "sweep": {"axes": [{"parameter": "coupling", "values": [0.0, 0.05]}], "workers": 1},
    }
    cfg = write_config(data)
    status, out, _ = run(["sweep", "--config", cfg], capsys)
    assert status == EXIT_OK
    body = [line for line in out.splitlines() if not line.startswith("#")]
    assert body[0] == ",".join(CSV_COLUMNS)
    rows = table(out)
    assert [float(r["axis1"]) for r in rows] == [0.0, 0.05]
    meta = read_metadata(out)
    echoed = spec_from_dict(meta["config"])
    assert echoed == spec_from_dict(data)
    assert echoed.digest() == meta["config_sha256"]


def test_single_point_sweep_matches_steady_and_s2(write_config, capsys):
    net = network(n_leaves=2)
    cfg = write_config({"network": net, "sweep": {"axes": [{"parameter": "coupling", "values": [0.05]}]}})
    _, out, _ = run(["sweep", "--config", cfg, "--workers", "1"], capsys)
    row = table(out)[0]
    cfg2 = write_config({"network": net}, "plain.yaml")
    _, s2_out, _ = run(["s2", "--config", cfg2], capsys)
    meta = read_metadata(s2_out)
    assert float(row["abs_c1_01"]) == pytest.approx(meta["abs_c1"], rel=1e-12)
    assert float(row["abs_c2_01"]) == pytest.approx(meta["abs_c2"], rel=1e-12)


def test_sweep_without_axes(write_config, capsys):
    cfg = write_config({"network": network()})
    status, _, err = run(["sweep", "--config", cfg], capsys)
    assert status == EXIT_INPUT


def test_sweep_unmet_tolerance_exit(write_config, capsys):
    cfg = write_config({
        "network": network(n_leaves=2),
        "solver": {"tol": 1e-30},
        "sweep": {"axes": [{"parameter": "coupling", "values": [0.05]}]},
    })
    status, out, _ = run(["sweep", "--config", cfg], capsys)
    assert status == EXIT_TOL
    assert table(out)[0]["failed"] == "1"


# ------------------------------------------------------------- reproduce


def test_reproduce_unknown_id(capsys):
    status, _, err = run(["reproduce", "fig9z"], capsys)
    assert status == EXIT_INPUT
    for fid in FIGURE_IDS:
        assert fid in err


def test_every_figure_has_a_preset():
    assert set(FIGURE_IDS) == set(PRESETS)
    assert get_preset("fig4a").interpretive and get_preset("fig6").interpretive
    with pytest.raises(KeyError):
        get_preset("fig7")


def test_reproduce_fig1b(tmp_path, capsys):
    status, out, _ = run(["reproduce", "fig1b", "--output", str(tmp_path)], capsys)
    assert status == EXIT_OK
    path = tmp_path / "fig1b_pair01.csv"
    assert str(path) in out
    text = path.read_text()
    meta = read_metadata(text)
    assert meta["figure"] == "fig1b" and meta["config"]["network"]["coupling"] == 0.05
    s2 = np.array([float(r["s2"]) for r in table(text)])
    assert np.sum((s2 > np.roll(s2, 1)) & (s2 > np.roll(s2, -1))) == 1


def test_reproduce_fig1c_json(tmp_path, capsys):
    status, _, _ = run(["reproduce", "fig1c", "--output", str(tmp_path), "--format", "json"], capsys)
    assert status == EXIT_OK
    data = json.loads((tmp_path / "fig1c_pair01.json").read_text())
    assert max(abs(v) for v in data["data"]["s2_1"]) < 1e-8


@pytest.mark.slow
def test_reproduce_fig4a_small(tmp_path, capsys):
    status, _, _ = run(["reproduce", "fig4a", "--output", str(tmp_path), "--points", "2"], capsys)
    assert status == EXIT_OK
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["fig4a_gain_ratio.csv", "fig4a_hub_leaf_gain.csv"]
    assert len(table((tmp_path / "fig4a_hub_leaf_gain.csv").read_text())) == 4
    meta = read_metadata((tmp_path / "fig4a_gain_ratio.csv").read_text())
    assert meta["interpretive"] is True


def test_set_accepts_exponent_floats(write_config, capsys):
    cfg = write_config({"network": network(n_leaves=0)})
    status, out, _ = run(["steady", "--config", cfg, "--set", "solver.tol=1e-12", "--set", "solver.method=direct"], capsys)
    assert status == EXIT_OK
    meta = read_metadata(out)
    assert meta["config"]["solver"] == {"tol": 1e-12, "max_iterations": 500, "method": "direct"}
