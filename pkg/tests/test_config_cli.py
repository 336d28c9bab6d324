import csv
import io
import json
import math
import subprocess
import sys

import pytest

from scatternet.cli import COMMANDS, build_parser, main
from scatternet.config import ConfigError, parse_config
from scatternet.core import TransferMatrix
from scatternet.formats import CSV_HEADER, fmt, read_sweep_csv, reports_json
from scatternet.network import Leaf, Parallel


def cfg_text(network, sweep=None, **extra):
    raw = {"network": network}
    if sweep is not None:
        raw["sweep"] = sweep
    raw.update(extra)
    return json.dumps(raw)


FREE_K = {"type": "free", "length": 2.0, "k": {"param": "k"}}
SWEEP_K = {"parameter": "k", "lo": 0.5, "hi": 2.0, "steps": 11}

EP_NETWORK = {
    "type": "pt",
    "a": {"param": "w", "scale": 0.0, "offset": 1.0},
    "b": {"param": "w"},
    "c": 0.0,
}


def write_cfg(tmp_path, text, name="run.json"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# -- configuration ------------------------------------------------------------

def test_minimal_config():
    cfg = parse_config(cfg_text(FREE_K, SWEEP_K))
    assert cfg.sweep.steps == 11 and cfg.warnings == []
    leaf = cfg.build({"k": 1.0})
    assert isinstance(leaf, Leaf)
    assert leaf.matrix.m11 == pytest.approx(complex(math.cos(2.0), math.sin(2.0)))


def test_single_branch_parallel_warns():
    net = {"type": "parallel", "branches": [{"node": FREE_K}]}
    cfg = parse_config(cfg_text(net, SWEEP_K))
    assert any("N=1 parallel is a pass-through" in w for w in cfg.warnings)
    assert isinstance(cfg.build({"k": 1.0}), Parallel)


def test_steps_below_two():
    with pytest.raises(ConfigError) as info:
        parse_config(cfg_text(FREE_K, dict(SWEEP_K, steps=1)))
    assert any(e.startswith("/sweep/steps:") for e in info.value.errors)


def test_all_errors_are_collected():
    net = {"type": "serial", "children": [
        {"type": "free", "k": 1.0},
        {"type": "warp"},
        {"type": "matrix", "m": [[1, 0]]},
    ]}
    with pytest.raises(ConfigError) as info:
        parse_config(cfg_text(net, {"parameter": "k", "lo": 2.0, "hi": 1.0, "steps": 0}))
    paths = [e.split(":")[0] for e in info.value.errors]
    for p in ("/sweep/steps", "/sweep/hi", "/network/children/0/length",
              "/network/children/1/type", "/network/children/2/m"):
        assert p in paths, info.value.errors


def test_unbound_sweep_parameter():
    with pytest.raises(ConfigError) as info:
        parse_config(cfg_text({"type": "free", "length": 1.0, "k": 1.0}, SWEEP_K))
    assert info.value.errors[0].startswith("/sweep/parameter")


def test_bad_json_and_missing_network():
    with pytest.raises(ConfigError):
        parse_config("{not json")
    with pytest.raises(ConfigError) as info:
        parse_config(json.dumps({"sweep": SWEEP_K}))
    assert "/network: required field missing" in info.value.errors


def test_complex_forms_and_bindings():
    net = {"type": "matrix", "m": [[[1, 2], {"re": 0, "im": 1}], [0, {"param": "x", "scale": 2, "offset": 1}]]}
    cfg = parse_config(cfg_text(net, {"parameter": "x", "lo": 0, "hi": 1, "steps": 2}))
    m = cfg.build({"x": 3.0}).matrix
    assert m.m11 == 1 + 2j and m.m12 == 1j and m.m22 == 7


def test_every_node_type_builds():
    net = {"type": "serial", "children": [
        {"type": "pt", "a": [1, 1], "b": 1, "c": 1},
        {"type": "pt_table", "omega": [0, 1], "a": [1, 1], "b": [0, 1], "c": [0, 0], "at": {"param": "w"}},
        {"type": "bragg", "n0": 1.5, "n1": 0.01, "n2": 0.01, "delta": 0.2, "k": 10, "length": 1},
        {"type": "repeat", "count": 3, "child": {"type": "free", "length": 0.3, "k": 1.0}},
        {"type": "parallel", "branches": [{"node": {"type": "free", "length": 1, "k": 1}, "k": 1.2},
                                          {"node": {"type": "free", "length": 2, "k": 1}}],
         "vertex_in": {"V0": 0.3}, "reference": 1},
        {"type": "ab_ring", "k": 1.0, "flux_phase": 0.4, "length": 6.0},
    ]}
    cfg = parse_config(cfg_text(net, {"parameter": "w", "lo": 0, "hi": 1, "steps": 3}))
    assert len(cfg.build({"w": 0.5}).children) == 6


def test_reference_out_of_range():
    net = {"type": "parallel", "branches": [{"node": FREE_K}, {"node": FREE_K}], "reference": 2}
    with pytest.raises(ConfigError) as info:
        parse_config(cfg_text(net, SWEEP_K))
    assert info.value.errors == ["/network/reference: must be < number of branches (2)"]


# -- formats ------------------------------------------------------------------

def test_fmt_round_trips():
    for x in (0.1, 1 / 3, 2.0**-1074, 1e308, -0.0):
        assert float(fmt(x)) == x
    assert fmt(math.nan) == "nan" and fmt(-math.inf) == "-inf"


def test_json_complex_and_nonfinite():
    out = json.loads(reports_json({"z": 1 + 2j, "x": math.nan, "m": TransferMatrix.identity().mat}))
    assert out["z"] == {"re": 1.0, "im": 2.0}
    assert out["x"] == "nan"
    assert out["m"][0][0] == {"re": 1.0, "im": 0.0}


# -- command line -------------------------------------------------------------

def test_every_subcommand_has_help(capsys):
    parser = build_parser()
    for name in COMMANDS:
        with pytest.raises(SystemExit) as info:
            parser.parse_args([name, "--help"])
        assert info.value.code == 0
        text = capsys.readouterr().out
        for flag in ("--out", "--steps", "--tol", "--threads", "--seed"):
            assert flag in text
        assert "default" in text


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "scatternet.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "selftest" in res.stdout


def test_compose_identity(tmp_path, capsys):
    path = write_cfg(tmp_path, cfg_text({"type": "matrix", "m": [[1, 0], [0, 1]]}))
    assert main(["compose", "--config", path]) == 0
    out = capsys.readouterr().out
    assert "t = 1 0j" in out and "T = 1" in out


def test_usage_errors(tmp_path, capsys):
    assert main(["compose"]) == 1
    assert main(["sweep", "--config", write_cfg(tmp_path, "[]")]) == 1
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1
    capsys.readouterr()


def test_io_error(tmp_path, capsys):
    assert main(["compose", "--config", str(tmp_path / "missing.json")]) == 3
    assert "I/O error" in capsys.readouterr().err


def test_numeric_failure_exit(tmp_path, capsys):
    net = {"type": "repeat", "count": 2, "child": {"type": "matrix", "m": [[2, 0], [0, 1]]}}
    assert main(["compose", "--config", write_cfg(tmp_path, cfg_text(net))]) == 2
    assert "NotUnimodular" in capsys.readouterr().err


def test_sweep_csv_is_reparseable(tmp_path, capsys):
    path = write_cfg(tmp_path, cfg_text(FREE_K, SWEEP_K, output={"basename": "free"}))
    assert main(["sweep", "--config", path, "--out", str(tmp_path / "o")]) == 0
    text = (tmp_path / "o" / "free.csv").read_bytes().decode()
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == CSV_HEADER and len(rows) == 12
    parsed = read_sweep_csv(text)
    assert all(abs(r["T"] - 1) < 1e-14 for r in parsed)
    capsys.readouterr()


def test_sweep_threads_env(tmp_path, monkeypatch, capsys):
    path = write_cfg(tmp_path, cfg_text(FREE_K, SWEEP_K))
    monkeypatch.setenv("SCATTERNET_THREADS", "3")
    assert main(["sweep", "--config", path, "--out", str(tmp_path / "a")]) == 0
    monkeypatch.setenv("SCATTERNET_THREADS", "many")
    assert main(["sweep", "--config", path, "--out", str(tmp_path / "b")]) == 1
    assert main(["sweep", "--config", path, "--threads", "-2", "--out", str(tmp_path / "b")]) == 1
    capsys.readouterr()


def test_exceptional_points_command(tmp_path, capsys):
    text = cfg_text(EP_NETWORK, {"parameter": "w", "lo": -3.0, "hi": 3.0, "steps": 121},
                    analyses=[{"kind": "exceptional_points", "mode": "single"}])
    path = write_cfg(tmp_path, text)
    assert main(["exceptional-points", "--config", path, "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "run_exceptional_points.json").read_text())
    assert [round(r["omega"], 9) for r in data["reports"]] == [-2.0, 2.0]
    assert data["reports"][0]["crossing"] == "broken->unbroken"
    assert main(["exceptional-points", "--config", path, "--mode", "parallel", "--N", "1"]) == 1
    capsys.readouterr()


def test_singularities_command(tmp_path, capsys):
    net = {"type": "matrix", "m": [[1, 1], [{"param": "w", "offset": -3.0}, {"param": "w", "offset": -2.0}]]}
    path = write_cfg(tmp_path, cfg_text(net, {"parameter": "w", "lo": 0.0, "hi": 5.0, "steps": 101}))
    assert main(["singularities", "--config", path, "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "run_singularities.json").read_text())
    assert len(data["reports"]) == 1 and abs(data["reports"][0]["omega_c"] - 2.0) < 1e-12
    capsys.readouterr()


def test_atr_command(tmp_path, capsys):
    net = {"type": "bragg", "n0": 1.5, "n1": 0.05, "n2": 0.05, "delta": {"param": "d"}, "k": 10.0, "length": 2.0}
    path = write_cfg(tmp_path, cfg_text(net, {"parameter": "d", "lo": -0.5, "hi": 0.5, "steps": 5}))
    assert main(["atr", "--config", path, "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "run_atr.json").read_text())
    assert len(data["atr"]) == 5 and data["atr"][0]["direction"] == "left"
    capsys.readouterr()


def test_ab_ring_preset(tmp_path, capsys):
    assert main(["ab-ring", "--k", "1.0", "--L", "6.2832", "--flux-phase", "3.14159"]) == 0
    out = capsys.readouterr().out
    T = float(next(line for line in out.splitlines() if line.startswith("T = ")).split("=")[1])
    assert T < 1e-6
    assert main(["ab-ring", "--k", "0.7", "--flux-phase", "0.3", "--steps", "9", "--out", str(tmp_path)]) == 0
    assert len(read_sweep_csv((tmp_path / "run_ab_ring.csv").read_bytes().decode())) == 9
    assert main(["ab-ring", "--L", "-1"]) == 1
    capsys.readouterr()


def test_bragg_preset(tmp_path, capsys):
    assert main(["bragg", "--n1", "0.02", "--n2", "0.02", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "unidirectional_invisibility = True (left)" in out
    data = json.loads((tmp_path / "run_bragg.json").read_text())
    assert data["r_left"] == {"re": 0.0, "im": 0.0}
    assert main(["bragg", "--mode", "parallel", "--N", "3", "--delta", "0.1"]) == 0
    assert "parallel_invisibility_n2" in capsys.readouterr().out
    assert main(["bragg", "--N", "0"]) == 1
    capsys.readouterr()


def test_selftest_command(capsys):
    assert main(["selftest", "--seed", "3"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 9 and "FAIL" not in out
