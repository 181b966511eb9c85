"""Test the command line entry point end to end"""

import csv
import io
import json
import math

import pytest

from main_cli import CURVE_OUTPUT_COLUMNS, OPTIMUM_OUTPUT_COLUMNS, main, parse_axis
from src.models.exceptions import ConfigurationError

FAST = ["--scan-points", "50", "--x-spacing", "0.05", "--jump-nodes", "64"]


def run(tmp_path, *argv, name="out.txt"):
    path = tmp_path / name
    code = main([*argv, *FAST, "--out", str(path)])
    return code, path.read_text(encoding="utf-8") if path.exists() else ""


def read_csv(text):
    preamble = [line for line in text.splitlines() if line.startswith("#")]
    body = [line for line in text.splitlines() if not line.startswith("#")]
    rows = list(csv.reader(io.StringIO("\n".join(body))))
    return preamble, rows[0], rows[1:]


def test_curve_csv(tmp_path):
    code, text = run(tmp_path, "curve", "--tau-max-us", "2")
    assert code == 0
    preamble, header, rows = read_csv(text)
    assert header == CURVE_OUTPUT_COLUMNS
    assert len(rows) == 50
    assert "# physical.chi_over_2pi_mhz = 1.2" in preamble
    assert "# certification.tau_window_us = [0.05, 2]" in preamble
    assert "# numerics.jump_nodes = 64" in preamble
    assert float(rows[0][0]) == pytest.approx(0.05)
    assert text.endswith("\n") and "\r" not in text


def test_curve_gaussian_limit_efficiency(tmp_path):
    code, text = run(tmp_path, "curve", "--t1-us", "inf", "--tau-max-us", "2")
    assert code == 0
    _, header, rows = read_csv(text)
    column = header.index("eta_info")
    assert all(float(row[column]) == pytest.approx(0.45, abs=1e-4) for row in rows)


def test_curve_output_is_reproducible(tmp_path):
    args = ("curve", "--tau-min-us", "0.1", "--tau-max-us", "1", "--format", "json")
    _, first = run(tmp_path, *args, name="curve.json")
    _, second = run(tmp_path, *args, name="curve.json")
    assert first == second
    document = json.loads(first)
    assert set(document) == {"config", "columns", "data"}
    assert document["config"]["certification"]["tau_window_us"] == [0.1, 1.0]


def test_configuration_errors_exit_2(tmp_path):
    code, text = run(tmp_path, "curve", "--epsilon", "1.5")
    assert code == 2
    assert text == ""

    code, _ = run(tmp_path, "optimize", "--config", str(tmp_path / "missing.toml"))
    assert code == 2


def test_optimize_one_point_window(tmp_path):
    code, text = run(tmp_path, "optimize", "--tau-min-us", "1", "--tau-max-us", "1")
    assert code == 0
    _, header, rows = read_csv(text)
    assert header == OPTIMUM_OUTPUT_COLUMNS
    assert len(rows) == 1
    record = dict(zip(header, rows[0]))
    assert float(record["speedup"]) == 1.0
    assert float(record["tau_fid_us"]) == pytest.approx(1.0)
    assert "rate_boundary" in record["flags"]


def test_optimize_csv_and_json_agree(tmp_path):
    args = ("optimize", "--tau-max-us", "2")
    code_csv, csv_text = run(tmp_path, *args, "--format", "csv", name="opt.csv")
    code_json, json_text = run(tmp_path, *args, "--format", "json", name="opt.json")
    assert code_csv == code_json == 0

    _, header, rows = read_csv(csv_text)
    document = json.loads(json_text)
    assert document["columns"] == header
    for name, from_csv, from_json in zip(header, rows[0], document["data"][0]):
        if name == "flags":
            assert from_csv == from_json
        else:
            assert float(from_csv) == pytest.approx(from_json, rel=5e-9)


def test_sweep_csv(tmp_path):
    code, text = run(
        tmp_path, "sweep", "--tau-max-us", "2", "--axis1", "t1=20,inf", "--axis2", "tau_oh=5,15"
    )
    assert code == 0
    preamble, header, rows = read_csv(text)
    assert header == ["axis1_value", "axis2_value", "speedup", "flag"]
    assert len(rows) == 4
    assert [(row[0], row[1]) for row in rows] == [("20", "5"), ("20", "15"), ("inf", "5"), ("inf", "15")]
    assert "# axis1.name = t1" in preamble


def test_sweep_json(tmp_path):
    code, text = run(
        tmp_path, "sweep", "--tau-max-us", "2", "--format", "json",
        "--axis1", "eta:0.4:0.5:2", "--axis2", "n_bar=60",
    )
    assert code == 0
    document = json.loads(text)
    assert [axis["name"] for axis in document["axes"]] == ["eta", "n_bar"]
    assert document["axes"][0]["values"] == pytest.approx([0.4, 0.5])
    assert len(document["data"]) == 2 and len(document["data"][0]) == 1
    assert len(document["flags"]) == 2


@pytest.mark.parametrize(
    "axis1, axis2",
    [
        ("eta:0.3:0.7:2", "eta:0.3:0.7:2"),
        ("eta:0.3:0.7", "n_bar:40:120:2"),
        ("omega:1:2:2", "n_bar:40:120:2"),
        ("t1:10:inf:3", "n_bar:40:120:2"),
    ],
)
def test_sweep_bad_axes_exit_2(tmp_path, axis1, axis2):
    code, _ = run(tmp_path, "sweep", "--axis1", axis1, "--axis2", axis2)
    assert code == 2


def test_parse_axis_units():
    axis = parse_axis("tau_oh:5:30:6", "axis1")
    assert axis.values[0] == pytest.approx(5e-6)
    assert axis.values[-1] == pytest.approx(30e-6)

    axis = parse_axis("n_bar:40:120:3:log", "axis2")
    assert axis.spacing == "log"

    axis = parse_axis("t1=30, inf", "axis1")
    assert axis.values[0] == pytest.approx(30e-6)
    assert math.isinf(axis.values[1])

    with pytest.raises(ConfigurationError):
        parse_axis("eta:a:b:2", "axis1")


def test_distributions(tmp_path):
    code, text = run(tmp_path, "distributions", "--tau-us", "0.5")
    assert code == 0
    preamble, header, rows = read_csv(text)
    assert header == ["x", "p_ground", "p_excited", "p_excited_no_decay"]
    assert "# distributions.tau_us = 0.5" in preamble
    assert len(rows) > 100


def test_overhead(tmp_path):
    code, text = run(tmp_path, "overhead", "--tau-max-us", "2", "--tau-oh-list", "5,15")
    assert code == 0
    _, header, rows = read_csv(text)
    assert header[0] == "tau_oh_us"
    assert [float(row[0]) for row in rows] == [5.0, 15.0]

    code, _ = run(tmp_path, "overhead", "--tau-oh-list", "5,x")
    assert code == 2


@pytest.mark.slow
def test_validate_passes_with_default_numerics(tmp_path):
    path = tmp_path / "validate.csv"
    code = main(["validate", "--out", str(path)])
    _, header, rows = read_csv(path.read_text(encoding="utf-8"))
    assert header == ["check", "passed", "value", "threshold"]
    assert all(row[1] == "true" for row in rows), rows
    assert code == 0


@pytest.mark.slow
def test_validate_detects_too_few_jump_nodes(tmp_path):
    path = tmp_path / "validate.csv"
    code = main(["validate", "--jump-nodes", "2", "--out", str(path)])
    _, _, rows = read_csv(path.read_text(encoding="utf-8"))
    failed = {row[0] for row in rows if row[1] == "false"}
    assert "jump_node_convergence" in failed
    assert code == 1
