import csv
import json
import math

import numpy as np
import pytest

from kdvtrail import cli

SMALL = ["--N", "512", "--L", "40"]


@pytest.fixture(autouse=True)
def _in_tmp(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_usage_errors(capsys):
    assert cli.main(["simulate", "--epsilon", "0"]) == cli.EXIT_USAGE
    assert cli.main(["nonsense"]) == cli.EXIT_USAGE
    assert cli.main(["simulate", "--profile", "missing-file.txt"]) == cli.EXIT_USAGE
    assert cli.main(["--version"]) == cli.EXIT_OK


def test_simulate_at_time_zero_echoes_data(capsys, tmp_path):
    code, rep = run(["simulate", "--t", "0", *SMALL, "--output", "u0.csv"], capsys)
    assert code == 0 and rep["steps"] == 0
    header, data = read_csv("u0.csv")
    assert header == ["x", "u"]
    assert np.array_equal(data[:, 1], -1.0 / np.cosh(np.minimum(np.abs(data[:, 0]), 350.0)) ** 2)


def test_simulate_reproducible(capsys, tmp_path):
    argv = ["simulate", "--t", "0.05", "--epsilon", "0.2", *SMALL]
    code, rep = run(argv + ["--output", "a.csv"], capsys)
    assert code == 0 and rep["status"] == "ok" and rep["momentum_drift"] < 1e-8
    run(argv + ["--output", "b.csv"], capsys)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    run(argv + ["--output", "a.csv", "--report", "r1.json"], capsys)
    run(argv + ["--output", "a.csv", "--report", "r2.json"], capsys)
    assert (tmp_path / "r1.json").read_bytes() == (tmp_path / "r2.json").read_bytes()


def test_simulate_failure_reports_json(capsys):
    code, rep = run(["simulate", "--t", "0.3", "--epsilon", "0.1", "--N", "512", "--L", "8"], capsys)
    assert code == cli.EXIT_COMPUTE and rep["reason"] == "DecayViolation"


def test_config_file_and_override(capsys, tmp_path):
    (tmp_path / "run.cfg").write_text("# small run\nt = 0\nN = 256\nL = 30\nepsilon = 0.1\noutput = c.csv\n")
    code, rep = run(["simulate", "--config", "run.cfg"], capsys)
    assert code == 0 and rep["N"] == 256 and rep["L"] == 30.0
    code, rep = run(["simulate", "--config", "run.cfg", "--N", "512"], capsys)
    assert rep["N"] == 512
    (tmp_path / "bad.cfg").write_text("N 256\n")
    assert cli.main(["simulate", "--config", "bad.cfg"]) == cli.EXIT_USAGE
    (tmp_path / "bad2.cfg").write_text("N = many\n")
    assert cli.main(["simulate", "--config", "bad2.cfg"]) == cli.EXIT_USAGE


def test_edges_at_catastrophe_time(capsys):
    code, rep = run(["edges", "--t", repr(math.sqrt(3) / 8)], capsys)
    assert code == cli.EXIT_COMPUTE and rep["reason"] == "NotPastCatastrophe"


def test_edges_payload(capsys):
    code, rep = run(["edges", "--t", "0.25"], capsys)
    assert code == 0
    for key in ("t", "x_minus", "x_plus", "u", "v", "gamma", "t_c", "x_c", "u_c"):
        assert key in rep
    assert rep["x_minus"] < rep["x_plus"]
    assert max(abs(rep[f"residual_trailing{i}"]) for i in (1, 2, 3)) < 1e-10


def test_edges_beyond_hump_floor(capsys):
    code, rep = run(["edges", "--t", "0.4"], capsys)
    assert code == cli.EXIT_COMPUTE and rep["reason"] == "HumpFloorReached"


def test_asymptotics_soliton_sum(capsys):
    code, meta = run(["asymptotics", "--mode", "soliton-sum", "--epsilon", "1e-5", "--y-range", "-1", "5",
                      "--points", "601", "--output", "s.csv"], capsys)
    assert code == 0 and meta["k_window"][0] == 0
    header, data = read_csv("s.csv")
    assert header == ["x", "y", "u_approx", "terms_used"]
    y, u = data[:, 1], data[:, 2]
    top = meta["u"] + 2 * (meta["v"] - meta["u"])
    # neighbouring pulses add tails of order sqrt(eps) on top of each peak
    assert abs(u.max() - top) < 10 * math.sqrt(1e-5)
    # the first peak sits near y = 1/2
    assert abs(y[np.argmax(np.where(y < 1.0, u, -np.inf))] - 0.5) < 0.25


def test_asymptotics_flat_left_of_pulses(capsys):
    code, meta = run(["asymptotics", "--epsilon", "1e-5", "--y-range", "-4", "-0.5", "--output", "f.csv"], capsys)
    _, data = read_csv("f.csv")
    assert code == 0 and np.all(np.abs(data[:, 2] - meta["u"]) < 10 * math.sqrt(1e-5))


def test_asymptotics_elliptic_dual_columns(capsys):
    code, meta = run(["asymptotics", "--mode", "elliptic", "--epsilon", "1e-2", "--points", "21",
                      "--output", "e.csv"], capsys)
    header, data = read_csv("e.csv")
    assert code == 0 and header[-2:] == ["u_theta", "u_dn"]
    assert np.all(np.isfinite(data[:, 4])) and np.max(np.abs(data[:, 4] - data[:, 5])) < 1e-6


def test_asymptotics_range_guards(capsys):
    assert cli.main(["asymptotics", "--x-range", "-2", "-1", "--y-range", "0", "1"]) == cli.EXIT_USAGE
    assert cli.main(["asymptotics", "--y-range", "1", "0"]) == cli.EXIT_USAGE
    assert cli.main(["asymptotics", "--epsilon", "-1"]) == cli.EXIT_USAGE


def test_compare_outside_oracle_scope(capsys):
    code, rep = run(["compare", "--epsilon", "1e-3"], capsys)
    assert code == cli.EXIT_COMPUTE and rep["reason"] == "OracleScope"


def test_validate(capsys):
    code, rep = run(["validate"], capsys)
    assert code == 0 and rep["passed"]
    for entry in rep["checks"]:
        assert {"name", "value", "tolerance", "margin", "passed"} <= set(entry)
    code, rep = run(["validate", "--tolerance", "1e-30"], capsys)
    assert code == cli.EXIT_VALIDATE and rep["failed"]


def test_golden_writes_files(capsys, tmp_path):
    code, rep = run(["golden", "--output-dir", "g"], capsys)
    assert code == 0
    names = sorted(p.name for p in (tmp_path / "g").iterdir())
    assert names == ["catastrophe.json", "phases.json", "trailing_edge.json"]


def test_json_has_no_nan():
    text = cli.dumps({"a": math.nan, "b": [1.0, math.inf], "c": np.float64(2.5)})
    assert json.loads(text) == {"a": None, "b": [1.0, None], "c": 2.5}


def test_csv_uses_full_precision():
    text = cli.csv_text(["x"], [(1 / 3,), (7,)])
    assert text.splitlines() == ["x", "0.33333333333333331", "7"]
