import csv
import io
import json

import pytest

from beliefstock.cli import run


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def doc(capsys, *argv):
    code, out, err = call(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def test_validate(capsys):
    d = doc(capsys, "validate", "--model", "econ3")
    assert d["valid"] and d["N"] == 3 and d["myopic_range"] == [20, 35]


def test_validate_bad_file(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"demands": [1, 2]}')
    code, _, err = call(capsys, "validate", "--model", str(bad))
    assert code == 1 and "error" in err
    code, _, _ = call(capsys, "validate", "--model", str(tmp_path / "missing.json"))
    assert code == 2


def test_partition_formats(capsys):
    d = doc(capsys, "partition", "--model", "econ3", "--format", "polygons")
    assert sorted(p["label"] for p in d["polygons"]) == [20, 25, 30, 35]
    d = doc(capsys, "partition", "--model", "econ3")
    assert len(d["regions"]) == 4
    code, out, _ = call(capsys, "partition", "--model", "econ3", "--format", "csv")
    assert code == 0 and list(csv.reader(io.StringIO(out)))[0]
    code, _, _ = call(capsys, "partition", "--model", "attain_fail", "--format", "polygons")
    assert code == 2


def test_check(capsys):
    d = doc(capsys, "check", "--model", "econ3")
    assert d["holds"] and d["a3"] and d["a4"] and d["min_delta"] == 0
    d = doc(capsys, "check", "--model", "attain_fail", "--belief", "1,0")
    assert not d["holds"] and d["witnesses"] and d["min_delta"] > 0
    assert d["a2"]["holds"] is False


def test_solve(capsys, tmp_path):
    d = doc(capsys, "solve", "--model", "econ3", "--horizon", "2", "--belief", "0,0,1",
            "--inventory", "50")
    assert len(d["vectors"]) == 11 and d["query"]["value"] > 0
    code, _, _ = call(capsys, "solve", "--model", "econ3")
    assert code == 2
    out = tmp_path / "g.csv"
    code, _, _ = call(capsys, "solve", "--model", "econ3", "--horizon", "1", "--format", "csv",
                      "--output", str(out))
    assert code == 0 and out.read_text().startswith("horizon,gamma_1")


def test_solve_infinite_small(capsys, tmp_path):
    m = tmp_path / "one.json"
    m.write_text(json.dumps({"demands": [1, 2], "p": 1, "h": 1, "K": 0, "beta": 0.5,
                             "factored": {"P": [[1.0]], "QD": [[0.5, 0.5]]}}))
    d = doc(capsys, "solve", "--model", str(m), "--epsilon", "1e-4")
    assert d["report"]["converged"]


def test_bounds(capsys):
    d = doc(capsys, "bounds", "--model", "attain_fail", "--horizon", "2", "--belief", "1,0",
            "--inventory", "14")
    assert d["Delta"] == pytest.approx(0.1398, abs=1e-3)
    sh = d["shifted"]
    assert sh["lower"] <= sh["shifted_lower"] + 1e-9 <= sh["upper"] + 2e-9


def test_ssbounds(capsys):
    d = doc(capsys, "ssbounds", "--model", "econ3_k5", "--belief", "0,0,1")
    assert d["Sl"] == 35 and d["Su"] == 38
    d = doc(capsys, "ssbounds", "--model", "econ3_k5")
    assert any(r["label"] == [20, 20, 25, 36] for r in d["regions"])
    code, _, _ = call(capsys, "ssbounds", "--model", "econ3")
    assert code == 1


def test_sssolve(capsys):
    d = doc(capsys, "sssolve", "--model", "econ3_k5", "--horizon", "1", "--belief", "0,0,1",
            "--inventory", "10")
    assert d["horizon"] == 1 and d["query"]["action"]["order"]
    code, _, _ = call(capsys, "sssolve", "--model", "attain_fail", "--horizon", "1")
    assert code == 1


def test_simulate(capsys, tmp_path):
    out = tmp_path / "trace.csv"
    d = doc(capsys, "simulate", "--model", "econ3", "--horizon", "5", "--replications", "500",
            "--seed", "3", "--output", str(out), "--trace", "2")
    assert d["replications"] == 500 and d["absorption_violations"] == 0
    assert len(out.read_text().splitlines()) == 11
    again = doc(capsys, "simulate", "--model", "econ3", "--horizon", "5", "--replications", "500",
                "--seed", "3")
    assert again["mean"] == d["mean"]


def test_export_plot(capsys):
    d = doc(capsys, "export-plot", "--model", "econ3", "--figure", "xhat")
    assert d["points"][0]["label"] == "xhat"
    d = doc(capsys, "export-plot", "--model", "econ3_k5", "--figure", "ss")
    assert len(d["polygons"]) > 4
    code, _, _ = call(capsys, "export-plot", "--model", "attain_fail")
    assert code == 2


def test_usage_errors(capsys):
    assert call(capsys, "bogus")[0] == 2
    assert call(capsys, "check", "--model", "econ3", "--belief", "1,1,1")[0] in (1, 2)
    assert call(capsys, "check", "--model", "econ3", "--belief", "x")[0] == 2
