import csv
import io
import json
import subprocess
import sys

import pytest

from amenlab.cli import main


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_density_correlate_csv(capsys):
    code, out, _ = _run(capsys, "density", "correlate", "--system", "fibonacci", "--element", "swap:01",
                        "--n", "1,4,16,64", "--eps", "1e-9")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["n", "g_id", "value", "error_bound", "pass"]
    assert len(rows) == 4
    assert all(0 < float(r["value"]) <= 1 and float(r["error_bound"]) <= 1e-9 for r in rows)


def test_mean_twist_shift(capsys):
    code, out, _ = _run(capsys, "mean", "twist", "--element", "shift")
    d = json.loads(out)
    assert code == 0
    assert {k: d[k] for k in ("set", "g")} == {"set": [0], "g": "shift"}
    assert d["schema"].startswith("amenlab.mean.twist/")


def test_json_has_schema(capsys):
    code, out, _ = _run(capsys, "density", "fn", "--element", "shift", "--n", "1,2", "--format", "json")
    d = json.loads(out)
    assert code == 0 and d["schema"] == "amenlab.density.fn/1"
    assert [r["n"] for r in d["rows"]] == [1, 2]


def test_config_errors_exit_2(capsys):
    assert _run(capsys, "density", "correlate", "--element", "swap:0")[0] == 2
    assert _run(capsys, "mean", "sample")[0] == 2
    assert _run(capsys, "density", "correlate", "--eps", "1e-20")[0] == 2
    assert _run(capsys, "density", "correlate", "--n", "0")[0] == 2
    assert _run(capsys, "subshift", "point", "--system", "nope")[0] == 2
    assert _run(capsys, "element", "build", "--element", "swap:01", "--format", "csv")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["density", "bogus"])
    assert exc.value.code == 2


def test_failed_check_exit_1(capsys):
    code, out, _ = _run(capsys, "stab", "blocks", "--element", "shift")
    assert code == 1 and json.loads(out)["ok"] is False


def test_subshift_commands(capsys, tmp_path):
    code, out, _ = _run(capsys, "subshift", "language", "--length", "2")
    assert code == 0 and json.loads(out)["words"] == ["00", "01", "10"]
    code, out, _ = _run(capsys, "subshift", "point", "--window", "4", "--system", "thue-morse")
    assert json.loads(out)["word"][4:] == "0110"
    cfg = tmp_path / "fib.json"
    cfg.write_text(json.dumps({"alphabet": ["0", "1"], "rules": {"0": "01", "1": "0"}, "seed": ["0", "1"]}))
    code, out, _ = _run(capsys, "subshift", "recurrence", "--system", str(cfg), "--length", "3")
    assert code == 0 and [r["value"] for r in json.loads(out)["rows"]] == [3, 6, 10]


def test_element_commands(capsys, tmp_path):
    code, out, _ = _run(capsys, "element", "build", "--element", "comm:01,00100")
    el = json.loads(out)["elements"][0]
    assert code == 0 and el["exponent_bound"] >= 1
    path = tmp_path / "el.json"
    path.write_text(json.dumps({"radius": el["radius"], "rule": el["rule"]}))
    code, out, _ = _run(capsys, "element", "verify", "--element", str(path), "--element", "swap:01")
    assert code == 0
    code, out, _ = _run(capsys, "element", "embed", "--element", "shift", "--window", "3")
    assert json.loads(out)["elements"][0]["displacements"] == [1] * 7


def test_map_json_path(capsys, tmp_path):
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"kind": "table", "table": {"0": 5, "5": 0}}))
    code, out, _ = _run(capsys, "density", "fn", "--element", str(path), "--n", "1")
    assert code == 0
    assert float(list(csv.DictReader(io.StringIO(out)))[0]["value"]) != 0


def test_mean_commands(capsys, tmp_path):
    code, out, _ = _run(capsys, "mean", "boost", "--n", "64", "--k", "5")
    row = list(csv.DictReader(io.StringIO(out)))[0]
    assert code == 0 and float(row["value"]) == pytest.approx(1 - 2 ** -5)
    target = tmp_path / "s.json"
    assert _run(capsys, "mean", "sample", "--seed", "3", "--count", "4", "--out", str(target))[0] == 0
    first = target.read_text()
    _run(capsys, "mean", "sample", "--seed", "3", "--count", "4", "--out", str(target))
    assert target.read_text() == first and len(json.loads(first)["sets"]) == 4
    code, out, _ = _run(capsys, "mean", "defect", "--n", "1,4")
    assert code == 0 and len(list(csv.DictReader(io.StringIO(out)))) == 4


def test_stab_commands(capsys):
    code, out, _ = _run(capsys, "stab", "pattern", "--n", "2", "--window", "5000")
    assert code == 0 and json.loads(out)["rows"][0]["value"] == 12
    code, out, _ = _run(capsys, "stab", "order", "--E", "2", "--window", "100")
    assert code == 0
    code, out, _ = _run(capsys, "stab", "blocks", "--E", "2")
    d = json.loads(out)
    assert code == 0 and d["max_block"] <= d["max_size_bound"] and d["group_order"] >= 1


def test_density_lemmas(capsys):
    code, out, _ = _run(capsys, "density", "lemmas", "--n", "1,3")
    assert code == 0
    assert all(r["pass"] == "True" for r in csv.DictReader(io.StringIO(out)))


def test_report_deterministic(tmp_path):
    cmd = [sys.executable, "-m", "amenlab", "report", "all", "--seed", "7"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b
    d = json.loads(a)
    assert d["ok"] and all(d["checks"].values())
