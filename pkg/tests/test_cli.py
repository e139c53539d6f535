import csv
import json

import pytest

from apgauge.cli import G_COLUMNS, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_classify(tmp_path, capsys):
    code, out, _ = run(capsys, "classify", "--config", "inside_gap", "--out", str(tmp_path))
    assert code == 0
    doc = json.loads(out)
    assert doc["label"]["label"] == "res_inside_gap"
    assert doc["config"]["name"] == "inside_gap"
    assert (tmp_path / "classify-inside_gap.json").exists()


def test_bad_config_exit_code(tmp_path, capsys):
    code, _, err = run(capsys, "classify", "--config", "nope", "--out", str(tmp_path))
    assert code == 2
    assert "config" in err
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 1, "basis": ["1"], "N": 0,
                               "coefficients": [{"coeffs": [1], "re": 0.001}]}))
    code, _, err = run(capsys, "classify", "--config", str(bad), "--out", str(tmp_path))
    assert code == 2 and "N" in err


def test_missing_lambda(tmp_path, capsys):
    code, _, err = run(capsys, "classify", "--config", "mathieu", "--out", str(tmp_path))
    assert code == 2 and "lambda" in err


def test_g_scan(tmp_path, capsys):
    code, out, _ = run(capsys, "g-scan", "--config", "mathieu", "--eps", "0.01", "--points", "21",
                       "--out", str(tmp_path))
    assert code == 0
    with open(tmp_path / "g-scan-mathieu.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == G_COLUMNS
    assert len(rows) == 21
    # G = ξ² + O(ε²) away from the gaps
    assert all(abs(float(r["G"]) - float(r["xi"]) ** 2) < 1e-3 for r in rows)


def test_ids_scan_nonresonant(tmp_path, capsys):
    code, out, _ = run(capsys, "ids-scan", "--config", "nonresonant", "--points", "8", "--eps-max", "1e-3",
                       "--no-oracle", "--out", str(tmp_path))
    assert code == 0
    doc = json.loads(out)
    assert doc["label"]["label"] == "nonresonant"
    assert len(doc["expansion"]["fit"]["exponents"]) == 3


def test_shell(capsys):
    code, out, _ = run(capsys, "shell", "--config", "two_frequency", "--order", "1")
    assert code == 0
    assert out.splitlines()[0] == "c0,c1,value,order"


@pytest.mark.slow
def test_selfcheck(tmp_path, capsys):
    code, out, err = run(capsys, "selfcheck", "--out", str(tmp_path))
    assert code == 0
    assert err.count("PASS") == 10
    assert json.loads(out)["ok"]
