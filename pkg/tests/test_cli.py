import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import random_case
from rangebound import ErrorMode, Kind, MeasurementBatch, Scenario, localize
from rangebound.bench import TrialConfig, gen_scenario
from rangebound.cli import main
from rangebound.errors import EmptyLocalizationSet


@pytest.fixture
def scen_file(tmp_path):
    p = tmp_path / "scen.json"
    p.write_text(random_case(0, m=4).to_json())
    return p


def _empty_instance():
    cfg = TrialConfig(m=4, outlier_prob=0.9)
    for i in range(50):
        s = gen_scenario(cfg, i)
        try:
            localize(s)
        except EmptyLocalizationSet:
            return s
    raise AssertionError("no empty instance")


def test_localize_stdout(scen_file, capsys):
    assert main(["localize", str(scen_file), "--outer-ellipsoid", "--directional", "1,0", "--seed-verify"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["schema"] == "rangebound/1"
    assert "outer_ellipsoid" in doc and "directional" in doc


def test_localize_to_file_and_basis(scen_file, tmp_path, capsys):
    out = tmp_path / "res.json"
    assert main(["localize", str(scen_file), "--basis", "standard", "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    np.testing.assert_allclose(doc["box"]["basis"], np.eye(2))
    assert capsys.readouterr().out == ""


def test_noiseless_file(tmp_path, capsys):
    A = np.array([[0.0, 0.0], [900.0, 50.0], [-200.0, 800.0]])
    x = np.array([12.0, 34.0])
    s = Scenario(A, MeasurementBatch(Kind.PLAIN, ErrorMode.RELATIVE, np.linalg.norm(A - x, axis=1), 0, 0), x)
    p = tmp_path / "s.json"
    p.write_text(s.to_json())
    assert main(["localize", str(p), "--seed-verify"]) == 0
    doc = json.loads(capsys.readouterr().out)
    np.testing.assert_allclose(doc["estimates"]["c_b"], x, atol=1e-4)


def test_exit_codes(tmp_path, capsys, caplog):
    bad = tmp_path / "bad.json"
    bad.write_text('{"dim": 2}')
    assert main(["localize", str(bad)]) == 2
    assert main(["localize", str(tmp_path / "missing.json")]) == 2
    empty = tmp_path / "empty.json"
    empty.write_text(_empty_instance().to_json())
    assert main(["localize", str(empty)]) == 3
    assert "empty localization set" in caplog.text and "[feasibility]" in caplog.text
    assert main(["localize", str(empty), "--preprocess"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["diagnostics"]["enlargement"]["outliers_detected"] is True


def test_seed_verify_needs_truth(tmp_path):
    s = random_case(0)
    p = tmp_path / "s.json"
    p.write_text(Scenario(s.anchors, s.batch).to_json())
    assert main(["localize", str(p), "--seed-verify"]) == 2


def test_seed_verify_detects_violation(tmp_path, caplog):
    s = random_case(0, m=4)
    wrong = Scenario(s.anchors, s.batch, s.true_location + 500.0)
    p = tmp_path / "s.json"
    p.write_text(wrong.to_json())
    assert main(["localize", str(p), "--seed-verify"]) == 5
    assert "containment violated" in caplog.text


def test_bench_header_only(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["bench", "--table", "1", "--trials", "0", "-o", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert len(rows) == 1 and rows[0][0] == "m" and rows[0][-1] == "eta_vol"
    assert json.loads(out.with_suffix(".json").read_text())["schema"] == "rangebound/1"


def test_bench_small_table(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["bench", "--table", "7", "--trials", "2", "--m-max", "4", "--mc-samples", "100", "-o", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert [r[0] for r in rows[1:]] == ["3", "4"]
    side = json.loads(out.with_suffix(".json").read_text())
    assert side["cells"][0]["config"]["outlier_prob"] == 0.1


def test_bench_inline_and_config(tmp_path, capsys):
    assert main(["bench", "--n", "3", "--trials", "1", "--m-max", "4", "--mc-samples", "50"]) == 0
    assert capsys.readouterr().out.splitlines()[1].startswith("4,")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 2, "error_level": 0.1, "trials": 1, "mc_samples": 50}))
    assert main(["bench", "--config", str(cfg), "--m-max", "3"]) == 0
    assert main(["bench"]) == 2


def test_plot(tmp_path, scen_file):
    res = tmp_path / "r.json"
    svg = tmp_path / "p.svg"
    assert main(["localize", str(scen_file), "-o", str(res)]) == 0
    assert main(["plot", str(scen_file), str(res), str(svg)]) == 0
    assert svg.read_text().count('class="annulus-inner"') == 4


def test_plot_rejects_3d(tmp_path):
    s = random_case(0, n=3, m=4)
    p, r = tmp_path / "s.json", tmp_path / "r.json"
    p.write_text(s.to_json())
    assert main(["localize", str(p), "-o", str(r)]) == 0
    assert main(["plot", str(p), str(r), str(tmp_path / "x.svg")]) == 2


def test_console_script(scen_file):
    out = subprocess.run([sys.executable, "-m", "rangebound.cli", "localize", str(scen_file)],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["schema"] == "rangebound/1"
