import csv
import json
from pathlib import Path

import numpy as np
import pytest

from dcmlab.cli import main
from dcmlab.errors import ScenarioError
from dcmlab.formats import matrix_from_json
from dcmlab.scenario import load_scenario, parse_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

BELL_DOC = {
    "name": "bell",
    "shape": [2, 2],
    "scheme": {"type": "bell", "which": "PhiPlus"},
    "grid": {"window_length": 1.0, "n_points": 4},
    "n_windows": 20,
    "centering": "true_mean_zero",
    "seed": 11,
    "checks": {"max_trace_distance": 1e-10},
}


def write_doc(tmp_path, doc, name="s.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_run_bell_exit_zero_and_report(tmp_path, capsys):
    code = run_cli("run", SCENARIOS / "bell_phiplus.json", "--out", tmp_path)
    assert code == 0
    report = json.loads((tmp_path / "bell_phiplus.report.json").read_text())
    assert report["passed"]
    assert report["estimate"]["trace_distance_to_target"] <= 1e-10
    assert report["schedule"]["allocation"] == [4, 4]
    assert report["schedule"]["randomizer"]["magnitude"] == pytest.approx(2 ** 0.25, abs=1e-15)
    assert "PASS trace_distance_to_target" in capsys.readouterr().out


def test_run_writes_trajectory_csv(tmp_path):
    assert run_cli("run", write_doc(tmp_path, BELL_DOC), "--traj", "--out", tmp_path) == 0
    with open(tmp_path / "bell.traj.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:2] == ["t", "segment_label"]
    assert len(rows) == 1 + 20 * 4


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("DCMLAB_OUT", str(tmp_path / "envout"))
    assert run_cli("run", write_doc(tmp_path, BELL_DOC)) == 0
    assert (tmp_path / "envout" / "bell.report.json").exists()


def test_report_byte_identical_across_runs_and_threads(tmp_path):
    doc = dict(BELL_DOC, centering="empirical", n_windows=50, checks={})
    path = write_doc(tmp_path, doc)
    outs = []
    for i, threads in enumerate([1, 1, 4]):
        out = tmp_path / f"o{i}"
        run_cli("run", path, "--out", out, "--threads", threads)
        outs.append((out / "bell.report.json").read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_seed_flag_changes_result(tmp_path):
    doc = dict(BELL_DOC, centering="empirical", checks={})
    path = write_doc(tmp_path, doc)
    run_cli("run", path, "--out", tmp_path / "a")
    run_cli("run", path, "--out", tmp_path / "b", "--seed", 12345)
    a = (tmp_path / "a" / "bell.report.json").read_text()
    b = (tmp_path / "b" / "bell.report.json").read_text()
    assert a != b
    assert json.loads(b)["seed"] == 12345


def test_failed_check_exit_one(tmp_path):
    # |00><00| is a distance 1/sqrt(2) from the Bell projector
    target = {"rows": 4, "cols": 4, "re": [1.0] + [0.0] * 15, "im": [0.0] * 16}
    doc = dict(BELL_DOC, target=target, checks={"max_trace_distance": 1e-6})
    assert run_cli("run", write_doc(tmp_path, doc), "--out", tmp_path) == 1
    report = json.loads((tmp_path / "bell.report.json").read_text())
    assert not report["passed"]
    assert report["estimate"]["trace_distance_to_target"] == pytest.approx(np.sqrt(0.5), abs=1e-12)


def test_single_window_gives_rank_one_state(tmp_path):
    doc = dict(BELL_DOC, n_windows=1)
    assert run_cli("run", write_doc(tmp_path, doc), "--out", tmp_path) == 0
    report = json.loads((tmp_path / "bell.report.json").read_text())
    rho = matrix_from_json(report["estimate"]["rho"])
    eig = np.linalg.eigvalsh(rho)
    np.testing.assert_allclose(eig, [0, 0, 0, 1], atol=1e-12)


def test_degenerate_estimate_exit_three(tmp_path, capsys):
    # one window, centered by its own mean, leaves nothing
    doc = dict(BELL_DOC, n_windows=1, centering="empirical")
    assert run_cli("run", write_doc(tmp_path, doc), "--out", tmp_path) == 3
    assert "trace" in capsys.readouterr().err


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d.pop("shape"), "shape"),
    (lambda d: d["scheme"].update(type="ghz"), "scheme.type"),
    (lambda d: d["scheme"].update(which="PsiZero"), "scheme.which"),
    (lambda d: d.update(n_windows=0), "n_windows"),
    (lambda d: d.update(seed=-1), "seed"),
    (lambda d: d.update(centering="median"), "centering"),
    (lambda d: d.update(checks={"bogus": 1}), "checks"),
    (lambda d: d.update(randomizer="cauchy"), "randomizer"),
])
def test_config_errors_name_field(tmp_path, capsys, mutate, field):
    doc = json.loads(json.dumps(BELL_DOC))
    mutate(doc)
    assert run_cli("run", write_doc(tmp_path, doc), "--out", tmp_path) == 2
    assert f"error: {field}" in capsys.readouterr().err


def test_config_error_nested_component_path():
    doc = {
        "shape": [2, 2],
        "scheme": {"type": "mixed", "lambdas": [0.5, 0.5],
                   "components": [{"type": "bell"}, {"type": "pure", "psi": [1, 0, 0]}]},
    }
    with pytest.raises(ScenarioError) as info:
        parse_scenario(doc)
    assert info.value.path == "scheme.components[1].psi"


def test_invalid_json_exit_two(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert run_cli("run", path, "--out", tmp_path) == 2


def test_sweep_writes_three_rows(tmp_path):
    doc = dict(BELL_DOC, centering="empirical", checks={})
    assert run_cli("sweep", write_doc(tmp_path, doc), "--n", "10,100,1000", "--out", tmp_path) == 0
    with open(tmp_path / "bell.sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["n_windows"]) for r in rows] == [10, 100, 1000]
    assert set(rows[0]) >= {"n_windows", "trace_distance", "min_eigenvalue", "wallclock_s"}
    dists = [float(r["trace_distance"]) for r in rows]
    assert all(d <= 2 / n for d, n in zip(dists, [10, 100, 1000]))


@pytest.mark.parametrize("name, shape, centering", [
    ("bell_phiplus", "2,2", "true_mean_zero"),
    ("pure_unequal", "2,3", "empirical"),
])
def test_export_then_ingest_bit_identical(tmp_path, name, shape, centering):
    assert run_cli("run", SCENARIOS / f"{name}.json", "--out", tmp_path) == 0
    assert run_cli("export-traj", SCENARIOS / f"{name}.json", "--out", tmp_path) == 0
    window = load_scenario(SCENARIOS / f"{name}.json").grid.window_length
    code = run_cli("ingest", tmp_path / f"{name}.traj.csv", "--shape", shape,
                   "--window", window, "--centering", centering, "--out", tmp_path)
    assert code == 0
    direct = json.loads((tmp_path / f"{name}.report.json").read_text())["estimate"]["rho"]
    ingested = json.loads((tmp_path / f"{name}.traj.ingest.json").read_text())["estimate"]["rho"]
    assert json.dumps(direct) == json.dumps(ingested)


def test_ingest_empty_window_names_index(tmp_path, capsys):
    run_cli("export-traj", write_doc(tmp_path, BELL_DOC), "--out", tmp_path)
    path = tmp_path / "bell.traj.csv"
    lines = path.read_text().splitlines()
    # drop window 2 (rows 1 + 2*4 .. 1 + 3*4)
    kept = lines[:9] + lines[13:]
    gap = tmp_path / "gap.csv"
    gap.write_text("\n".join(kept) + "\n")
    code = run_cli("ingest", gap, "--shape", "2,2", "--window", "1.0", "--out", tmp_path)
    assert code == 2
    assert "[2]" in capsys.readouterr().err


def test_ingest_bad_row_reports_line(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("t,segment_label,x0_re,x0_im,y0_re,y0_im\n0.5,0,1,0,1,0\n0.7,0,oops,0,1,0\n")
    assert run_cli("ingest", path, "--shape", "1,1", "--window", "1.0", "--out", tmp_path) == 2
    assert ":3:" in capsys.readouterr().err


def test_bad_shape_argument_exits_via_argparse(tmp_path):
    with pytest.raises(SystemExit) as info:
        run_cli("ingest", tmp_path / "x.csv", "--shape", "2x2", "--window", "1")
    assert info.value.code == 2


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_scenarios_parse(path):
    scenario = load_scenario(path)
    assert scenario.n_windows >= 1
    assert scenario.target is not None
