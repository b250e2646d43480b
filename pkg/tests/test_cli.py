import csv
import json

import pytest

from buddynet.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def synth_files(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_backers": 400, "n_projects": 30, "n_events": 2500, "buddy_boost": 0.5}))
    prefix = tmp_path / "t"
    code, out, _ = run(capsys, "synth", "--config", str(cfg), "--seed", "1", "--out-prefix", str(prefix))
    assert code == 0
    return prefix, json.loads(out)


def graph_args(prefix):
    return ["--backings", f"{prefix}.backings.csv", "--projects", f"{prefix}.projects.csv"]


def test_synth_writes_three_files(synth_files):
    prefix, report = synth_files
    truth = json.loads(open(f"{prefix}.truth.json").read())
    assert report["outputs"]["n_planted"] == truth["n_planted"] > 0
    assert report["parameters"]["seed"] == 1
    assert "config" in report["inputs"]


def test_buddy_numerator_covers_planted(synth_files, capsys):
    prefix, report = synth_files
    code, out, _ = run(capsys, "buddy", *graph_args(prefix))
    assert code == 0
    census = json.loads(out)["outputs"]
    truth = json.loads(open(f"{prefix}.truth.json").read())
    triples = {(p["founder"], p["shared_project"], p["backer"]) for p in truth["planted"]}
    assert census["numerator"] >= len(triples)
    assert set(census) == {"denominator", "numerator", "pooled_ratio", "per_pair_mean",
                           "mean_cobackers", "mean_satisfied"}


def test_buddy_case_dump(synth_files, capsys, tmp_path):
    prefix, _ = synth_files
    dump = tmp_path / "cases.csv"
    code, out, _ = run(capsys, "buddy", *graph_args(prefix), "--cases-out", str(dump))
    assert code == 0
    rows = list(csv.DictReader(dump.open()))
    census = json.loads(out)["outputs"]
    assert len(rows) == census["denominator"]
    assert sum(int(r["satisfied"]) for r in rows) == census["numerator"]


def test_cug_report_and_reproducibility(synth_files, capsys, tmp_path):
    prefix, _ = synth_files
    args = ["cug", *graph_args(prefix), "--trials", "20", "--seed", "7", "--hist-out", str(tmp_path / "h.csv")]
    code, out1, _ = run(capsys, *args)
    assert code == 0
    code, out2, _ = run(capsys, *args)
    r1, r2 = json.loads(out1), json.loads(out2)
    assert "p_value" in r1["outputs"]
    r1.pop("wall_time"), r2.pop("wall_time")
    assert r1 == r2
    assert r1["parameters"]["master_seed"] == 7
    hist = list(csv.DictReader((tmp_path / "h.csv").open()))
    assert sum(int(h["count"]) for h in hist) == 20


def test_cug_generated_seed_is_reported(synth_files, capsys):
    prefix, _ = synth_files
    code, out, err = run(capsys, "cug", *graph_args(prefix), "--trials", "3")
    assert code == 0
    seed = json.loads(out)["outputs"]["master_seed"]
    assert str(seed) in err


def test_cug_parallel_env_default(synth_files, capsys, monkeypatch):
    prefix, _ = synth_files
    base = ["cug", *graph_args(prefix), "--trials", "6", "--seed", "3"]
    _, serial, _ = run(capsys, *base, "--parallel", "1")
    monkeypatch.setenv("BUDDYNET_THREADS", "2")
    _, par, _ = run(capsys, *base)
    assert json.loads(serial)["outputs"] == json.loads(par)["outputs"]


def test_cug_csv_format(synth_files, capsys):
    prefix, _ = synth_files
    code, out, _ = run(capsys, "cug", *graph_args(prefix), "--trials", "4", "--seed", "1", "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "trial,simulated_ratio" and len(lines) == 5


def test_stats_empty_edges(tmp_path, capsys):
    (tmp_path / "b.csv").write_text("backer_id,project_id,timestamp\n")
    (tmp_path / "p.csv").write_text("project_id,founder_id,deadline\nA,f,10\nB,g,12\n")
    code, out, _ = run(capsys, "stats", "--backings", str(tmp_path / "b.csv"),
                       "--projects", str(tmp_path / "p.csv"), "--side", "project")
    assert code == 0
    summary = json.loads(out)["outputs"]["summary"]
    assert summary["zero_count"] == 2 == summary["n"]


def test_stats_csv_and_histogram(toy_dir, capsys, tmp_path):
    hist = tmp_path / "hist.csv"
    code, out, _ = run(capsys, "stats", "--backings", str(toy_dir / "backings.csv"),
                       "--projects", str(toy_dir / "projects.csv"), "--side", "backer",
                       "--format", "csv", "--hist-out", str(hist))
    assert code == 0
    row = next(csv.DictReader(out.splitlines()))
    assert row["side"] == "backer-out" and row["n"] == "2"
    assert hist.read_text().splitlines() == ["degree,count", "1,1", "2,1"]


def test_validate_report(toy_dir, capsys, tmp_path):
    out_file = tmp_path / "r.json"
    code, out, _ = run(capsys, "validate", "--backings", str(toy_dir / "backings.csv"),
                       "--projects", str(toy_dir / "projects.csv"), "--out", str(out_file))
    assert code == 0 and out == ""
    report = json.loads(out_file.read_text())
    assert report["outputs"]["ok"] is True
    assert report["inputs"]["backings"]["sha256"]


def test_input_error_exit_1(tmp_path, capsys):
    (tmp_path / "b.csv").write_text("backer_id,project_id,timestamp\na,P,5\na,P\n")
    (tmp_path / "p.csv").write_text("project_id,founder_id,deadline\nP,f,10\n")
    code, _, err = run(capsys, "buddy", "--backings", str(tmp_path / "b.csv"), "--projects", str(tmp_path / "p.csv"))
    assert code == 1
    assert "b.csv:3" in err
    code, _, err = run(capsys, "stats", "--backings", str(tmp_path / "missing.csv"), "--projects", str(tmp_path / "p.csv"))
    assert code == 1


def test_undefined_ratio_is_input_error(toy_dir, tmp_path, capsys):
    (tmp_path / "b.csv").write_text("backer_id,project_id,timestamp\nw,Pz,2\n")
    code, _, err = run(capsys, "cug", "--backings", str(tmp_path / "b.csv"),
                       "--projects", str(toy_dir / "projects.csv"), "--seed", "1")
    assert code == 1 and "undefined" in err


def test_bad_config_exit_1(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"buddy_boost": 3}')
    assert run(capsys, "synth", "--config", str(cfg), "--out-prefix", str(tmp_path / "x"))[0] == 1
    cfg.write_text("{not json")
    assert run(capsys, "synth", "--config", str(cfg), "--out-prefix", str(tmp_path / "x"))[0] == 1


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["cug", "--bogus"],
    ["stats", "--backings", "b.csv"],
    ["cug", "--backings", "b", "--projects", "p", "--trials", "0"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert run(capsys, *argv)[0] == 2
