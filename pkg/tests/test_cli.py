"""End-to-end command-line pipelines on temporary directories."""

import json
import os
import subprocess
import sys

import pytest

from tigload.cli import main
from tigload.files import read_json_artifact, read_jsonl, task_to_dict, write_tasks_jsonl
from tigload.fitting import chi2_survival
from conftest import chain_task


def run(*argv):
    return main(list(argv))


def read_lines(path):
    with open(path, "r", encoding="utf-8") as handle:
        return [json.loads(line) for line in handle if line.strip()]


@pytest.fixture
def pipeline_dir(tmp_path):
    """gen -> analyze -> simulate, the shared front half of the pipeline."""
    tasks = tmp_path / "tasks.jsonl"
    manifest = tmp_path / "manifest.json"
    loads = tmp_path / "loads.jsonl"
    trials = tmp_path / "trials.jsonl"
    assert run("gen", "-o", str(tasks), "--manifest", str(manifest),
               "--targets", "5,15,25", "--per-target", "10", "--seed", "11") == 0
    assert run("analyze", str(tasks), "-o", str(loads), "--lambda", "0.5") == 0
    assert run("simulate", "--tasks", str(tasks), "--k", "0.05", "--b", "0.05",
               "--replications", "40", "--agent-id", "sim-a",
               "--seed", "3", "-o", str(trials)) == 0
    return tmp_path


def test_gen_writes_tasks_and_manifest(tmp_path):
    tasks = tmp_path / "tasks.jsonl"
    manifest = tmp_path / "manifest.json"
    code = run("gen", "-o", str(tasks), "--manifest", str(manifest),
               "--targets", "5,15", "--per-target", "3", "--seed", "5")
    assert code == 0
    records = read_lines(tasks)
    assert len(records) == 6
    assert all(r["schema"] == "tigload/1" for r in records)
    doc = read_json_artifact(str(manifest))
    assert [s["n"] for s in doc["strata"]] == [3, 3]
    assert doc["total_tasks"] == 6
    assert doc["run_config"]["seed"] == 5


def test_analyze_records_and_totals(pipeline_dir):
    header, records, diags = read_jsonl(str(pipeline_dir / "loads.jsonl"))
    assert not diags
    assert header["kind"] == "header"
    assert header["run_config"]["lambda"] == 0.5
    assert "tasks" in header["input_digests"]
    assert len(records) == 30
    ids = [doc["task_id"] for _, doc in records]
    assert ids == sorted(ids)
    for _, doc in records:
        assert doc["cl_i"] == pytest.approx(sum(e["weight"] for e in doc["per_edge"]))
        assert doc["cl_e"] == pytest.approx(sum(q["total"] for q in doc["per_query"]))


def test_analyze_empty_input(tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    out = tmp_path / "loads.jsonl"
    assert run("analyze", str(empty), "-o", str(out)) == 0
    _, records, _ = read_jsonl(str(out))
    assert records == []


def test_analyze_partial_failure_exits_2(tmp_path, capsys):
    tasks = tmp_path / "tasks.jsonl"
    good = json.dumps(task_to_dict(chain_task(2)))
    tasks.write_text(good + "\nthis is not json\n")
    out = tmp_path / "loads.jsonl"
    assert run("analyze", str(tasks), "-o", str(out)) == 2
    _, records, _ = read_jsonl(str(out))
    assert len(records) == 1  # the good record still lands
    err = capsys.readouterr().err
    assert ":2:" in err  # line-precise diagnostic


def test_analyze_500_tasks_matches_library_recomputation(tmp_path):
    from tigload.extraneous import extraneous_load
    from tigload.files import read_tasks_jsonl
    from tigload.intrinsic import IntrinsicParams, intrinsic_load

    tasks = tmp_path / "tasks.jsonl"
    out = tmp_path / "loads.jsonl"
    assert run("gen", "-o", str(tasks), "--manifest", str(tmp_path / "m.json"),
               "--targets", "5,12,20,28", "--per-target", "125", "--seed", "31") == 0
    assert run("analyze", str(tasks), "-o", str(out), "--lambda", "0.5") == 0
    _, records, _ = read_jsonl(str(out))
    assert len(records) == 500

    parsed, diags = read_tasks_jsonl(str(tasks))
    assert not diags
    by_id = {t.id: t for _, t in parsed}
    params = IntrinsicParams(0.5)
    for _, doc in records:
        task = by_id[doc["task_id"]]
        assert doc["cl_i"] == pytest.approx(intrinsic_load(task, params).total)
        assert doc["cl_e"] == pytest.approx(extraneous_load(task).total)


def test_fit_calibrates_omega_internally(pipeline_dir):
    outdir = pipeline_dir / "fit_auto"
    code = run("fit", str(pipeline_dir / "loads.jsonl"),
               str(pipeline_dir / "trials.jsonl"), "--out-dir", str(outdir))
    assert code == 0
    profiles = read_json_artifact(str(outdir / "profiles.json"))
    row = profiles["profiles"][0]
    assert "omega_e" in row and row["k"] > 0


def test_analyze_is_byte_deterministic(pipeline_dir):
    again = pipeline_dir / "loads2.jsonl"
    assert run("analyze", str(pipeline_dir / "tasks.jsonl"), "-o", str(again),
               "--lambda", "0.5") == 0
    first = (pipeline_dir / "loads.jsonl").read_bytes()
    assert first == again.read_bytes()


def test_gen_is_byte_deterministic(tmp_path):
    for name in ("a", "b"):
        assert run("gen", "-o", str(tmp_path / f"{name}.jsonl"),
                   "--manifest", str(tmp_path / f"{name}.json"),
                   "--targets", "6,12", "--per-target", "4", "--seed", "99") == 0
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_analyze_intrinsic_only(pipeline_dir):
    out = pipeline_dir / "loads_io.jsonl"
    assert run("analyze", str(pipeline_dir / "tasks.jsonl"), "-o", str(out),
               "--intrinsic-only") == 0
    _, records, _ = read_jsonl(str(out))
    assert all(doc["cl_e"] == 0.0 and doc["scorer_id"] == "none"
               for _, doc in records)


def test_gen_mean_calls_flag(tmp_path):
    tasks = tmp_path / "tasks.jsonl"
    assert run("gen", "-o", str(tasks), "--manifest", str(tmp_path / "m.json"),
               "--targets", "8", "--per-target", "40", "--mean-calls", "4.9",
               "--seed", "17") == 0
    records = read_lines(tasks)
    counts = [sum(1 for n in r["graph"]["nodes"] if n["kind"] == "call")
              for r in records]
    assert abs(sum(counts) / len(counts) - 4.9) <= 0.5


def test_score_outputs_extraneous_only(pipeline_dir):
    out = pipeline_dir / "scores.jsonl"
    assert run("score", str(pipeline_dir / "tasks.jsonl"), "-o", str(out)) == 0
    _, records, _ = read_jsonl(str(out))
    assert len(records) == 30
    assert all("cl_e" in doc and "cl_i" not in doc for _, doc in records)


def test_simulate_task_mode(pipeline_dir):
    out = pipeline_dir / "trials_task.jsonl"
    assert run("simulate", "--mode", "task", "--loads", str(pipeline_dir / "loads.jsonl"),
               "--k", "0.067", "--b", "1.0", "--omega", "0.5",
               "--replications", "3", "--seed", "4", "-o", str(out)) == 0
    _, records, _ = read_jsonl(str(out))
    assert len(records) == 90
    assert {doc["agent_id"] for _, doc in records} == {"sim"}


def test_calibrate_omega_output(pipeline_dir):
    out = pipeline_dir / "omega.json"
    code = run("calibrate-omega", str(pipeline_dir / "loads.jsonl"),
               str(pipeline_dir / "trials.jsonl"), "-o", str(out))
    assert code == 0
    doc = read_json_artifact(str(out))
    row = doc["calibrations"][0]
    assert row["agent_id"] == "sim-a"
    assert row["drop_cli"] > 0
    assert row["omega_e"] == pytest.approx(row["drop_cle"] / row["drop_cli"])
    assert "cl_i" in row["bucket_boundaries"] and "cl_e" in row["bucket_boundaries"]


def test_calibrate_omega_unmatched_trial_exits_2_without_output(pipeline_dir, capsys):
    trials = pipeline_dir / "bad_trials.jsonl"
    trials.write_text(json.dumps({"task_id": "ghost", "agent_id": "a", "success": True}) + "\n")
    out = pipeline_dir / "omega_bad.json"
    assert run("calibrate-omega", str(pipeline_dir / "loads.jsonl"),
               str(trials), "-o", str(out)) == 2
    assert "ghost" in capsys.readouterr().err
    assert not out.exists()  # no partial artifact


def test_fit_pipeline_outputs(pipeline_dir):
    outdir = pipeline_dir / "fit"
    code = run("fit", str(pipeline_dir / "loads.jsonl"),
               str(pipeline_dir / "trials.jsonl"), "--out-dir", str(outdir),
               "--omega", "0.0")
    assert code == 0
    profiles = read_json_artifact(str(outdir / "profiles.json"))
    assert len(profiles["profiles"]) == 1
    row = profiles["profiles"][0]
    assert row["agent_id"] == "sim-a"
    assert row["k"] > 0 and row["b"] >= 0 and row["bins"]

    hl = read_json_artifact(str(outdir / "hosmer_lemeshow.json"))
    assert hl["results"][0]["agent_id"] == "sim-a"

    calib = (outdir / "calibration.csv").read_text().splitlines()
    assert calib[0].startswith("# provenance: ")
    assert calib[1] == "agent_id,predicted_mean,observed_acc,n"
    decay = (outdir / "decay_curve.csv").read_text().splitlines()
    assert decay[1] == "agent_id,load_mid,empirical_acc,fitted_acc,n"
    assert len(decay) > 2


def test_fit_two_agents_two_profiles(pipeline_dir):
    both = pipeline_dir / "both.jsonl"
    assert run("simulate", "--tasks", str(pipeline_dir / "tasks.jsonl"),
               "--k", "0.09", "--b", "0.02", "--replications", "40",
               "--agent-id", "sim-b", "--seed", "8", "-o", str(both)) == 0
    merged = pipeline_dir / "merged.jsonl"
    rows = []
    for path in (pipeline_dir / "trials.jsonl", both):
        _, records, _ = read_jsonl(str(path))
        rows.extend(doc for _, doc in records)
    merged.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    outdir = pipeline_dir / "fit2"
    with pytest.raises(SystemExit) as exc:  # missing positional -> usage error
        run("fit", str(merged), "--out-dir", str(outdir), "--omega", "0.0")
    assert exc.value.code == 3
    assert run("fit", str(pipeline_dir / "loads.jsonl"), str(merged),
               "--out-dir", str(outdir), "--omega", "0.0") == 0
    profiles = read_json_artifact(str(outdir / "profiles.json"))
    assert [p["agent_id"] for p in profiles["profiles"]] == ["sim-a", "sim-b"]


def test_fit_unmatched_trial_lists_orphans(pipeline_dir, capsys):
    trials = pipeline_dir / "orphans.jsonl"
    rows = [json.dumps({"task_id": f"ghost-{i}", "agent_id": "a", "success": True})
            for i in range(12)]
    trials.write_text("\n".join(rows) + "\n")
    assert run("fit", str(pipeline_dir / "loads.jsonl"), str(trials),
               "--out-dir", str(pipeline_dir / "fitx"), "--omega", "0.0") == 2
    assert "ghost-0" in capsys.readouterr().err


def test_validate_roundtrip(pipeline_dir):
    outdir = pipeline_dir / "fit"
    run("fit", str(pipeline_dir / "loads.jsonl"), str(pipeline_dir / "trials.jsonl"),
        "--out-dir", str(outdir), "--omega", "0.0")
    out = pipeline_dir / "hl.json"
    code = run("validate", str(pipeline_dir / "loads.jsonl"),
               str(pipeline_dir / "trials.jsonl"),
               "--profiles", str(outdir / "profiles.json"),
               "--omega", "0.0", "-o", str(out))
    assert code == 0
    doc = read_json_artifact(str(out))
    assert doc["results"][0]["agent_id"] == "sim-a"
    row = doc["results"][0]
    if "p_value" in row:
        assert 0.0 <= row["p_value"] <= 1.0


def test_route_policies(pipeline_dir, tmp_path):
    outdir = pipeline_dir / "fit"
    run("fit", str(pipeline_dir / "loads.jsonl"), str(pipeline_dir / "trials.jsonl"),
        "--out-dir", str(outdir), "--omega", "0.0")
    policy = tmp_path / "policy.json"
    policy.write_text(json.dumps({"kind": "max_accuracy", "costs": {"sim-a": 1.0}}))
    out = pipeline_dir / "decisions.jsonl"
    code = run("route", str(pipeline_dir / "loads.jsonl"),
               "--profiles", str(outdir / "profiles.json"),
               "--policy", str(policy), "--omega", "0.0", "-o", str(out))
    assert code == 0
    _, records, _ = read_jsonl(str(out))
    assert len(records) == 30
    assert all(doc["agent_id"] == "sim-a" for _, doc in records)
    ids = [doc["task_id"] for _, doc in records]
    assert ids == sorted(ids)


def test_route_accepts_raw_task_file(pipeline_dir):
    outdir = pipeline_dir / "fit"
    run("fit", str(pipeline_dir / "loads.jsonl"), str(pipeline_dir / "trials.jsonl"),
        "--out-dir", str(outdir), "--omega", "0.0")
    from_loads = pipeline_dir / "d_loads.jsonl"
    from_tasks = pipeline_dir / "d_tasks.jsonl"
    for source, out in ((pipeline_dir / "loads.jsonl", from_loads),
                        (pipeline_dir / "tasks.jsonl", from_tasks)):
        assert run("route", str(source), "--profiles", str(outdir / "profiles.json"),
                   "--omega", "0.0", "--lambda", "0.5", "-o", str(out)) == 0
    _, a, _ = read_jsonl(str(from_loads))
    _, b, _ = read_jsonl(str(from_tasks))
    assert [doc for _, doc in a] == [doc for _, doc in b]


def test_analyze_jobs_flag_preserves_output(pipeline_dir):
    parallel = pipeline_dir / "loads_jobs.jsonl"
    assert run("analyze", str(pipeline_dir / "tasks.jsonl"), "-o", str(parallel),
               "--lambda", "0.5", "--jobs", "4") == 0
    _, seq, _ = read_jsonl(str(pipeline_dir / "loads.jsonl"))
    _, par, _ = read_jsonl(str(parallel))
    assert [doc for _, doc in seq] == [doc for _, doc in par]


def test_report_contains_reported_p_value(tmp_path):
    hl = tmp_path / "hl.json"
    hl.write_text(json.dumps({
        "results": [{"agent_id": "gpt-4o", "chi2": 4.87, "dof": 8,
                     "p_value": chi2_survival(4.87, 8), "groups": []}],
    }))
    out = tmp_path / "report.md"
    assert run("report", "--hl", str(hl), "-o", str(out)) == 0
    text = out.read_text()
    assert "| gpt-4o | 4.87 | 8 | 0.77 |" in text


def test_report_full_and_deterministic(pipeline_dir):
    outdir = pipeline_dir / "fit"
    run("fit", str(pipeline_dir / "loads.jsonl"), str(pipeline_dir / "trials.jsonl"),
        "--out-dir", str(outdir), "--omega", "0.0")
    for name in ("r1.md", "r2.md"):
        assert run("report", "--profiles", str(outdir / "profiles.json"),
                   "--hl", str(outdir / "hosmer_lemeshow.json"),
                   "--trials", str(pipeline_dir / "trials.jsonl"),
                   "--loads", str(pipeline_dir / "loads.jsonl"),
                   "-o", str(pipeline_dir / name)) == 0
    first = (pipeline_dir / "r1.md").read_bytes()
    assert first == (pipeline_dir / "r2.md").read_bytes()
    text = first.decode()
    assert "## Overall accuracy" in text
    assert "## Cognitive profiles" in text
    assert "## Accuracy by intrinsic load tercile" in text


def test_unknown_config_key_exits_3(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"lambda": 0.5, "typo": 1}))
    tasks = tmp_path / "tasks.jsonl"
    write_tasks_jsonl(str(tasks), [chain_task(1)])
    code = run("analyze", str(tasks), "-o", str(tmp_path / "out.jsonl"),
               "--config", str(cfg))
    assert code == 3
    assert "typo" in capsys.readouterr().err


def test_bad_flag_exits_3(capsys):
    with pytest.raises(SystemExit) as exc:
        run("analyze", "--no-such-flag")
    assert exc.value.code == 3


def test_config_file_supplies_defaults(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"lambda": 0.0, "seed": 123}))
    tasks = tmp_path / "tasks.jsonl"
    manifest = tmp_path / "m.json"
    assert run("gen", "-o", str(tasks), "--manifest", str(manifest),
               "--targets", "5", "--per-target", "2", "--config", str(cfg)) == 0
    doc = read_json_artifact(str(manifest))
    assert doc["run_config"]["seed"] == 123
    assert doc["run_config"]["lambda"] == 0.0


def test_module_entry_point_runs():
    env = dict(os.environ)
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    env["PYTHONPATH"] = os.path.join(root, "src")
    proc = subprocess.run([sys.executable, "-m", "tigload.cli", "--help"],
                          capture_output=True, text=True, env=env)
    assert proc.returncode == 0
    assert "analyze" in proc.stdout and "simulate" in proc.stdout
