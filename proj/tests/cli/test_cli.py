import json
import os
import subprocess

import pytest

OBDTRIAL = os.environ.get("OBDTRIAL", "obdtrial")


def run(*args, check_code=0):
    proc = subprocess.run([OBDTRIAL, *map(str, args)], capture_output=True, text=True, timeout=300)
    assert proc.returncode == check_code, proc.stderr
    return proc


def write(tmp_path, name, value):
    path = tmp_path / name
    path.write_text(json.dumps(value) if not isinstance(value, str) else value)
    return path


def observed(pid, dose, efficacy, toxicity):
    events = []
    if toxicity:
        events.append({"day": 10, "kind": "toxicity", "grade": 3, "dlt": True})
    events.append({"day": 56, "kind": "assessment", "response": "PR" if efficacy else "SD"})
    return {"patient_id": pid, "dose_index": dose, "events": events}


SCENARIO = {
    "name": "cli",
    "grid": 5,
    "true_tox": [0.05, 0.1, 0.15, 0.3, 0.45],
    "true_eff": [0.1, 0.25, 0.45, 0.5, 0.5],
    "ice_probabilities": {"surgery:external_factors": 0.05, "death": 0.02},
}


def test_boundaries_text_and_json():
    out = run("boundaries", "--phi", "0.3").stdout
    fields = dict(part.split("=") for part in out.split())
    assert abs(float(fields["lambda_e"]) - 0.2364) <= 0.0005
    assert abs(float(fields["lambda_d"]) - 0.3586) <= 0.0005
    doc = json.loads(run("boundaries", "--json").stdout)
    assert doc["version"] == "v1"
    assert doc["lambda_e"] < 0.3 < doc["lambda_d"]


def test_validation_errors_exit_one(tmp_path):
    run("boundaries", "--phi", "0.3", "--phi1", "0.5", check_code=1)
    run("decide", check_code=1)
    run("bogus", check_code=1)
    bad = write(tmp_path, "bad.json", {"grid": 2, "utility": [0, 10, 60, 90]})
    err = run("decide", "--state", bad, check_code=1).stderr
    assert "error" in err
    broken = write(tmp_path, "broken.json", "{")
    run("decide", "--state", broken, check_code=1)


def test_missing_file_exits_two(tmp_path):
    run("decide", "--state", tmp_path / "absent.json", check_code=2)


def test_decide_and_obd(tmp_path):
    records = [observed(f"a{i}", 1, i < 2, False) for i in range(3)]
    state = write(tmp_path, "state.json", {"grid": 4, "current_dose": 1, "records": records, "titration_triggered": True})
    rec = json.loads(run("decide", "--state", state).stdout)
    assert rec["decision"]["kind"] == "escalate"
    assert rec["decision"]["next_dose"] == 2
    assert len(rec["summaries"]) == 4
    sel = json.loads(run("obd", "--state", state).stdout)
    assert sel["obd"] == 1


def test_decide_when_every_dose_is_eliminated(tmp_path):
    records = [observed(f"t{i}", 1, False, True) for i in range(6)]
    state = write(tmp_path, "toxic.json", {"grid": 3, "current_dose": 1, "records": records, "titration_triggered": True})
    rec = json.loads(run("decide", "--state", state).stdout)
    assert rec["decision"]["kind"] == "terminate"
    assert rec["decision"]["stop_reason"] == "lowest_dose_toxic"
    assert rec["selection"]["obd"] is None


def test_table_csv(tmp_path):
    out = tmp_path / "table.csv"
    run("--out", out, "table", "--max-n", "3", "--format", "csv")
    lines = out.read_text().splitlines()
    assert lines[0].startswith("n_y1,n_y2,n_y3,n_y4,n,")
    assert len(lines) == 36


def test_derive_and_whatif(tmp_path):
    lines = "\n".join(json.dumps(observed(f"p{i}", 1 + i % 2, i % 3 == 0, i % 4 == 0)) for i in range(6))
    records = write(tmp_path, "records.jsonl", lines + "\n")
    derived = json.loads(run("derive", "--records", records).stdout)
    assert len(derived["outcomes"]) == 6
    tp = write(tmp_path, "tp.json", {"name": "tp", "entries": {}})
    comp = write(tmp_path, "comp.json", {"name": "comp", "entries": {}})
    cmp = json.loads(run("whatif", "--records", records, "--maps", tp, comp).stdout)
    assert [c["name"] for c in cmp["columns"]] == ["tp", "comp"]


def test_tipping_and_prior(tmp_path):
    records = [observed(f"a{i}", 1, i < 2, False) for i in range(3)]
    records += [observed(f"b{i}", 2, True, False) for i in range(3)]
    state = write(tmp_path, "state.json", {"grid": 2, "current_dose": 2, "records": records, "titration_triggered": True})
    fast = json.loads(run("tipping", "--state", state).stdout)
    brute = json.loads(run("tipping", "--state", state, "--exhaustive").stdout)
    assert fast["tipping_point"] == brute["tipping_point"] == 1
    run("tipping", "--state", state, "--scope", "nobody", check_code=1)
    prior = json.loads(run("prior", "--state", state).stdout)
    assert len(prior["rows"]) == 2


def test_simulate_is_deterministic_across_jobs(tmp_path):
    scenario = write(tmp_path, "scenario.json", SCENARIO)
    one = run("simulate", "--scenario", scenario, "--reps", 200, "--seed", 7, "--jobs", 1).stdout
    four = run("simulate", "--scenario", scenario, "--reps", 200, "--seed", 7, "--jobs", 4).stdout
    assert one == four
    doc = json.loads(one)
    assert doc["reps"] == 200
    assert doc["rng"]
    other = run("simulate", "--scenario", scenario, "--reps", 200, "--seed", 8).stdout
    assert other != one
    csv = run("simulate", "--scenario", scenario, "--reps", 20, "--format", "csv").stdout
    assert csv.strip()


def test_help_lists_schemas():
    out = run("--help").stdout
    assert "patient record" in out
    assert "simulate" in out
