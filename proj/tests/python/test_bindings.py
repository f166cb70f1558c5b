import math

import pytest

import obdtrial


def observed(pid, dose, efficacy, toxicity):
    events = []
    if toxicity:
        events.append({"day": 10, "kind": "toxicity", "grade": 3, "dlt": True})
    events.append({"day": 56, "kind": "assessment", "response": "PR" if efficacy else "SD"})
    return {"patient_id": pid, "dose_index": dose, "events": events}


def missing(pid, dose):
    return {
        "patient_id": pid,
        "dose_index": dose,
        "events": [
            {"day": 28, "kind": "assessment", "response": "SD"},
            {"day": 30, "kind": "ice", "ice_type": "surgery", "reason": "external_factors"},
        ],
    }


def test_boundaries():
    lam_e, lam_d = obdtrial.boin_boundaries(0.3)
    assert abs(lam_e - 0.2364) <= 0.0005
    assert abs(lam_d - 0.3586) <= 0.0005
    with pytest.raises(obdtrial.ObdError):
        obdtrial.boin_boundaries(0.3, phi1=0.5)


def test_mean_utility_anchor():
    u = obdtrial.mean_utility([1, 2, 0, 3], [0, 10, 60, 100], [0.25] * 4)
    assert u == pytest.approx(362.5 / 7, abs=1e-9)


def test_incomplete_beta_reflection():
    s = obdtrial.regularized_incomplete_beta(0.3, 2.5, 4.0) + obdtrial.regularized_incomplete_beta(0.7, 4.0, 2.5)
    assert s == pytest.approx(1.0, abs=1e-12)
    assert obdtrial.regularized_incomplete_beta(0.5, 1.0, 1.0) == pytest.approx(0.5)


def test_isotonic_pools_violators():
    est = obdtrial.isotonic_tox_estimates([2, 1, 3], [6, 6, 6])
    assert est == pytest.approx([0.25, 0.25, 0.5])
    assert all(a <= b for a, b in zip(est, est[1:]))


def test_recommend_and_tipping():
    records = [observed(f"a{i}", 1, i < 2, False) for i in range(3)]
    records += [observed(f"b{i}", 2, True, False) for i in range(3)]
    records.append(missing("m", 2))
    state = {"grid": 3, "current_dose": 2, "records": records, "titration_triggered": True}
    rec = obdtrial.recommend(state)
    assert rec["version"] == obdtrial.SCHEMA_VERSION
    assert rec["selection"]["obd"] == 2
    assert rec["decision"]["next_dose"] == 3
    report = obdtrial.tipping_scan(state)
    assert report["baseline_obd"] == 2
    assert report["tipping_point"] == 1
    assert obdtrial.tipping_scan(state, exhaustive=True)["tipping_point"] == 1


def test_derive_and_compare():
    rec = {
        "patient_id": "fig",
        "dose_index": 1,
        "events": [
            {"day": 28, "kind": "assessment", "response": "SD"},
            {"day": 30, "kind": "ice", "ice_type": "tox_discontinuation"},
            {"day": 56, "kind": "assessment", "response": "CR"},
        ],
    }
    out = obdtrial.derive([rec])["outcomes"][0]
    assert out["category"] == 1
    tp = {"name": "tp", "entries": {"tox_discontinuation": "treatment_policy"}}
    wot = {"name": "wot", "entries": {"tox_discontinuation": "while_on_treatment"}}
    cmp = obdtrial.compare_strategies([rec], [tp, wot], doses=1)
    cats = [col["outcomes"][0]["category"] for col in cmp["columns"]]
    assert cats == [4, 2]


def test_decision_table_rows():
    table = obdtrial.decision_table(3)
    assert len(table["rows"]) == 35
    for row in table["rows"]:
        assert 100 * row["qbb_mean"] == pytest.approx(row["mean_utility"], abs=1e-10)


def test_simulate_is_reproducible():
    scenario = {
        "grid": 4,
        "true_tox": [0.05, 0.1, 0.2, 0.4],
        "true_eff": [0.1, 0.3, 0.5, 0.5],
        "ice_probabilities": {"death": 0.02},
    }
    a = obdtrial.simulate(scenario, reps=50, seed=9, jobs=1)
    b = obdtrial.simulate(scenario, reps=50, seed=9, jobs=3)
    assert a == b
    assert math.isclose(sum(a["selection_pct"]), 100.0)


def test_errors_map_to_value_error():
    with pytest.raises(ValueError):
        obdtrial.recommend({"grid": 2, "utility": [0, 10, 60, 90]})
    with pytest.raises(ValueError):
        obdtrial.derive([{"patient_id": "x", "dose_index": 1, "events": [{"day": 1, "kind": "ice", "ice_type": "x"}]}])
