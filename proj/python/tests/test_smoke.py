import json
import pathlib

import pytest

import senseflow

FIXTURES = pathlib.Path(__file__).resolve().parents[2] / "fixtures" / "phytophthora"
DOMAIN = (FIXTURES / "domains" / "phytophthora.json").read_text()
ATTRS = ["airTemperature", "airHumidity", "airStress", "phytophtoraDiseaseStatus"]


def request(attrs=ATTRS, fmt="json-lines", interval=1000, user="py"):
    return json.dumps({
        "request": {"attributes": attrs, "location": "plot-7", "format": fmt,
                    "interval_ms": interval, "annotations": False},
        "user": {"id": user, "sink": {"kind": "stream-endpoint", "target": "s"}},
    })


def test_rules_match_domain():
    assert senseflow.evaluate_rules(DOMAIN, "airStress", {"airTemperature": 12, "airHumidity": 25}) == "high"
    assert senseflow.evaluate_rules(DOMAIN, "airStress", {"airTemperature": 5, "airHumidity": 10}) == "low"
    assert senseflow.evaluate_rules(DOMAIN, "airStress", {"airTemperature": 5, "airHumidity": 90}) is None
    assert senseflow.evaluate_rules(
        DOMAIN, "phytophtoraDiseaseStatus", {"airStress": "low", "leafWetness": 80}) == "not-infected"


def test_engine_round_trip():
    engine = senseflow.Engine.boot(str(FIXTURES / "scenario.json"))
    assert len(senseflow.inspect(engine, "sensors")) == 3
    a = engine.submit(request())
    b = engine.submit(request(fmt="csv", user="other"))
    assert (a["sources"], a["derived"]) == (3, 2)
    assert b["reused"] and b["plan_id"] == a["plan_id"]
    engine.run_for(5000)
    records = senseflow.parse_json_lines(engine.drain_stream(a["subscription_id"]))
    assert len(records) == 5
    assert set(records[0]["values"]) == set(ATTRS)
    csv_records = senseflow.parse_csv(engine.drain_stream(b["subscription_id"]))
    assert [r["values"] for r in csv_records] == [r["values"] for r in records]
    plan = senseflow.plan_dump(engine, a["plan_id"])
    assert plan["plan_id"] == a["plan_id"]


def test_errors_carry_codes():
    with pytest.raises(senseflow.SenseflowError) as info:
        senseflow.validate_request(request(fmt="xlsx"))
    assert info.value.code == "UnsupportedFormat"
    engine = senseflow.Engine.boot(str(FIXTURES / "scenario.json"))
    engine.set_availability("hum-01", "offline")
    with pytest.raises(senseflow.SenseflowError) as info:
        engine.submit(request(["airStress"]))
    assert info.value.code == "UnsatisfiableAttribute"


def test_run_scenario(tmp_path):
    report = senseflow.run_scenario(str(FIXTURES / "scenario.json"), str(tmp_path))
    assert report["exit_status"] == 0
    assert [s["deliveries"] for s in report["subscriptions"]] == [60, 12]
    assert all(s["consistency_mismatches"] == 0 for s in report["subscriptions"])
