"""HTTP service: endpoint contracts, job polling, optimistic concurrency."""

import time

import pytest
from fastapi.testclient import TestClient

from qaplan import schemas
from qaplan.model import QAPlan
from qaplan.service import create_app
from qaplan.store import MetricsStore

from test_store import base_catalogue, batch_doc


@pytest.fixture
def client(tmp_path):
    data_dir = tmp_path / "data"
    MetricsStore(data_dir).put_catalogue(base_catalogue())
    app = create_app(data_dir)
    with TestClient(app) as c:
        yield c


def make_scenario(client, *, name="baseline", efforts=None, constraints=None):
    efforts = efforts if efforts is not None else {"review": 2.0, "unittest": 3.0}
    plan = {"schema_version": 1, "kind": "qa_plan",
            "steps": [{"technique_id": t, "effort": e} for t, e in efforts.items()]}
    profile = {"schema_version": 1, "kind": "fault_profile",
               "estimated_fault_count": 80.0, "catalogue_ref": "org@v1", "share_overrides": None}
    body = {"name": name, "profile": profile, "plan": plan}
    if constraints is not None:
        body["constraints"] = constraints
    response = client.post("/scenarios", json=body)
    assert response.status_code == 201, response.text
    return response.json()


def poll_job(client, job_id, timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        job = client.get(f"/jobs/{job_id}").json()
        if job["status"] in ("done", "failed"):
            return job
        time.sleep(0.02)
    raise AssertionError("job did not finish in time")


def test_catalogue_roundtrip(client):
    response = client.get("/catalogue")
    assert response.status_code == 200
    doc = response.json()
    assert doc["kind"] == "metrics_catalogue"
    assert doc["version"] == 1
    assert client.get("/catalogue", params={"version": 99}).status_code == 404


def test_measurement_ingest_and_recompute(client):
    doc = batch_doc(detections={"review": {"logic": {"count": 10, "total_removal_cost": 50}}})
    ack = client.post("/measurements", json=doc)
    assert ack.status_code == 200
    assert ack.json()["duplicate"] is False

    bad = batch_doc(detections={"review": {"logic": {"count": -1, "total_removal_cost": 50}}})
    rejected = client.post("/measurements", json=bad)
    assert rejected.status_code == 400
    assert rejected.json()["code"] == "validation"
    assert rejected.json()["problems"]

    recomputed = client.post("/catalogue/recompute", json={"project_ids": ["p1"]})
    assert recomputed.status_code == 200
    assert recomputed.json()["version"] == 2


def test_scenario_crud_and_cached_breakdown(client):
    scenario = make_scenario(client)
    assert scenario["rev"] == 1
    assert scenario["breakdown"]["net"] == scenario["breakdown"]["revenue"] - scenario["breakdown"]["direct"]

    listed = client.get("/scenarios").json()["scenarios"]
    assert [s["scenario_id"] for s in listed] == [scenario["scenario_id"]]

    fetched = client.get(f"/scenarios/{scenario['scenario_id']}").json()
    assert fetched == scenario

    assert client.get("/scenarios/nope").status_code == 404

    deleted = client.delete(f"/scenarios/{scenario['scenario_id']}")
    assert deleted.status_code == 200
    assert client.get(f"/scenarios/{scenario['scenario_id']}").status_code == 404


def test_put_requires_fresh_rev(client):
    scenario = make_scenario(client)
    sid = scenario["scenario_id"]
    update = {"rev": scenario["rev"], "name": "renamed"}
    first = client.put(f"/scenarios/{sid}", json=update)
    assert first.status_code == 200
    assert first.json()["rev"] == 2

    stale = client.put(f"/scenarios/{sid}", json=update)
    assert stale.status_code == 409
    assert stale.json()["code"] == "stale-write"


def test_put_recomputes_cached_breakdown(client):
    scenario = make_scenario(client)
    sid = scenario["scenario_id"]
    new_plan = {"schema_version": 1, "kind": "qa_plan",
                "steps": [{"technique_id": "review", "effort": 0.0},
                           {"technique_id": "unittest", "effort": 0.0}]}
    updated = client.put(f"/scenarios/{sid}", json={"rev": 1, "plan": new_plan}).json()
    assert updated["breakdown"]["net"] == 0.0
    assert updated["breakdown"]["direct"] == 0.0


def test_evaluate_empty_plan_matches_econ_core(client):
    scenario = make_scenario(client, efforts={"review": 0.0, "unittest": 0.0})
    result = client.post(f"/scenarios/{scenario['scenario_id']}/evaluate")
    assert result.status_code == 200
    body = result.json()
    assert body["net"] == 0.0
    assert body["direct"] == 0.0
    assert body["revenue"] == 0.0
    assert body["future"] > 0.0  # the full field exposure


def test_evaluate_accepts_draft_plan_override(client):
    scenario = make_scenario(client)
    override = {"plan": {"schema_version": 1, "kind": "qa_plan",
                          "steps": [{"technique_id": "review", "effort": 9.0}]}}
    with_override = client.post(f"/scenarios/{scenario['scenario_id']}/evaluate", json=override).json()
    stored = client.post(f"/scenarios/{scenario['scenario_id']}/evaluate").json()
    assert with_override != stored
    # stored scenario untouched
    assert client.get(f"/scenarios/{scenario['scenario_id']}").json()["plan"]["steps"][0]["effort"] == 2.0


def test_compare_with_self_gives_zero_deltas(client):
    scenario = make_scenario(client)
    sid = scenario["scenario_id"]
    result = client.post("/scenarios/compare", json={"ids": [sid, sid]})
    assert result.status_code == 200
    deltas = result.json()["deltas"]
    assert len(deltas) == 2
    for delta in deltas:
        assert delta["direct"] == 0.0
        assert delta["future"] == 0.0
        assert delta["revenue"] == 0.0
        assert delta["net"] == 0.0


def test_optimize_job_matches_grid_oracle(client):
    from qaplan import Budget, enumerate_grid
    from qaplan.optimize import OptimizationProblem
    from qaplan.model import FaultProfile

    constraints = [{"variant": "budget", "t_max": 6.0}]
    scenario = make_scenario(client, constraints=constraints)
    started = client.post(
        f"/scenarios/{scenario['scenario_id']}/optimize", json={"settings": {"seed": 3}}
    )
    assert started.status_code == 200
    job = poll_job(client, started.json()["job_id"])
    assert job["status"] == "done"
    result = job["result"]
    assert result["kind"] == "optimization_result"
    assert result["status"] == "converged"

    catalogue = base_catalogue()
    problem = OptimizationProblem(
        technique_ids=("review", "unittest"),
        profile=FaultProfile(80.0, "org@v1"),
        catalogue=catalogue,
        constraints=(Budget(6.0),),
    )
    oracle = enumerate_grid(problem, step=0.1)
    assert result["objective"] >= oracle.objective - 1e-6


def test_simulate_job_returns_report(client):
    scenario = make_scenario(client)
    started = client.post(
        f"/scenarios/{scenario['scenario_id']}/simulate",
        json={"trials": 2000, "seed": 11, "fault_count_mode": "fixed"},
    )
    job = poll_job(client, started.json()["job_id"])
    assert job["status"] == "done"
    report = job["result"]
    assert report["kind"] == "simulation_report"
    assert report["conservation_violations"] == 0
    analytic = client.post(f"/scenarios/{scenario['scenario_id']}/evaluate").json()
    assert abs(report["revenue"]["mean"] - analytic["revenue"]) <= 4 * report["revenue"]["std_error"]


def test_sensitivity_endpoint(client):
    scenario = make_scenario(client)
    result = client.post(
        f"/scenarios/{scenario['scenario_id']}/sensitivity", json={"range": 0.2, "factors": ["pi"]}
    )
    assert result.status_code == 200
    entries = result.json()["entries"]
    assert entries
    assert all(e["factor"].startswith("pi:") for e in entries)
    swings = [e["swing"] for e in entries]
    assert swings == sorted(swings, reverse=True)


def test_unknown_job_is_404(client):
    assert client.get("/jobs/nothere").status_code == 404


def test_infeasible_optimize_job_reports_status(client):
    constraints = [
        {"variant": "budget", "t_max": 1.0},
        {"variant": "bounds", "technique_id": "review", "min": 5.0, "max": 9.0},
    ]
    scenario = make_scenario(client, constraints=constraints)
    started = client.post(f"/scenarios/{scenario['scenario_id']}/optimize", json={})
    job = poll_job(client, started.json()["job_id"])
    assert job["status"] == "done"
    assert job["result"]["status"] == "infeasible"


def test_validation_error_shape(client):
    response = client.post("/scenarios", json={"name": ""})
    assert response.status_code == 400
    body = response.json()
    assert body["code"] == "validation"
    assert "message" in body


def test_responses_validate_against_schemas(client):
    scenario = make_scenario(client)
    catalogue_doc = client.get("/catalogue").json()
    schemas.catalogue_from_doc(catalogue_doc)  # parses cleanly
    plan_doc = scenario["plan"]
    assert isinstance(schemas.plan_from_doc(plan_doc), QAPlan)
    profile_doc = scenario["profile"]
    schemas.profile_from_doc(profile_doc)
    evaluated = client.post(f"/scenarios/{scenario['scenario_id']}/evaluate").json()
    assert evaluated["kind"] == "cost_breakdown"
    assert set(evaluated) >= {"direct", "future", "revenue", "net", "per_technique", "per_type"}


def test_recompute_unknown_project_is_404(client):
    response = client.post("/catalogue/recompute", json={"project_ids": ["ghost"]})
    assert response.status_code == 404
    assert response.json()["code"] == "not-found"


def test_job_results_parse_as_published_schemas(client):
    scenario = make_scenario(client)
    sid = scenario["scenario_id"]
    opt_job = poll_job(client, client.post(f"/scenarios/{sid}/optimize", json={}).json()["job_id"])
    result = opt_job["result"]
    schemas.plan_from_doc(result["best_plan"])
    assert set(result["best_breakdown"]) >= {"direct", "future", "revenue", "net"}
    assert all(isinstance(pair, list) and len(pair) == 2 for pair in result["trace"])

    sim_job = poll_job(
        client,
        client.post(f"/scenarios/{sid}/simulate", json={"trials": 64, "seed": 1}).json()["job_id"],
    )
    report = sim_job["result"]
    assert set(report) >= {"trials", "direct", "future", "revenue", "net", "detections"}
    for component in ("direct", "future", "revenue", "net"):
        assert set(report[component]) == {"mean", "std_error"}
