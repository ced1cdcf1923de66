"""CLI: command behaviour, JSON/service parity, byte-stable outputs."""

import json

import pytest

from qaplan import schemas
from qaplan.cli import main
from qaplan.store import MetricsStore

from test_store import base_catalogue, batch_doc


@pytest.fixture
def docs(tmp_path):
    """Catalogue/profile/plan/problem documents on disk plus a data dir."""
    catalogue = base_catalogue()
    paths = {}
    data_dir = tmp_path / "store"
    MetricsStore(data_dir).put_catalogue(catalogue)
    paths["data_dir"] = str(data_dir)

    def write(name, doc):
        p = tmp_path / name
        p.write_text(schemas.canonical_json(doc), encoding="utf-8")
        paths[name] = str(p)

    write("catalogue.json", schemas.catalogue_to_doc(catalogue))
    write("profile.json", {"schema_version": 1, "kind": "fault_profile",
                            "estimated_fault_count": 80.0, "catalogue_ref": "org@v1",
                            "share_overrides": None})
    write("plan.json", {"schema_version": 1, "kind": "qa_plan",
                         "steps": [{"technique_id": "review", "effort": 2.0},
                                    {"technique_id": "unittest", "effort": 3.0}]})
    write("empty_plan.json", {"schema_version": 1, "kind": "qa_plan", "steps": [
        {"technique_id": "review", "effort": 0.0}]})
    write("problem.json", {
        "schema_version": 1, "kind": "optimization_problem",
        "technique_ids": ["review", "unittest"],
        "profile": json.loads((tmp_path / "profile.json").read_text()),
        "catalogue": schemas.catalogue_to_doc(catalogue),
        "constraints": [{"variant": "budget", "t_max": 6.0}],
        "settings": {"seed": 3},
    })
    write("scenario.json", {
        "kind": "scenario_file",
        "problem": json.loads((tmp_path / "problem.json").read_text()),
        "plan": json.loads((tmp_path / "plan.json").read_text()),
    })
    write("batch.json", batch_doc(detections={"review": {"logic": {"count": 10, "total_removal_cost": 50}}}))
    return paths


def run_cli(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_evaluate_empty_plan_prints_zero_net(docs, capsys):
    code, out, err = run_cli(capsys, [
        "evaluate", "--catalogue", docs["catalogue.json"],
        "--profile", docs["profile.json"], "--plan", docs["empty_plan.json"],
    ])
    assert code == 0
    assert "net      0.00" in out


def test_evaluate_json_mode(docs, capsys):
    code, out, _ = run_cli(capsys, [
        "evaluate", "--catalogue", docs["catalogue.json"],
        "--profile", docs["profile.json"], "--plan", docs["plan.json"], "--json",
    ])
    assert code == 0
    doc = json.loads(out)
    assert doc["kind"] == "cost_breakdown"
    assert doc["net"] == doc["revenue"] - doc["direct"]


def test_cli_json_identical_to_service_response(docs, capsys, tmp_path):
    from fastapi.testclient import TestClient
    from qaplan.service import create_app

    code, out, _ = run_cli(capsys, [
        "evaluate", "--catalogue", docs["catalogue.json"],
        "--profile", docs["profile.json"], "--plan", docs["plan.json"], "--json",
    ])
    assert code == 0
    cli_doc = json.loads(out)

    with TestClient(create_app(docs["data_dir"])) as client:
        scenario = client.post("/scenarios", json={
            "name": "s",
            "profile": json.loads(open(docs["profile.json"]).read()),
            "plan": json.loads(open(docs["plan.json"]).read()),
        }).json()
        service_doc = client.post(f"/scenarios/{scenario['scenario_id']}/evaluate").json()
    assert cli_doc == service_doc


def test_optimize_grid_check_reports_tiny_gap(docs, capsys):
    code, out, _ = run_cli(capsys, ["optimize", "--problem", docs["problem.json"],
                                     "--grid-check", "--grid-step", "0.25", "--json"])
    assert code == 0
    doc = json.loads(out)
    assert doc["grid_check"]["gap"] <= 1e-6
    assert doc["result"]["status"] == "converged"


def test_optimize_output_byte_stable(docs, capsys):
    argv = ["optimize", "--problem", docs["problem.json"], "--grid-check", "--grid-step", "0.5", "--json"]
    _, first, _ = run_cli(capsys, argv)
    _, second, _ = run_cli(capsys, argv)
    assert first == second


def test_simulate_byte_stable_and_deterministic(docs, capsys):
    argv = [
        "simulate", "--catalogue", docs["catalogue.json"], "--profile", docs["profile.json"],
        "--plan", docs["plan.json"], "--trials", "500", "--seed", "1", "--json",
    ]
    _, first, _ = run_cli(capsys, argv)
    _, second, _ = run_cli(capsys, argv)
    assert first == second
    doc = json.loads(first)
    assert doc["kind"] == "simulation_report"
    assert doc["conservation_violations"] == 0


def test_simulate_table_compares_against_analytic(docs, capsys):
    code, out, _ = run_cli(capsys, [
        "simulate", "--catalogue", docs["catalogue.json"], "--profile", docs["profile.json"],
        "--plan", docs["plan.json"], "--trials", "200", "--seed", "4",
    ])
    assert code == 0
    assert "analytic" in out
    assert "revenue" in out


def test_measurements_and_catalogue_commands(docs, capsys):
    code, out, _ = run_cli(capsys, [
        "measurements", "ingest", docs["batch.json"], "--data-dir", docs["data_dir"], "--json",
    ])
    assert code == 0
    assert json.loads(out)["duplicate"] is False

    code, out, _ = run_cli(capsys, [
        "catalogue", "recompute", "--projects", "p1", "--data-dir", docs["data_dir"], "--json",
    ])
    assert code == 0
    assert json.loads(out)["version"] == 2

    code, out, _ = run_cli(capsys, [
        "catalogue", "show", "--data-dir", docs["data_dir"], "--json",
    ])
    assert code == 0
    assert json.loads(out)["version"] == 2
    code, out, _ = run_cli(capsys, [
        "catalogue", "show", "--data-dir", docs["data_dir"], "--version", "1", "--json",
    ])
    assert json.loads(out)["version"] == 1


def test_data_dir_from_environment(docs, capsys, monkeypatch):
    monkeypatch.setenv("QAPLAN_DATA_DIR", docs["data_dir"])
    code, out, _ = run_cli(capsys, ["catalogue", "show", "--json"])
    assert code == 0
    assert json.loads(out)["kind"] == "metrics_catalogue"


def test_sensitivity_command(docs, capsys):
    code, out, _ = run_cli(capsys, [
        "sensitivity", "--scenario", docs["scenario.json"], "--range", "0.2", "--json",
    ])
    assert code == 0
    doc = json.loads(out)
    swings = [e["swing"] for e in doc["entries"]]
    assert swings == sorted(swings, reverse=True)
    code, out, _ = run_cli(capsys, [
        "sensitivity", "--scenario", docs["scenario.json"], "--factors", "pi",
    ])
    assert code == 0
    assert "pi:logic" in out


def test_structured_error_on_stderr(docs, capsys):
    code, out, err = run_cli(capsys, [
        "evaluate", "--catalogue", "missing.json",
        "--profile", docs["profile.json"], "--plan", docs["plan.json"],
    ])
    assert code == 1
    assert out == ""
    error = json.loads(err)
    assert error["code"] == "validation"


def test_catalogue_by_store_version(docs, capsys):
    code, out, _ = run_cli(capsys, [
        "evaluate", "--catalogue", "1", "--data-dir", docs["data_dir"],
        "--profile", docs["profile.json"], "--plan", docs["plan.json"], "--json",
    ])
    assert code == 0
    assert json.loads(out)["kind"] == "cost_breakdown"


def test_plan_from_stdin(docs, capsys, monkeypatch):
    import io

    plan_text = open(docs["plan.json"]).read()
    monkeypatch.setattr("sys.stdin", io.StringIO(plan_text))
    code, out, _ = run_cli(capsys, [
        "evaluate", "--catalogue", docs["catalogue.json"],
        "--profile", docs["profile.json"], "--plan", "-", "--json",
    ])
    assert code == 0
    assert json.loads(out)["kind"] == "cost_breakdown"


def test_simulate_poisson_flag(docs, capsys):
    code, out, _ = run_cli(capsys, [
        "simulate", "--catalogue", docs["catalogue.json"], "--profile", docs["profile.json"],
        "--plan", docs["plan.json"], "--trials", "300", "--seed", "2", "--poisson", "--json",
    ])
    assert code == 0
    assert json.loads(out)["fault_count_mode"] == "poisson"
