"""HTTP facade over the catalogue store, plan economics, optimizer and simulator.

JSON in and out, matching the canonical document schemas. Long-running
work (optimization, simulation) returns a job id immediately; clients
poll ``GET /jobs/{id}``. Errors are structured objects
``{"code", "message", "field"?}`` with status 400 (validation), 404
(missing id), 409 (stale write), 422 (infeasible), 500 (internal).

Computation endpoints are stateless: their responses are pure functions
of the stored scenario plus the request body (the body may carry a draft
plan override so clients can price edits without saving them). Scenario
writes are optimistic: a PUT must carry the last-seen ``rev`` stamp.
"""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone

from fastapi import Body, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import schemas
from .economics import evaluate_plan
from .errors import (
    CatalogueMismatchError,
    GridCapExceededError,
    InfeasibleError,
    NotFoundError,
    NumericInputError,
    QAPlanError,
    StaleWriteError,
    ValidationError,
)
from .model import QAPlan
from .optimize import OptimizationProblem, optimize, sensitivity
from .simulate import simulate
from .store import MetricsStore

_STATUS = {
    "validation": 400,
    "catalogue-mismatch": 400,
    "numeric-input": 400,
    "not-found": 404,
    "stale-write": 409,
    "infeasible": 422,
    "grid-cap": 422,
    "incomplete-catalogue": 422,
    "internal": 500,
}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


class _Jobs:
    """In-process job registry over a bounded worker pool."""

    def __init__(self, workers: int = 2):
        self._executor = ThreadPoolExecutor(max_workers=workers)
        self._lock = threading.Lock()
        self._jobs: dict[str, dict] = {}

    def submit(self, kind: str, fn) -> str:
        job_id = uuid.uuid4().hex[:12]
        with self._lock:
            self._jobs[job_id] = {"id": job_id, "kind": kind, "status": "running"}

        def run():
            try:
                result = fn()
            except QAPlanError as exc:
                with self._lock:
                    self._jobs[job_id] = {
                        "id": job_id, "kind": kind, "status": "failed", "error": exc.to_doc(),
                    }
            except Exception as exc:  # pragma: no cover - defensive
                with self._lock:
                    self._jobs[job_id] = {
                        "id": job_id, "kind": kind, "status": "failed",
                        "error": {"code": "internal", "message": str(exc)},
                    }
            else:
                with self._lock:
                    self._jobs[job_id] = {
                        "id": job_id, "kind": kind, "status": "done", "result": result,
                    }

        self._executor.submit(run)
        return job_id

    def get(self, job_id: str) -> dict:
        with self._lock:
            job = self._jobs.get(job_id)
        if job is None:
            raise NotFoundError(f"job {job_id!r} does not exist")
        return dict(job)


def create_app(data_dir) -> FastAPI:
    store = MetricsStore(data_dir)
    jobs = _Jobs()
    scenario_write_lock = threading.Lock()
    app = FastAPI(title="qaplan service", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.store = store

    @app.exception_handler(QAPlanError)
    async def qaplan_error(request: Request, exc: QAPlanError):
        return JSONResponse(status_code=_STATUS.get(exc.code, 500), content=exc.to_doc())

    @app.exception_handler(RequestValidationError)
    async def body_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400, content={"code": "validation", "message": str(exc.errors()[:3])}
        )

    # -- catalogue / measurements -----------------------------------------

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/catalogue")
    def get_catalogue(version: int | None = None):
        return schemas.catalogue_to_doc(store.get_catalogue(version))

    @app.post("/catalogue")
    def put_catalogue(body: dict = Body(...)):
        catalogue = schemas.catalogue_from_doc(body)
        return schemas.catalogue_to_doc(store.put_catalogue(catalogue))

    @app.post("/measurements")
    def ingest(body: dict = Body(...)):
        return store.ingest(body)

    @app.post("/catalogue/recompute")
    def recompute(body: dict = Body(...)):
        project_ids = body.get("project_ids")
        if not isinstance(project_ids, list) or not project_ids:
            raise ValidationError("project_ids must be a non-empty list", field="project_ids")
        base = body.get("base_version")
        return schemas.catalogue_to_doc(store.recompute_catalogue(set(project_ids), base))

    # -- scenarios ----------------------------------------------------------

    def _scenario_inputs(doc: dict, plan_override: dict | None = None):
        catalogue = store.get_catalogue(doc["catalogue_version"])
        profile = schemas.profile_from_doc(doc["profile"])
        plan_doc = plan_override if plan_override is not None else doc["plan"]
        plan = schemas.plan_from_doc(plan_doc)
        return catalogue, profile, plan

    def _refresh(doc: dict) -> dict:
        catalogue, profile, plan = _scenario_inputs(doc)
        doc["breakdown"] = schemas.breakdown_to_doc(evaluate_plan(plan, profile, catalogue))
        return doc

    @app.post("/scenarios", status_code=201)
    def create_scenario(body: dict = Body(...)):
        name = body.get("name")
        if not isinstance(name, str) or not name:
            raise ValidationError("scenario name must be a non-empty string", field="name")
        if "profile" not in body or "plan" not in body:
            raise ValidationError("scenario needs profile and plan documents", field="body")
        version = body.get("catalogue_version")
        if version is None:
            version = store.get_catalogue().version
        doc = {
            "schema_version": schemas.SCHEMA_VERSION,
            "kind": "scenario",
            "scenario_id": uuid.uuid4().hex[:12],
            "name": name,
            "catalogue_version": int(version),
            "profile": schemas.profile_to_doc(schemas.profile_from_doc(body["profile"])),
            "plan": schemas.plan_to_doc(schemas.plan_from_doc(body["plan"])),
            "constraints": body.get("constraints", []),
            "rev": 1,
            "created": _now(),
            "modified": _now(),
        }
        for con in doc["constraints"]:
            schemas.constraint_from_doc(con)  # validate
        with scenario_write_lock:
            _refresh(doc)
            store.put_scenario(doc)
        return doc

    @app.get("/scenarios")
    def list_scenarios():
        return {"scenarios": store.list_scenarios()}

    @app.get("/scenarios/{scenario_id}")
    def get_scenario(scenario_id: str):
        return store.get_scenario(scenario_id)

    @app.put("/scenarios/{scenario_id}")
    def update_scenario(scenario_id: str, body: dict = Body(...)):
        with scenario_write_lock:
            doc = store.get_scenario(scenario_id)
            if body.get("rev") != doc["rev"]:
                raise StaleWriteError(
                    f"scenario {scenario_id!r} is at rev {doc['rev']}, request carried {body.get('rev')!r}"
                )
            if "name" in body:
                if not isinstance(body["name"], str) or not body["name"]:
                    raise ValidationError("scenario name must be a non-empty string", field="name")
                doc["name"] = body["name"]
            if "catalogue_version" in body:
                doc["catalogue_version"] = int(body["catalogue_version"])
            if "profile" in body:
                doc["profile"] = schemas.profile_to_doc(schemas.profile_from_doc(body["profile"]))
            if "plan" in body:
                doc["plan"] = schemas.plan_to_doc(schemas.plan_from_doc(body["plan"]))
            if "constraints" in body:
                for con in body["constraints"]:
                    schemas.constraint_from_doc(con)
                doc["constraints"] = body["constraints"]
            doc["rev"] += 1
            doc["modified"] = _now()
            _refresh(doc)
            store.put_scenario(doc)
        return doc

    @app.delete("/scenarios/{scenario_id}")
    def delete_scenario(scenario_id: str):
        with scenario_write_lock:
            store.delete_scenario(scenario_id)
        return {"deleted": scenario_id}

    # -- computations ---------------------------------------------------------

    @app.post("/scenarios/{scenario_id}/evaluate")
    def evaluate(scenario_id: str, body: dict | None = Body(None)):
        doc = store.get_scenario(scenario_id)
        plan_override = body.get("plan") if body else None
        catalogue, profile, plan = _scenario_inputs(doc, plan_override)
        return schemas.breakdown_to_doc(evaluate_plan(plan, profile, catalogue))

    def _problem_for(doc: dict, settings_doc: dict | None, constraints_doc=None) -> OptimizationProblem:
        catalogue, profile, plan = _scenario_inputs(doc)
        technique_ids = tuple(s.technique_id for s in plan.steps) or catalogue.technique_ids
        con_docs = doc.get("constraints", []) if constraints_doc is None else constraints_doc
        constraints = tuple(schemas.constraint_from_doc(c) for c in con_docs)
        return OptimizationProblem(
            technique_ids=technique_ids,
            profile=profile,
            catalogue=catalogue,
            constraints=constraints,
            settings=schemas.settings_from_doc(settings_doc),
        )

    @app.post("/scenarios/{scenario_id}/optimize")
    def optimize_scenario(scenario_id: str, body: dict | None = Body(None)):
        doc = store.get_scenario(scenario_id)
        body = body or {}
        problem = _problem_for(doc, body.get("settings"), body.get("constraints"))
        job_id = jobs.submit("optimize", lambda: schemas.result_to_doc(optimize(problem)))
        return {"job_id": job_id}

    @app.post("/scenarios/{scenario_id}/simulate")
    def simulate_scenario(scenario_id: str, body: dict = Body(...)):
        doc = store.get_scenario(scenario_id)
        config = schemas.sim_config_from_doc(body)
        catalogue, profile, plan = _scenario_inputs(doc, body.get("plan"))
        job_id = jobs.submit(
            "simulate", lambda: schemas.sim_report_to_doc(simulate(plan, profile, catalogue, config))
        )
        return {"job_id": job_id}

    @app.post("/scenarios/{scenario_id}/sensitivity")
    def sensitivity_scenario(scenario_id: str, body: dict | None = Body(None)):
        doc = store.get_scenario(scenario_id)
        body = body or {}
        problem = _problem_for(doc, None)
        _, _, plan = _scenario_inputs(doc, body.get("plan"))
        entries = sensitivity(
            problem,
            plan,
            factor_selector=body.get("factors"),
            relative_range=float(body.get("range", 0.2)),
        )
        return schemas.sensitivity_to_doc(entries)

    @app.post("/scenarios/compare")
    def compare(body: dict = Body(...)):
        ids = body.get("ids")
        if not isinstance(ids, list) or not ids:
            raise ValidationError("ids must be a non-empty list of scenario ids", field="ids")
        docs = [store.get_scenario(sid) for sid in ids]
        entries = []
        for doc in docs:
            catalogue, profile, plan = _scenario_inputs(doc)
            entries.append(
                {
                    "scenario_id": doc["scenario_id"],
                    "name": doc["name"],
                    "catalogue_version": doc["catalogue_version"],
                    "breakdown": schemas.breakdown_to_doc(evaluate_plan(plan, profile, catalogue)),
                }
            )
        first = entries[0]["breakdown"]
        deltas = [
            {
                "scenario_id": e["scenario_id"],
                "direct": e["breakdown"]["direct"] - first["direct"],
                "future": e["breakdown"]["future"] - first["future"],
                "revenue": e["breakdown"]["revenue"] - first["revenue"],
                "net": e["breakdown"]["net"] - first["net"],
            }
            for e in entries
        ]
        return {"scenarios": entries, "deltas": deltas}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        return jobs.get(job_id)

    return app


def run(data_dir, host: str = "127.0.0.1", port: int = 8000):
    import uvicorn

    uvicorn.run(create_app(data_dir), host=host, port=port, log_level="warning")
