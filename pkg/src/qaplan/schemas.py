"""Canonical JSON document forms for every persisted or transported type.

One serialization path is shared by the document store, the CLI and the
HTTP service, so identical inputs always produce identical bytes:

* keys sorted, two-space indent, UTF-8, trailing newline;
* numbers written with Python's shortest round-tripping repr;
* every document carries ``schema_version`` and a ``kind`` tag.

The ``*_from_doc`` parsers validate structure (required keys, value
types) before handing values to the model constructors, which enforce
the semantic invariants.
"""

from __future__ import annotations

import hashlib
import json

from .errors import ValidationError
from .model import (
    CostBreakdown,
    DefectType,
    DifficultyModel,
    FaultProfile,
    MetricsCatalogue,
    QAPlan,
    Technique,
)
from .optimize import (
    Budget,
    Constraint,
    EffortBounds,
    FixedOrder,
    FixedOrNone,
    OptimizationProblem,
    OptimizationResult,
    SensitivityEntry,
    SolverSettings,
)
from .simulate import SimulationConfig, SimulationReport

SCHEMA_VERSION = 1


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def canonical_bytes(doc) -> bytes:
    return canonical_json(doc).encode("utf-8")


def content_hash(doc) -> str:
    return hashlib.sha256(canonical_bytes(doc)).hexdigest()


def parse_document(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ValidationError("document root must be a JSON object")
    return doc


def _need(doc: dict, key: str, kind=None, where: str = "document"):
    if key not in doc:
        raise ValidationError(f"{where} is missing required field {key!r}", field=key)
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise ValidationError(
            f"{where}.{key} has wrong type {type(value).__name__}", field=key
        )
    return value


# ---------------------------------------------------------------------------
# difficulty / technique / catalogue


def difficulty_to_doc(model: DifficultyModel) -> dict:
    if model.law == "exponential":
        return {
            "law": "exponential",
            "base_difficulty": model.base_difficulty,
            "reference_effort": model.reference_effort,
        }
    return {"law": "tabulated", "knots": [[e, d] for e, d in model.knots]}


def difficulty_from_doc(doc: dict) -> DifficultyModel:
    law = _need(doc, "law", str, "difficulty")
    if law == "exponential":
        return DifficultyModel.exponential(
            _need(doc, "base_difficulty", (int, float), "difficulty"),
            _need(doc, "reference_effort", (int, float), "difficulty"),
        )
    if law == "tabulated":
        return DifficultyModel.tabulated(tuple(map(tuple, _need(doc, "knots", list, "difficulty"))))
    raise ValidationError(f"unknown difficulty law {law!r}", field="law")


def technique_to_doc(tech: Technique) -> dict:
    return {
        "id": tech.id,
        "name": tech.name,
        "setup_cost": tech.setup_cost,
        "execution_cost_rate": tech.execution_cost_rate,
        "execution_cost_knots": (
            [[e, c] for e, c in tech.execution_cost_knots] if tech.execution_cost_knots else None
        ),
        "order_index": tech.order_index,
        "removal_costs": dict(sorted(tech.removal_costs.items())),
        "difficulty": {k: difficulty_to_doc(v) for k, v in sorted(tech.difficulty.items())},
    }


def technique_from_doc(doc: dict) -> Technique:
    knots = doc.get("execution_cost_knots")
    return Technique(
        id=_need(doc, "id", str, "technique"),
        name=str(doc.get("name", "")),
        setup_cost=_need(doc, "setup_cost", (int, float), "technique"),
        execution_cost_rate=_need(doc, "execution_cost_rate", (int, float), "technique"),
        removal_costs={str(k): float(v) for k, v in _need(doc, "removal_costs", dict, "technique").items()},
        difficulty={
            str(k): difficulty_from_doc(v) for k, v in _need(doc, "difficulty", dict, "technique").items()
        },
        order_index=int(doc.get("order_index", 0)),
        execution_cost_knots=tuple(map(tuple, knots)) if knots else None,
    )


def defect_type_to_doc(dt: DefectType) -> dict:
    return {
        "id": dt.id,
        "name": dt.name,
        "share": dt.share,
        "failure_probability": dt.failure_probability,
        "field_removal_cost": dt.field_removal_cost,
        "field_effect_cost": dt.field_effect_cost,
    }


def defect_type_from_doc(doc: dict) -> DefectType:
    return DefectType(
        id=_need(doc, "id", str, "defect type"),
        name=str(doc.get("name", "")),
        share=_need(doc, "share", (int, float), "defect type"),
        failure_probability=_need(doc, "failure_probability", (int, float), "defect type"),
        field_removal_cost=_need(doc, "field_removal_cost", (int, float), "defect type"),
        field_effect_cost=_need(doc, "field_effect_cost", (int, float), "defect type"),
    )


def catalogue_to_doc(cat: MetricsCatalogue) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "metrics_catalogue",
        "catalogue_id": cat.catalogue_id,
        "version": cat.version,
        "currency": cat.currency,
        "effort_unit": cat.effort_unit,
        "defect_types": [defect_type_to_doc(t) for t in cat.defect_types],
        "techniques": [technique_to_doc(t) for t in cat.techniques],
        "provenance": dict(sorted(cat.provenance.items())),
    }


def catalogue_from_doc(doc: dict) -> MetricsCatalogue:
    if doc.get("kind") != "metrics_catalogue":
        raise ValidationError("not a metrics_catalogue document", field="kind")
    return MetricsCatalogue(
        catalogue_id=_need(doc, "catalogue_id", str, "catalogue"),
        version=_need(doc, "version", int, "catalogue"),
        currency=_need(doc, "currency", str, "catalogue"),
        effort_unit=_need(doc, "effort_unit", str, "catalogue"),
        defect_types=tuple(defect_type_from_doc(t) for t in _need(doc, "defect_types", list, "catalogue")),
        techniques=tuple(technique_from_doc(t) for t in _need(doc, "techniques", list, "catalogue")),
        provenance={str(k): str(v) for k, v in doc.get("provenance", {}).items()},
    )


# ---------------------------------------------------------------------------
# profile / plan / breakdown


def profile_to_doc(profile: FaultProfile) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "fault_profile",
        "estimated_fault_count": profile.estimated_fault_count,
        "catalogue_ref": profile.catalogue_ref,
        "share_overrides": dict(sorted(profile.share_overrides.items())) if profile.share_overrides else None,
    }


def profile_from_doc(doc: dict) -> FaultProfile:
    if doc.get("kind") != "fault_profile":
        raise ValidationError("not a fault_profile document", field="kind")
    overrides = doc.get("share_overrides")
    return FaultProfile(
        estimated_fault_count=_need(doc, "estimated_fault_count", (int, float), "profile"),
        catalogue_ref=str(doc.get("catalogue_ref", "")),
        share_overrides={str(k): float(v) for k, v in overrides.items()} if overrides else None,
    )


def plan_to_doc(plan: QAPlan) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "qa_plan",
        "steps": [{"technique_id": s.technique_id, "effort": s.effort} for s in plan.steps],
    }


def plan_from_doc(doc: dict) -> QAPlan:
    if doc.get("kind") != "qa_plan":
        raise ValidationError("not a qa_plan document", field="kind")
    steps = _need(doc, "steps", list, "plan")
    return QAPlan.of(
        *(
            (_need(s, "technique_id", str, "plan step"), _need(s, "effort", (int, float), "plan step"))
            for s in steps
        )
    )


def breakdown_to_doc(b: CostBreakdown) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "cost_breakdown",
        "direct": b.direct,
        "future": b.future,
        "revenue": b.revenue,
        "net": b.net,
        "per_technique": {
            k: {"direct": v.direct, "revenue": v.revenue} for k, v in sorted(b.per_technique.items())
        },
        "per_type": {
            k: {"direct": v.direct, "future": v.future, "revenue": v.revenue}
            for k, v in sorted(b.per_type.items())
        },
    }


# ---------------------------------------------------------------------------
# constraints / problems / results


def constraint_to_doc(con: Constraint) -> dict:
    if isinstance(con, Budget):
        return {"variant": "budget", "t_max": con.t_max}
    if isinstance(con, FixedOrNone):
        return {"variant": "fixed_or_none", "technique_id": con.technique_id, "fixed_effort": con.fixed_effort}
    if isinstance(con, EffortBounds):
        return {"variant": "bounds", "technique_id": con.technique_id, "min": con.lower, "max": con.upper}
    if isinstance(con, FixedOrder):
        return {"variant": "fixed_order", "technique_ids": list(con.technique_ids)}
    raise ValidationError(f"unknown constraint type {type(con).__name__}")


def constraint_from_doc(doc: dict) -> Constraint:
    variant = _need(doc, "variant", str, "constraint")
    if variant == "budget":
        return Budget(t_max=_need(doc, "t_max", (int, float), "constraint"))
    if variant == "fixed_or_none":
        return FixedOrNone(
            technique_id=_need(doc, "technique_id", str, "constraint"),
            fixed_effort=_need(doc, "fixed_effort", (int, float), "constraint"),
        )
    if variant == "bounds":
        return EffortBounds(
            technique_id=_need(doc, "technique_id", str, "constraint"),
            lower=_need(doc, "min", (int, float), "constraint"),
            upper=_need(doc, "max", (int, float), "constraint"),
        )
    if variant == "fixed_order":
        return FixedOrder(technique_ids=tuple(_need(doc, "technique_ids", list, "constraint")))
    raise ValidationError(f"unknown constraint variant {variant!r}", field="variant")


def settings_to_doc(s: SolverSettings) -> dict:
    return {
        "grid_points": s.grid_points,
        "multistarts": s.multistarts,
        "seed": s.seed,
        "max_sweeps": s.max_sweeps,
        "tolerance": s.tolerance,
    }


def settings_from_doc(doc: dict | None) -> SolverSettings:
    if not doc:
        return SolverSettings()
    defaults = SolverSettings()
    return SolverSettings(
        grid_points=int(doc.get("grid_points", defaults.grid_points)),
        multistarts=int(doc.get("multistarts", defaults.multistarts)),
        seed=int(doc.get("seed", defaults.seed)),
        max_sweeps=int(doc.get("max_sweeps", defaults.max_sweeps)),
        tolerance=float(doc.get("tolerance", defaults.tolerance)),
    )


def problem_to_doc(problem: OptimizationProblem) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "optimization_problem",
        "technique_ids": list(problem.technique_ids),
        "profile": profile_to_doc(problem.profile),
        "catalogue": catalogue_to_doc(problem.catalogue),
        "constraints": [constraint_to_doc(c) for c in problem.constraints],
        "settings": settings_to_doc(problem.settings),
    }


def problem_from_doc(doc: dict) -> OptimizationProblem:
    if doc.get("kind") != "optimization_problem":
        raise ValidationError("not an optimization_problem document", field="kind")
    return OptimizationProblem(
        technique_ids=tuple(_need(doc, "technique_ids", list, "problem")),
        profile=profile_from_doc(_need(doc, "profile", dict, "problem")),
        catalogue=catalogue_from_doc(_need(doc, "catalogue", dict, "problem")),
        constraints=tuple(constraint_from_doc(c) for c in doc.get("constraints", [])),
        settings=settings_from_doc(doc.get("settings")),
    )


def result_to_doc(result: OptimizationResult) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "optimization_result",
        "status": result.status,
        "objective": result.objective,
        "best_plan": plan_to_doc(result.best_plan),
        "best_breakdown": breakdown_to_doc(result.best_breakdown),
        "trace": [[i, v] for i, v in result.trace],
    }


def sensitivity_to_doc(entries: list[SensitivityEntry]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "sensitivity_ranking",
        "entries": [
            {
                "factor": e.factor,
                "net_low": e.net_low,
                "net_high": e.net_high,
                "swing": e.swing,
                "clamped": e.clamped,
            }
            for e in entries
        ],
    }


# ---------------------------------------------------------------------------
# simulation


def sim_config_to_doc(config: SimulationConfig) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "simulation_config",
        "trials": config.trials,
        "seed": config.seed,
        "fault_count_mode": config.fault_count_mode,
    }


def sim_config_from_doc(doc: dict) -> SimulationConfig:
    return SimulationConfig(
        trials=_need(doc, "trials", int, "simulation config"),
        seed=_need(doc, "seed", int, "simulation config"),
        fault_count_mode=str(doc.get("fault_count_mode", "fixed")),
    )


def sim_report_to_doc(report: SimulationReport) -> dict:
    def stats(c):
        return {"mean": c.mean, "std_error": c.std_error}

    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "simulation_report",
        "trials": report.trials,
        "fault_count_mode": report.fault_count_mode,
        "direct": stats(report.direct),
        "future": stats(report.future),
        "revenue": stats(report.revenue),
        "net": stats(report.net),
        "detections": {
            tech: dict(sorted(types.items())) for tech, types in sorted(report.detections.items())
        },
        "conservation_violations": report.conservation_violations,
        "max_conservation_residual": report.max_conservation_residual,
    }


# ---------------------------------------------------------------------------
# measurement batches (validated as raw documents so every problem is listed)


_BATCH_COUNT_FIELDS = ("count",)


def validate_batch_doc(doc: dict) -> list[str]:
    """Collect every schema violation in a measurement batch document."""
    problems: list[str] = []

    def check_number(value, path, minimum=0.0, integer=False):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            problems.append(f"{path}: expected a number, got {value!r}")
            return
        if integer and not isinstance(value, int):
            problems.append(f"{path}: expected an integer, got {value!r}")
            return
        if value < minimum:
            problems.append(f"{path}: must be >= {minimum}, got {value!r}")

    if doc.get("kind") != "measurement_batch":
        problems.append("kind: must be 'measurement_batch'")
    if not isinstance(doc.get("project_id"), str) or not doc.get("project_id"):
        problems.append("project_id: must be a non-empty string")

    detections = doc.get("detections", {})
    if not isinstance(detections, dict):
        problems.append("detections: must be an object")
        detections = {}
    for tech, per_type in detections.items():
        if not isinstance(per_type, dict):
            problems.append(f"detections.{tech}: must be an object")
            continue
        for type_id, record in per_type.items():
            if not isinstance(record, dict):
                problems.append(f"detections.{tech}.{type_id}: must be an object")
                continue
            check_number(record.get("count"), f"detections.{tech}.{type_id}.count", integer=True)
            check_number(record.get("total_removal_cost"), f"detections.{tech}.{type_id}.total_removal_cost")

    field_data = doc.get("field", {})
    if not isinstance(field_data, dict):
        problems.append("field: must be an object")
        field_data = {}
    for type_id, record in field_data.items():
        if not isinstance(record, dict):
            problems.append(f"field.{type_id}: must be an object")
            continue
        check_number(record.get("failure_count"), f"field.{type_id}.failure_count", integer=True)
        check_number(record.get("total_removal_cost"), f"field.{type_id}.total_removal_cost")
        check_number(record.get("total_effect_cost"), f"field.{type_id}.total_effect_cost")
        check_number(record.get("escaped_without_failure"), f"field.{type_id}.escaped_without_failure")

    usage = doc.get("techniques", {})
    if not isinstance(usage, dict):
        problems.append("techniques: must be an object")
        usage = {}
    for tech, record in usage.items():
        if not isinstance(record, dict):
            problems.append(f"techniques.{tech}: must be an object")
            continue
        check_number(record.get("setup_cost"), f"techniques.{tech}.setup_cost")
        check_number(record.get("execution_cost"), f"techniques.{tech}.execution_cost")
        check_number(record.get("effort"), f"techniques.{tech}.effort")

    if "total_fault_estimate" in doc:
        check_number(doc["total_fault_estimate"], "total_fault_estimate")

    order = doc.get("technique_order")
    if order is not None:
        if not isinstance(order, list) or not all(isinstance(t, str) for t in order):
            problems.append("technique_order: must be a list of technique ids")
        elif len(set(order)) != len(order):
            problems.append("technique_order: ids must be distinct")

    return problems


def normalize_batch_doc(doc: dict) -> dict:
    """Canonical content form of a batch: sorted maps, schema tag, no volatile fields."""
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "measurement_batch",
        "project_id": doc["project_id"],
        "detections": {
            tech: {
                type_id: {
                    "count": rec["count"],
                    "total_removal_cost": rec["total_removal_cost"],
                }
                for type_id, rec in sorted(per_type.items())
            }
            for tech, per_type in sorted(doc.get("detections", {}).items())
        },
        "field": {
            type_id: {
                "failure_count": rec["failure_count"],
                "total_removal_cost": rec["total_removal_cost"],
                "total_effect_cost": rec["total_effect_cost"],
                "escaped_without_failure": rec["escaped_without_failure"],
            }
            for type_id, rec in sorted(doc.get("field", {}).items())
        },
        "techniques": {
            tech: {
                "setup_cost": rec["setup_cost"],
                "execution_cost": rec["execution_cost"],
                "effort": rec["effort"],
            }
            for tech, rec in sorted(doc.get("techniques", {}).items())
        },
        "total_fault_estimate": doc.get("total_fault_estimate", 0),
        "technique_order": list(doc["technique_order"]) if doc.get("technique_order") else None,
    }
