"""Command-line driver covering the full analytic tool chain.

Inputs are canonical JSON documents (``-`` reads standard input); the
``--json`` output mode emits exactly the documents the HTTP service
serves, through the same serialization path. Table mode prints
deterministic plain text. Exit code 0 on success; structured error JSON
on stderr and exit code 1 otherwise.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import schemas
from .economics import evaluate_plan
from .errors import QAPlanError, ValidationError
from .optimize import OptimizationProblem, enumerate_grid, optimize, sensitivity
from .simulate import SimulationConfig, simulate
from .store import MetricsStore

_DATA_DIR_ENV = "QAPLAN_DATA_DIR"


def _read_doc(path: str) -> dict:
    if path == "-":
        return schemas.parse_document(sys.stdin.read())
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"input file {path!r} does not exist", field="path")
    return schemas.parse_document(p.read_text(encoding="utf-8"))


def _store(args) -> MetricsStore:
    data_dir = args.data_dir or os.environ.get(_DATA_DIR_ENV)
    if not data_dir:
        raise ValidationError(
            f"no data directory: pass --data-dir or set {_DATA_DIR_ENV}", field="data_dir"
        )
    return MetricsStore(data_dir)


def _load_catalogue(args):
    """--catalogue accepts a version number (store lookup) or a document path."""
    ref = args.catalogue
    if ref is not None and ref.isdigit():
        return _store(args).get_catalogue(int(ref))
    if ref is None:
        return _store(args).get_catalogue()
    return schemas.catalogue_from_doc(_read_doc(ref))


def _emit(args, doc: dict, table: str):
    if args.json:
        sys.stdout.write(schemas.canonical_json(doc))
    else:
        sys.stdout.write(table if table.endswith("\n") else table + "\n")


def _money(value: float) -> str:
    return f"{value:,.2f}"


# ---------------------------------------------------------------------------
# commands


def _cmd_catalogue_show(args):
    catalogue = _store(args).get_catalogue(args.version)
    doc = schemas.catalogue_to_doc(catalogue)
    lines = [
        f"catalogue {catalogue.catalogue_id} v{catalogue.version} "
        f"({catalogue.currency}, effort in {catalogue.effort_unit})",
        f"  defect types: {', '.join(catalogue.type_ids)}",
        f"  techniques:   {', '.join(catalogue.technique_ids)}",
    ]
    _emit(args, doc, "\n".join(lines))
    return 0


def _cmd_catalogue_recompute(args):
    projects = [p for p in args.projects.split(",") if p]
    catalogue = _store(args).recompute_catalogue(set(projects), args.base_version)
    doc = schemas.catalogue_to_doc(catalogue)
    _emit(args, doc, f"recomputed catalogue version {catalogue.version} from projects {','.join(sorted(projects))}")
    return 0


def _cmd_measurements_ingest(args):
    ack = _store(args).ingest(_read_doc(args.file))
    note = "duplicate, store unchanged" if ack["duplicate"] else "stored"
    _emit(args, ack, f"batch {ack['batch_id'][:12]} ({ack['project_id']}): {note}")
    return 0


def _evaluate_inputs(args):
    catalogue = _load_catalogue(args)
    profile = schemas.profile_from_doc(_read_doc(args.profile))
    plan = schemas.plan_from_doc(_read_doc(args.plan))
    return catalogue, profile, plan


def _breakdown_table(doc: dict) -> str:
    lines = [
        f"direct   {_money(doc['direct'])}",
        f"future   {_money(doc['future'])}",
        f"revenue  {_money(doc['revenue'])}",
        f"net      {_money(doc['net'])}",
    ]
    if doc["per_technique"]:
        lines.append("per technique (direct / revenue):")
        for tid, c in doc["per_technique"].items():
            lines.append(f"  {tid:<16} {_money(c['direct']):>14}  {_money(c['revenue']):>14}")
    if doc["per_type"]:
        lines.append("per defect type (direct / future / revenue):")
        for ty, c in doc["per_type"].items():
            lines.append(
                f"  {ty:<16} {_money(c['direct']):>14}  {_money(c['future']):>14}  {_money(c['revenue']):>14}"
            )
    return "\n".join(lines)


def _cmd_evaluate(args):
    catalogue, profile, plan = _evaluate_inputs(args)
    doc = schemas.breakdown_to_doc(evaluate_plan(plan, profile, catalogue))
    _emit(args, doc, _breakdown_table(doc))
    return 0


def _cmd_optimize(args):
    problem = schemas.problem_from_doc(_read_doc(args.problem))
    result = optimize(problem)
    result_doc = schemas.result_to_doc(result)
    lines = [f"status: {result.status}", f"objective (net): {_money(result.objective)}"]
    for step in result.best_plan.steps:
        lines.append(f"  {step.technique_id:<16} effort {step.effort:.6f}")
    out_doc = result_doc
    if args.grid_check:
        oracle = enumerate_grid(problem, step=args.grid_step)
        gap = max(0.0, oracle.objective - result.objective)
        lines.append(f"grid check: lattice best {_money(oracle.objective)} (step {args.grid_step}), gap {gap:.3e}")
        out_doc = {
            "kind": "optimization_with_grid_check",
            "result": result_doc,
            "grid_check": {"step": args.grid_step, "objective": oracle.objective, "gap": gap},
        }
    _emit(args, out_doc, "\n".join(lines))
    return 0


def _cmd_simulate(args):
    catalogue = _load_catalogue(args)
    profile = schemas.profile_from_doc(_read_doc(args.profile))
    plan = schemas.plan_from_doc(_read_doc(args.plan))
    config = SimulationConfig(
        trials=args.trials, seed=args.seed, fault_count_mode="poisson" if args.poisson else "fixed"
    )
    report = simulate(plan, profile, catalogue, config)
    doc = schemas.sim_report_to_doc(report)
    analytic = schemas.breakdown_to_doc(evaluate_plan(plan, profile, catalogue))
    lines = [
        f"trials {report.trials} ({report.fault_count_mode} population), seed {args.seed}",
        f"{'component':<10} {'analytic':>14} {'simulated':>14} {'std error':>12}",
    ]
    for name in ("direct", "future", "revenue", "net"):
        stats = doc[name]
        lines.append(
            f"{name:<10} {_money(analytic[name]):>14} {_money(stats['mean']):>14} {stats['std_error']:>12.4f}"
        )
    lines.append(f"conservation violations: {report.conservation_violations}")
    _emit(args, doc, "\n".join(lines))
    return 0


def _cmd_sensitivity(args):
    bundle = _read_doc(args.scenario)
    if bundle.get("kind") != "scenario_file":
        raise ValidationError(
            "sensitivity expects a scenario_file document with problem and plan", field="kind"
        )
    problem = schemas.problem_from_doc(bundle["problem"])
    plan = schemas.plan_from_doc(bundle["plan"])
    factors = [f for f in args.factors.split(",") if f] if args.factors else None
    entries = sensitivity(problem, plan, factor_selector=factors, relative_range=args.range)
    doc = schemas.sensitivity_to_doc(entries)
    lines = [f"{'factor':<32} {'net low':>14} {'net high':>14} {'swing':>14}"]
    for e in entries:
        flag = " (clamped)" if e.clamped else ""
        lines.append(
            f"{e.factor:<32} {_money(e.net_low):>14} {_money(e.net_high):>14} {_money(e.swing):>14}{flag}"
        )
    _emit(args, doc, "\n".join(lines))
    return 0


def _cmd_serve(args):
    from .service import run

    data_dir = args.data_dir or os.environ.get(_DATA_DIR_ENV)
    if not data_dir:
        raise ValidationError(
            f"no data directory: pass --data-dir or set {_DATA_DIR_ENV}", field="data_dir"
        )
    run(data_dir, host=args.host, port=args.port)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qaplan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, data_dir=True):
        p.add_argument("--json", action="store_true", help="emit canonical JSON instead of a table")
        if data_dir:
            p.add_argument("--data-dir", default=None, help=f"document store root (or ${_DATA_DIR_ENV})")

    cat = sub.add_parser("catalogue", help="show or recompute metrics catalogue versions")
    cat_sub = cat.add_subparsers(dest="subcommand", required=True)
    show = cat_sub.add_parser("show")
    show.add_argument("--version", type=int, default=None)
    add_common(show)
    show.set_defaults(fn=_cmd_catalogue_show)
    rec = cat_sub.add_parser("recompute")
    rec.add_argument("--projects", required=True, help="comma-separated project ids")
    rec.add_argument("--base-version", type=int, default=None)
    add_common(rec)
    rec.set_defaults(fn=_cmd_catalogue_recompute)

    meas = sub.add_parser("measurements", help="ingest measurement batches")
    meas_sub = meas.add_subparsers(dest="subcommand", required=True)
    ingest = meas_sub.add_parser("ingest")
    ingest.add_argument("file", help="measurement batch document ('-' for stdin)")
    add_common(ingest)
    ingest.set_defaults(fn=_cmd_measurements_ingest)

    ev = sub.add_parser("evaluate", help="cost breakdown of a plan")
    ev.add_argument("--catalogue", required=True, help="catalogue document path or store version number")
    ev.add_argument("--profile", required=True)
    ev.add_argument("--plan", required=True)
    add_common(ev)
    ev.set_defaults(fn=_cmd_evaluate)

    opt = sub.add_parser("optimize", help="maximize net value of an optimization problem document")
    opt.add_argument("--problem", required=True)
    opt.add_argument("--grid-check", action="store_true", help="also run the exhaustive lattice oracle")
    opt.add_argument("--grid-step", type=float, default=0.5)
    add_common(opt, data_dir=False)
    opt.set_defaults(fn=_cmd_optimize)

    sim = sub.add_parser("simulate", help="Monte-Carlo check of a plan against the analytics")
    sim.add_argument("--catalogue", required=True)
    sim.add_argument("--profile", required=True)
    sim.add_argument("--plan", required=True)
    sim.add_argument("--trials", type=int, required=True)
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--poisson", action="store_true", help="Poisson fault population instead of fixed")
    add_common(sim)
    sim.set_defaults(fn=_cmd_simulate)

    sens = sub.add_parser("sensitivity", help="rank input factors by net swing")
    sens.add_argument("--scenario", required=True, help="scenario_file document with problem and plan")
    sens.add_argument("--range", type=float, default=0.2)
    sens.add_argument("--factors", default=None, help="comma-separated factor ids or categories")
    add_common(sens, data_dir=False)
    sens.set_defaults(fn=_cmd_sensitivity)

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--port", type=int, default=8000)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--data-dir", default=None)
    srv.set_defaults(fn=_cmd_serve, json=False)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except QAPlanError as exc:
        sys.stderr.write(json.dumps(exc.to_doc(), sort_keys=True) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
