"""Append-only document store for catalogues, measurement batches and scenarios.

One directory of canonical JSON files, no database:

    <root>/catalogues/v000001.json ...   immutable catalogue versions
    <root>/batches/<sha256>.json         measurement batches, content-addressed
    <root>/scenarios/<id>.json           what-if scenarios (service layer)

Catalogue versions are never rewritten; every write allocates the next
version number. Batch ids are the SHA-256 of the batch's canonical
content, which makes ingestion idempotent. Writes go through a single
in-process lock and land atomically (write-then-rename).

Recomputation pools the selected projects' batches and re-derives the
measured quantities:

* per (technique, type) removal cost = pooled removal cost / detections,
* field removal/effect costs = pooled field costs / field failures,
* type shares = pooled per-type fault counts (detected + field failures
  + escaped without failure) / total,
* failure probability = field failures / (field failures + escaped
  without failure).

Everything else (setup costs, execution rates, difficulty models, unit
labels) carries over from the base version; a quantity whose pooled
denominator is zero also carries over and is flagged ``carried-over`` in
the provenance map. The very first version cannot be recomputed into
existence: it must be supplied explicitly (bootstrap from literature
values), otherwise recomputation fails listing the gaps.
"""

from __future__ import annotations

import math
import os
import threading
from dataclasses import replace
from pathlib import Path

from . import schemas
from .errors import IncompleteCatalogueError, NotFoundError, ValidationError
from .model import DifficultyModel, FaultProfile, MetricsCatalogue

_CATALOGUE_DIR = "catalogues"
_BATCH_DIR = "batches"
_SCENARIO_DIR = "scenarios"


class MetricsStore:
    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        for sub in (_CATALOGUE_DIR, _BATCH_DIR, _SCENARIO_DIR):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()

    # -- low-level document IO ------------------------------------------------

    def _write_atomic(self, path: Path, doc: dict, overwrite: bool = False):
        if not overwrite and path.exists():
            raise ValidationError(f"refusing to overwrite immutable document {path.name}")
        tmp = path.with_suffix(".tmp")
        tmp.write_bytes(schemas.canonical_bytes(doc))
        os.replace(tmp, path)

    def _read(self, path: Path) -> dict:
        if not path.exists():
            raise NotFoundError(f"document {path.name} does not exist")
        return schemas.parse_document(path.read_text(encoding="utf-8"))

    # -- catalogue versions ---------------------------------------------------

    def _catalogue_path(self, version: int) -> Path:
        return self.root / _CATALOGUE_DIR / f"v{version:06d}.json"

    def latest_version(self) -> int | None:
        versions = [
            int(p.stem[1:]) for p in (self.root / _CATALOGUE_DIR).glob("v*.json")
        ]
        return max(versions) if versions else None

    def put_catalogue(self, catalogue: MetricsCatalogue) -> MetricsCatalogue:
        """Write the catalogue contents as the next version (append-only)."""
        with self._write_lock:
            next_version = (self.latest_version() or 0) + 1
            versioned = replace(catalogue, version=next_version)
            self._write_atomic(self._catalogue_path(next_version), schemas.catalogue_to_doc(versioned))
            return versioned

    def get_catalogue(self, version: int | None = None) -> MetricsCatalogue:
        if version is None:
            version = self.latest_version()
            if version is None:
                raise NotFoundError("no catalogue version exists yet")
        doc = self._read(self._catalogue_path(int(version)))
        return schemas.catalogue_from_doc(doc)

    # -- measurement batches --------------------------------------------------

    def _batch_path(self, batch_id: str) -> Path:
        return self.root / _BATCH_DIR / f"{batch_id}.json"

    def ingest(self, batch_doc: dict) -> dict:
        """Validate and durably store one measurement batch.

        Returns an acknowledgment with the content-derived batch id, a
        duplicate flag, and the validation report. Re-ingesting the same
        content is a no-op with the same id.
        """
        problems = schemas.validate_batch_doc(batch_doc)
        if problems:
            raise ValidationError(
                "measurement batch failed validation", field="batch", problems=problems
            )
        content = schemas.normalize_batch_doc(batch_doc)
        batch_id = schemas.content_hash(content)
        with self._write_lock:
            path = self._batch_path(batch_id)
            duplicate = path.exists()
            if not duplicate:
                self._write_atomic(path, content)
        return {
            "batch_id": batch_id,
            "project_id": content["project_id"],
            "duplicate": duplicate,
            "report": {"problems": []},
        }

    def list_batches(self) -> list[dict]:
        out = []
        for path in sorted((self.root / _BATCH_DIR).glob("*.json")):
            doc = self._read(path)
            out.append({"batch_id": path.stem, "project_id": doc.get("project_id", "")})
        return out

    def _batches_for(self, project_ids) -> list[tuple[str, dict]]:
        wanted = set(project_ids)
        if not wanted:
            raise ValidationError("project selection must be non-empty", field="project_ids")
        found: list[tuple[str, dict]] = []
        seen_projects = set()
        for path in sorted((self.root / _BATCH_DIR).glob("*.json")):
            doc = self._read(path)
            if doc.get("project_id") in wanted:
                found.append((path.stem, doc))
                seen_projects.add(doc["project_id"])
        missing = wanted - seen_projects
        if missing:
            raise NotFoundError(f"no measurement batches for projects: {sorted(missing)}")
        # Pool in (project, batch id) order so the fold is ingestion-order independent.
        found.sort(key=lambda item: (item[1]["project_id"], item[0]))
        return found

    # -- recomputation ----------------------------------------------------------

    def recompute_catalogue(self, project_ids, base_version: int | None = None) -> MetricsCatalogue:
        """Derive a new catalogue version from the selected projects' batches.

        Pure function of the selected batch contents and the base version:
        the same selection always yields identical catalogue contents.
        """
        try:
            base = self.get_catalogue(base_version)
        except NotFoundError:
            raise IncompleteCatalogueError(
                "cannot recompute without a base catalogue version; bootstrap one with put_catalogue",
                gaps=["catalogue: no prior version"],
            ) from None
        batches = self._batches_for(project_ids)
        pooled = _pool(batches)
        projects_note = "projects:" + ",".join(sorted({doc["project_id"] for _, doc in batches}))
        carried_note = f"carried-over:v{base.version}"

        provenance = dict(base.provenance)
        new_types = []
        share_total = math.fsum(pooled.type_counts.get(t.id, 0.0) for t in base.defect_types)
        for dt in base.defect_types:
            failures = pooled.field_failures.get(dt.id, 0)
            escaped = pooled.escaped.get(dt.id, 0.0)

            if share_total > 0.0:
                share = pooled.type_counts.get(dt.id, 0.0) / share_total
                provenance[f"defect_types.{dt.id}.share"] = projects_note
            else:
                share = dt.share
                provenance[f"defect_types.{dt.id}.share"] = carried_note

            if failures > 0:
                v_field = pooled.field_removal[dt.id] / failures
                f_field = pooled.field_effect[dt.id] / failures
                provenance[f"defect_types.{dt.id}.field_removal_cost"] = projects_note
                provenance[f"defect_types.{dt.id}.field_effect_cost"] = projects_note
            else:
                v_field = dt.field_removal_cost
                f_field = dt.field_effect_cost
                provenance[f"defect_types.{dt.id}.field_removal_cost"] = carried_note
                provenance[f"defect_types.{dt.id}.field_effect_cost"] = carried_note

            if failures + escaped > 0:
                pi = failures / (failures + escaped)
                provenance[f"defect_types.{dt.id}.failure_probability"] = projects_note
            else:
                pi = dt.failure_probability
                provenance[f"defect_types.{dt.id}.failure_probability"] = carried_note

            new_types.append(
                replace(
                    dt,
                    share=share,
                    failure_probability=pi,
                    field_removal_cost=v_field,
                    field_effect_cost=f_field,
                )
            )

        # Renormalize shares exactly so the catalogue invariant holds despite
        # floating division noise.
        total_share = math.fsum(t.share for t in new_types)
        if total_share > 0.0 and abs(total_share - 1.0) > 1e-15:
            new_types = [replace(t, share=t.share / total_share) for t in new_types]

        new_techniques = []
        for tech in base.techniques:
            removal = dict(tech.removal_costs)
            for dt in base.defect_types:
                count = pooled.det_count.get((tech.id, dt.id), 0)
                if count > 0:
                    removal[dt.id] = pooled.det_cost[(tech.id, dt.id)] / count
                    provenance[f"techniques.{tech.id}.removal_costs.{dt.id}"] = projects_note
                else:
                    provenance[f"techniques.{tech.id}.removal_costs.{dt.id}"] = carried_note
            new_techniques.append(replace(tech, removal_costs=removal))

        catalogue = MetricsCatalogue(
            catalogue_id=base.catalogue_id,
            version=base.version,  # reassigned by put_catalogue
            currency=base.currency,
            effort_unit=base.effort_unit,
            defect_types=tuple(new_types),
            techniques=tuple(new_techniques),
            provenance=provenance,
        )
        return self.put_catalogue(catalogue)

    # -- profile estimation -------------------------------------------------

    def estimate_profile(
        self,
        fault_count: float,
        project_ids=None,
        version: int | None = None,
    ) -> FaultProfile:
        """Profile with an externally supplied fault count and a historical type distribution.

        With ``project_ids`` the distribution is pooled from those
        projects' raw batches; otherwise the referenced (default latest)
        catalogue version supplies it.
        """
        catalogue = self.get_catalogue(version)
        ref = f"{catalogue.catalogue_id}@v{catalogue.version}"
        if project_ids is None:
            return FaultProfile(estimated_fault_count=float(fault_count), catalogue_ref=ref)
        pooled = _pool(self._batches_for(project_ids))
        total = math.fsum(pooled.type_counts.get(t.id, 0.0) for t in catalogue.defect_types)
        if total <= 0.0:
            raise ValidationError(
                "selected projects carry no fault observations; no distribution to estimate",
                field="project_ids",
            )
        shares = {t.id: pooled.type_counts.get(t.id, 0.0) / total for t in catalogue.defect_types}
        share_sum = math.fsum(shares.values())
        shares = {k: v / share_sum for k, v in shares.items()}
        return FaultProfile(
            estimated_fault_count=float(fault_count), catalogue_ref=ref, share_overrides=shares
        )

    # -- difficulty calibration (experimental) --------------------------------

    def calibrate_difficulty(self, project_ids, base_version: int | None = None) -> dict:
        """Fit exponential difficulty laws from observed detection flows.

        Experimental: per batch, a technique's observed difficulty for a
        type is 1 - detected / entering, where entering is the batch's
        total fault count of that type minus detections by earlier
        techniques (the batch's ``technique_order``, defaulting to the
        catalogue order). Observations at known efforts are combined by a
        least-squares fit of log difficulty against effort through the
        origin (reference effort 1).
        """
        base = self.get_catalogue(base_version)
        batches = self._batches_for(project_ids)
        observations: dict[tuple[str, str], list[tuple[float, float]]] = {}
        for _, doc in batches:
            order = doc.get("technique_order") or [t.id for t in base.techniques]
            detections = doc.get("detections", {})
            usage = doc.get("techniques", {})
            field_data = doc.get("field", {})
            for dt in base.defect_types:
                total = 0.0
                for tech_id in detections:
                    total += detections[tech_id].get(dt.id, {}).get("count", 0)
                fd = field_data.get(dt.id, {})
                total += fd.get("failure_count", 0) + fd.get("escaped_without_failure", 0.0)
                entering = total
                for tech_id in order:
                    found = detections.get(tech_id, {}).get(dt.id, {}).get("count", 0)
                    effort = usage.get(tech_id, {}).get("effort", 0.0)
                    if entering > 0 and effort > 0 and found <= entering:
                        theta_hat = 1.0 - found / entering
                        if 0.0 < theta_hat <= 1.0:
                            observations.setdefault((tech_id, dt.id), []).append((effort, theta_hat))
                    entering -= found
        fitted: dict[str, dict[str, DifficultyModel]] = {}
        for (tech_id, type_id), points in sorted(observations.items()):
            num = math.fsum(t * math.log(theta) for t, theta in points)
            den = math.fsum(t * t for t, _ in points)
            if den <= 0.0:
                continue
            theta0 = math.exp(num / den)
            fitted.setdefault(tech_id, {})[type_id] = DifficultyModel.exponential(
                min(1.0, max(0.0, theta0)), 1.0
            )
        return fitted

    # -- scenarios (service persistence) ---------------------------------------

    def _scenario_path(self, scenario_id: str) -> Path:
        if not scenario_id or "/" in scenario_id or "." in scenario_id:
            raise ValidationError(f"invalid scenario id {scenario_id!r}", field="scenario_id")
        return self.root / _SCENARIO_DIR / f"{scenario_id}.json"

    def put_scenario(self, doc: dict):
        with self._write_lock:
            self._write_atomic(self._scenario_path(doc["scenario_id"]), doc, overwrite=True)

    def get_scenario(self, scenario_id: str) -> dict:
        path = self._scenario_path(scenario_id)
        if not path.exists():
            raise NotFoundError(f"scenario {scenario_id!r} does not exist")
        return self._read(path)

    def list_scenarios(self) -> list[dict]:
        return [self._read(p) for p in sorted((self.root / _SCENARIO_DIR).glob("*.json"))]

    def delete_scenario(self, scenario_id: str):
        path = self._scenario_path(scenario_id)
        if not path.exists():
            raise NotFoundError(f"scenario {scenario_id!r} does not exist")
        path.unlink()


class _Pooled:
    def __init__(self):
        self.det_count: dict[tuple[str, str], int] = {}
        self.det_cost: dict[tuple[str, str], float] = {}
        self.field_failures: dict[str, int] = {}
        self.field_removal: dict[str, float] = {}
        self.field_effect: dict[str, float] = {}
        self.escaped: dict[str, float] = {}
        self.type_counts: dict[str, float] = {}


def _pool(batches: list[tuple[str, dict]]) -> _Pooled:
    """Sum raw observations over batches (order fixed by the caller)."""
    pooled = _Pooled()
    for _, doc in batches:
        for tech_id, per_type in doc.get("detections", {}).items():
            for type_id, rec in per_type.items():
                key = (tech_id, type_id)
                pooled.det_count[key] = pooled.det_count.get(key, 0) + rec["count"]
                pooled.det_cost[key] = pooled.det_cost.get(key, 0.0) + rec["total_removal_cost"]
                pooled.type_counts[type_id] = pooled.type_counts.get(type_id, 0.0) + rec["count"]
        for type_id, rec in doc.get("field", {}).items():
            pooled.field_failures[type_id] = pooled.field_failures.get(type_id, 0) + rec["failure_count"]
            pooled.field_removal[type_id] = pooled.field_removal.get(type_id, 0.0) + rec["total_removal_cost"]
            pooled.field_effect[type_id] = pooled.field_effect.get(type_id, 0.0) + rec["total_effect_cost"]
            pooled.escaped[type_id] = pooled.escaped.get(type_id, 0.0) + rec["escaped_without_failure"]
            pooled.type_counts[type_id] = (
                pooled.type_counts.get(type_id, 0.0) + rec["failure_count"] + rec["escaped_without_failure"]
            )
    return pooled
