"""Domain types for the analytical QA cost model.

The model prices an ordered sequence of defect-detection technique
applications (reviews, unit tests, system tests, ...) against a product
with an estimated fault population. Faults are not tracked individually;
they are grouped into defect types, each carrying

* a ``share`` of the fault population,
* a ``failure_probability``: the chance that one field-escaped fault of
  this type ever causes a field failure over the product's life,
* average field costs (removal plus effect) of such a failure.

Each technique knows, per defect type, how hard the type is to find
(``DifficultyModel``: the probability of NOT detecting one fault of that
type at a given effort) and what removing a found fault costs. Appraisal
costs are a one-off setup cost plus an execution cost that grows with
effort.

All quantities are expected values over the fault population, so per-type
fault counts are real-valued; no integer rounding happens anywhere in the
analytic path (the Monte-Carlo simulator in :mod:`qaplan.simulate` is the
place where integer fault populations live).

Every type here is a frozen dataclass validated on construction. Mapping
fields are plain dicts by construction convenience but must be treated as
immutable; nothing in the package mutates them after validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import CatalogueMismatchError, ValidationError

_SHARE_SUM_TOL = 1e-9


def _require_finite(value: float, field_name: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ValidationError(f"{field_name} must be a number, got {value!r}", field=field_name)
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{field_name} must be finite, got {value!r}", field=field_name)
    return value


def _require_probability(value: float, field_name: str) -> float:
    value = _require_finite(value, field_name)
    if not 0.0 <= value <= 1.0:
        raise ValidationError(f"{field_name} must lie in [0, 1], got {value}", field=field_name)
    return value


def _require_nonnegative(value: float, field_name: str) -> float:
    value = _require_finite(value, field_name)
    if value < 0.0:
        raise ValidationError(f"{field_name} must be >= 0, got {value}", field=field_name)
    return value


@dataclass(frozen=True)
class DefectType:
    """One defect class: distribution share, failure probability, field costs."""

    id: str
    name: str
    share: float
    failure_probability: float
    field_removal_cost: float
    field_effect_cost: float

    def __post_init__(self):
        if not self.id:
            raise ValidationError("defect type id must be non-empty", field="id")
        _require_probability(self.share, f"defect_types[{self.id}].share")
        _require_probability(self.failure_probability, f"defect_types[{self.id}].failure_probability")
        _require_nonnegative(self.field_removal_cost, f"defect_types[{self.id}].field_removal_cost")
        _require_nonnegative(self.field_effect_cost, f"defect_types[{self.id}].field_effect_cost")

    @property
    def field_cost(self) -> float:
        """Total cost of one field failure of this type (removal + effect)."""
        return self.field_removal_cost + self.field_effect_cost


@dataclass(frozen=True)
class DifficultyModel:
    """Probability that a technique does NOT detect a fault of one type, as a function of effort.

    1 means blind, 0 means perfect. Two laws are supported:

    * ``exponential``: theta(t) = base_difficulty ** (t / reference_effort).
      ``base_difficulty`` is the difficulty attained at ``reference_effort``
      units of effort.
    * ``tabulated``: piecewise-linear interpolation through measured knots
      ``(effort, difficulty)``; constant beyond the last knot. Knots must
      start at (0, 1) and be non-increasing in difficulty.

    Both laws satisfy theta(0) = 1 exactly (zero effort detects nothing)
    and are non-increasing in effort.
    """

    law: str = "exponential"
    base_difficulty: float | None = None
    reference_effort: float | None = None
    knots: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.law == "exponential":
            if self.base_difficulty is None or self.reference_effort is None:
                raise ValidationError("exponential difficulty needs base_difficulty and reference_effort")
            _require_probability(self.base_difficulty, "difficulty.base_difficulty")
            ref = _require_finite(self.reference_effort, "difficulty.reference_effort")
            if ref <= 0.0:
                raise ValidationError(
                    f"difficulty.reference_effort must be > 0, got {ref}", field="difficulty.reference_effort"
                )
            if self.knots is not None:
                raise ValidationError("exponential difficulty takes no knots", field="difficulty.knots")
        elif self.law == "tabulated":
            if not self.knots:
                raise ValidationError("tabulated difficulty needs at least one knot", field="difficulty.knots")
            object.__setattr__(self, "knots", tuple((float(e), float(d)) for e, d in self.knots))
            efforts = [e for e, _ in self.knots]
            diffs = [d for _, d in self.knots]
            if efforts[0] != 0.0 or diffs[0] != 1.0:
                raise ValidationError("tabulated difficulty must start with the knot (0, 1)", field="difficulty.knots")
            for i, (e, d) in enumerate(self.knots):
                _require_nonnegative(e, f"difficulty.knots[{i}].effort")
                _require_probability(d, f"difficulty.knots[{i}].difficulty")
            if any(b <= a for a, b in zip(efforts, efforts[1:])):
                raise ValidationError("tabulated difficulty knots need strictly increasing efforts", field="difficulty.knots")
            if any(b > a for a, b in zip(diffs, diffs[1:])):
                raise ValidationError("tabulated difficulty must be non-increasing", field="difficulty.knots")
        else:
            raise ValidationError(f"unknown difficulty law {self.law!r}", field="difficulty.law")

    @classmethod
    def exponential(cls, base_difficulty: float, reference_effort: float = 1.0) -> "DifficultyModel":
        return cls(law="exponential", base_difficulty=base_difficulty, reference_effort=reference_effort)

    @classmethod
    def tabulated(cls, knots) -> "DifficultyModel":
        return cls(law="tabulated", knots=tuple(knots))

    def at(self, effort: float) -> float:
        """Evaluate the difficulty at the given effort."""
        if effort < 0.0:
            raise ValidationError(f"effort must be >= 0, got {effort}", field="effort")
        if self.law == "exponential":
            # x ** 0.0 == 1.0 for every finite x, so theta(0) == 1 holds exactly.
            return self.base_difficulty ** (effort / self.reference_effort)
        knots = self.knots
        if effort >= knots[-1][0]:
            return knots[-1][1]
        lo = 0
        hi = len(knots) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if knots[mid][0] <= effort:
                lo = mid
            else:
                hi = mid
        e0, d0 = knots[lo]
        e1, d1 = knots[hi]
        if effort == e0:
            return d0
        return d0 + (d1 - d0) * (effort - e0) / (e1 - e0)


@dataclass(frozen=True)
class Technique:
    """A defect-detection technique with its cost laws and per-type difficulty.

    ``execution_cost_rate`` gives the default linear execution-cost law
    e(t) = rate * t. Measured (tabulated) laws are supported through
    ``execution_cost_knots``: non-decreasing piecewise-linear points
    starting at (0, 0), extrapolated beyond the last knot with the slope
    of the final segment. Removal costs include re-testing/re-inspection.
    """

    id: str
    name: str
    setup_cost: float
    execution_cost_rate: float
    removal_costs: dict[str, float]
    difficulty: dict[str, DifficultyModel]
    order_index: int = 0
    execution_cost_knots: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if not self.id:
            raise ValidationError("technique id must be non-empty", field="id")
        _require_nonnegative(self.setup_cost, f"techniques[{self.id}].setup_cost")
        _require_nonnegative(self.execution_cost_rate, f"techniques[{self.id}].execution_cost_rate")
        for type_id, cost in self.removal_costs.items():
            _require_nonnegative(cost, f"techniques[{self.id}].removal_costs[{type_id}]")
        if self.execution_cost_knots is not None:
            object.__setattr__(
                self, "execution_cost_knots", tuple((float(e), float(c)) for e, c in self.execution_cost_knots)
            )
            knots = self.execution_cost_knots
            if not knots or knots[0] != (0.0, 0.0):
                raise ValidationError(
                    f"techniques[{self.id}].execution_cost_knots must start at (0, 0)",
                    field=f"techniques[{self.id}].execution_cost_knots",
                )
            efforts = [e for e, _ in knots]
            costs = [c for _, c in knots]
            if any(b <= a for a, b in zip(efforts, efforts[1:])) or any(b < a for a, b in zip(costs, costs[1:])):
                raise ValidationError(
                    f"techniques[{self.id}].execution_cost_knots must be strictly increasing in effort "
                    "and non-decreasing in cost",
                    field=f"techniques[{self.id}].execution_cost_knots",
                )

    def execution_cost(self, effort: float) -> float:
        """Execution cost e(t); e(0) = 0 under both laws."""
        if effort < 0.0:
            raise ValidationError(f"effort must be >= 0, got {effort}", field="effort")
        knots = self.execution_cost_knots
        if knots is None:
            return self.execution_cost_rate * effort
        if effort >= knots[-1][0]:
            if len(knots) == 1:
                return knots[-1][1]
            (e0, c0), (e1, c1) = knots[-2], knots[-1]
            slope = (c1 - c0) / (e1 - e0)
            return c1 + slope * (effort - knots[-1][0])
        for (e0, c0), (e1, c1) in zip(knots, knots[1:]):
            if effort <= e1:
                if effort == e0:
                    return c0
                return c0 + (c1 - c0) * (effort - e0) / (e1 - e0)
        return knots[-1][1]

    def difficulty_at(self, type_id: str, effort: float) -> float:
        model = self.difficulty.get(type_id)
        if model is None:
            raise CatalogueMismatchError(
                f"technique {self.id!r} has no difficulty model for defect type {type_id!r}"
            )
        return model.at(effort)

    def removal_cost(self, type_id: str) -> float:
        try:
            return self.removal_costs[type_id]
        except KeyError:
            raise CatalogueMismatchError(
                f"technique {self.id!r} has no removal cost for defect type {type_id!r}"
            ) from None


@dataclass(frozen=True)
class MetricsCatalogue:
    """Versioned collection of defect types and techniques plus unit labels.

    The currency and effort-unit labels are opaque; all inputs evaluated
    together must agree on them (no conversion is performed). Provenance
    maps dotted field paths to a source note such as ``"literature"``,
    ``"projects:a,b"`` or ``"carried-over:v2"``.
    """

    catalogue_id: str
    version: int
    currency: str
    effort_unit: str
    defect_types: tuple[DefectType, ...]
    techniques: tuple[Technique, ...]
    provenance: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "defect_types", tuple(self.defect_types))
        object.__setattr__(self, "techniques", tuple(self.techniques))
        if self.version < 1:
            raise ValidationError(f"catalogue version must be >= 1, got {self.version}", field="version")
        if not self.defect_types:
            raise ValidationError("catalogue needs at least one defect type", field="defect_types")
        type_ids = [t.id for t in self.defect_types]
        if len(set(type_ids)) != len(type_ids):
            raise ValidationError("duplicate defect type ids in catalogue", field="defect_types")
        tech_ids = [t.id for t in self.techniques]
        if len(set(tech_ids)) != len(tech_ids):
            raise ValidationError("duplicate technique ids in catalogue", field="techniques")
        share_sum = math.fsum(t.share for t in self.defect_types)
        if abs(share_sum - 1.0) > _SHARE_SUM_TOL:
            raise ValidationError(
                f"defect type shares must sum to 1 within {_SHARE_SUM_TOL}, got {share_sum!r}",
                field="defect_types",
            )
        problems = []
        for tech in self.techniques:
            for type_id in type_ids:
                if type_id not in tech.removal_costs:
                    problems.append(f"techniques[{tech.id}].removal_costs missing {type_id}")
                if type_id not in tech.difficulty:
                    problems.append(f"techniques[{tech.id}].difficulty missing {type_id}")
        if problems:
            raise ValidationError(
                "catalogue techniques do not cover every defect type", field="techniques", problems=problems
            )
        object.__setattr__(self, "_types_by_id", {t.id: t for t in self.defect_types})
        object.__setattr__(self, "_techniques_by_id", {t.id: t for t in self.techniques})

    def defect_type(self, type_id: str) -> DefectType:
        try:
            return self._types_by_id[type_id]
        except KeyError:
            raise CatalogueMismatchError(f"unknown defect type {type_id!r}") from None

    def technique(self, technique_id: str) -> Technique:
        try:
            return self._techniques_by_id[technique_id]
        except KeyError:
            raise CatalogueMismatchError(f"unknown technique {technique_id!r}") from None

    @property
    def type_ids(self) -> tuple[str, ...]:
        return tuple(t.id for t in self.defect_types)

    @property
    def technique_ids(self) -> tuple[str, ...]:
        return tuple(t.id for t in self.techniques)


@dataclass(frozen=True)
class FaultProfile:
    """Expected fault population of one product.

    ``share_overrides``, when given, replaces the catalogue's defect type
    distribution (for example with one estimated from a specific set of
    historical projects); it must cover the same type ids and sum to 1.
    """

    estimated_fault_count: float
    catalogue_ref: str = ""
    share_overrides: dict[str, float] | None = None

    def __post_init__(self):
        _require_nonnegative(self.estimated_fault_count, "estimated_fault_count")
        if self.share_overrides is not None:
            for type_id, share in self.share_overrides.items():
                _require_probability(share, f"share_overrides[{type_id}]")
            share_sum = math.fsum(self.share_overrides.values())
            if abs(share_sum - 1.0) > _SHARE_SUM_TOL:
                raise ValidationError(
                    f"share_overrides must sum to 1 within {_SHARE_SUM_TOL}, got {share_sum!r}",
                    field="share_overrides",
                )

    def shares(self, catalogue: MetricsCatalogue) -> dict[str, float]:
        """Effective defect type distribution for this profile under the catalogue."""
        if self.share_overrides is None:
            return {t.id: t.share for t in catalogue.defect_types}
        missing = [t.id for t in catalogue.defect_types if t.id not in self.share_overrides]
        extra = [type_id for type_id in self.share_overrides if type_id not in catalogue.type_ids]
        if missing or extra:
            raise CatalogueMismatchError(
                f"share_overrides do not match catalogue types (missing {missing}, extra {extra})"
            )
        return {t.id: self.share_overrides[t.id] for t in catalogue.defect_types}


@dataclass(frozen=True)
class PlanStep:
    technique_id: str
    effort: float

    def __post_init__(self):
        _require_nonnegative(self.effort, f"steps[{self.technique_id}].effort")


@dataclass(frozen=True)
class QAPlan:
    """An ordered list of (technique, effort) applications.

    The list order is the application order. Effort 0 means the technique
    is skipped entirely: no setup cost, no execution cost, and it leaves
    every fault undetected for the techniques after it.
    """

    steps: tuple[PlanStep, ...]

    def __post_init__(self):
        object.__setattr__(
            self,
            "steps",
            tuple(s if isinstance(s, PlanStep) else PlanStep(*s) for s in self.steps),
        )
        ids = [s.technique_id for s in self.steps]
        if len(set(ids)) != len(ids):
            raise ValidationError("technique ids must be unique within a plan", field="steps")

    @classmethod
    def of(cls, *steps) -> "QAPlan":
        return cls(steps=tuple(PlanStep(tid, effort) for tid, effort in steps))

    def __len__(self) -> int:
        return len(self.steps)

    def efforts(self) -> tuple[float, ...]:
        return tuple(s.effort for s in self.steps)


@dataclass(frozen=True)
class TechniqueContribution:
    direct: float
    revenue: float


@dataclass(frozen=True)
class TypeContribution:
    direct: float
    future: float
    revenue: float


@dataclass(frozen=True)
class CostBreakdown:
    """Direct/future/revenue/net totals with per-technique and per-type splits.

    ``net = revenue - direct`` holds exactly. Appraisal costs (setup +
    execution) have no natural defect type, so the per-type direct split
    apportions them by the profile's type shares; each split therefore
    sums back to its total.
    """

    direct: float
    future: float
    revenue: float
    net: float
    per_technique: dict[str, TechniqueContribution]
    per_type: dict[str, TypeContribution]

    def __post_init__(self):
        # Non-finite values are diagnosed by callers (NumericInputError); the
        # exact identity only makes sense for finite arithmetic.
        if all(math.isfinite(v) for v in (self.direct, self.revenue, self.net)):
            if self.net != self.revenue - self.direct:
                raise ValidationError("net must equal revenue - direct exactly", field="net")
