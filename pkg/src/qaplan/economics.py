"""Expected-value economics of an ordered QA plan.

Three money flows are priced, all as expectations over the fault
population:

* direct costs d: setup + execution (appraisal) plus removal of the
  faults a technique finds,
* future costs o: field costs of faults that escape every technique,
* revenues r: field costs saved because a technique found the fault
  first.

For a single technique applied with effort t the per-type terms are

    d = u + e(t) + sum_i  n_i * (1 - theta_i(t)) * v_i
    o =            sum_i  n_i * pi_i * theta_i(t) * w_i
    r =            sum_i  n_i * pi_i * (1 - theta_i(t)) * w_i

with n_i the expected fault count of type i (population size times
share), theta_i the technique's difficulty for the type, v_i its removal
cost, pi_i the type's failure probability and w_i its total field cost.

For an ordered set of techniques, a fault can only be found by step x if
every earlier step missed it, so detection terms carry the survival
product prod_{y<x} theta_y(i, t_y); combined future costs keep the full
product over all steps.

Because every expected field cost ends up either in o (fault escaped) or
in r (fault caught), o + r is a plan-independent constant: the total
field exposure. Optimization therefore only ever needs d and r.

Effort 0 means "technique not applied": it contributes no setup cost, no
execution cost, and the identity factor 1 to every survival product.
"""

from __future__ import annotations

from .errors import CatalogueMismatchError, ValidationError
from .model import (
    CostBreakdown,
    DefectType,
    FaultProfile,
    MetricsCatalogue,
    QAPlan,
    Technique,
    TechniqueContribution,
    TypeContribution,
)


def expected_type_counts(profile: FaultProfile, catalogue: MetricsCatalogue) -> dict[str, float]:
    """Expected fault count per defect type: population size times share."""
    count = profile.estimated_fault_count
    return {type_id: count * share for type_id, share in profile.shares(catalogue).items()}


def total_field_exposure(profile: FaultProfile, catalogue: MetricsCatalogue) -> float:
    """Expected field cost of the whole fault population with no QA at all.

    This is the conserved quantity split between future costs and
    revenues by any plan.
    """
    counts = expected_type_counts(profile, catalogue)
    total = 0.0
    for dt in catalogue.defect_types:
        total += counts[dt.id] * dt.failure_probability * dt.field_cost
    return total


def survival_before(
    plan: QAPlan, defect_type: DefectType, step_index: int, catalogue: MetricsCatalogue
) -> float:
    """Probability that a fault of the given type survives the first ``step_index`` steps.

    Empty prefix gives 1. Skipped steps (effort 0) contribute the factor 1.
    """
    if step_index < 0 or step_index > len(plan.steps):
        raise ValidationError(
            f"step_index must lie in [0, {len(plan.steps)}], got {step_index}", field="step_index"
        )
    if defect_type.id not in catalogue.type_ids:
        raise CatalogueMismatchError(f"unknown defect type {defect_type.id!r}")
    survival = 1.0
    for step in plan.steps[:step_index]:
        technique = catalogue.technique(step.technique_id)
        survival *= technique.difficulty_at(defect_type.id, step.effort)
    return survival


def direct_cost_single(
    technique: Technique, effort: float, profile: FaultProfile, catalogue: MetricsCatalogue
) -> float:
    """Direct costs of applying one technique alone: appraisal plus expected removals.

    Effort 0 returns 0: the technique is not applied, so not even the
    setup cost is incurred.
    """
    if effort < 0.0:
        raise ValidationError(f"effort must be >= 0, got {effort}", field="effort")
    if effort == 0.0:
        return 0.0
    counts = expected_type_counts(profile, catalogue)
    total = technique.setup_cost + technique.execution_cost(effort)
    for dt in catalogue.defect_types:
        theta = technique.difficulty_at(dt.id, effort)
        total += counts[dt.id] * (1.0 - theta) * technique.removal_cost(dt.id)
    return total


def future_cost_single(
    technique: Technique, effort: float, profile: FaultProfile, catalogue: MetricsCatalogue
) -> float:
    """Expected field costs of the faults the technique misses."""
    if effort < 0.0:
        raise ValidationError(f"effort must be >= 0, got {effort}", field="effort")
    counts = expected_type_counts(profile, catalogue)
    total = 0.0
    for dt in catalogue.defect_types:
        theta = technique.difficulty_at(dt.id, effort)
        total += counts[dt.id] * dt.failure_probability * theta * dt.field_cost
    return total


def revenue_single(
    technique: Technique, effort: float, profile: FaultProfile, catalogue: MetricsCatalogue
) -> float:
    """Expected field costs saved by the faults the technique finds."""
    if effort < 0.0:
        raise ValidationError(f"effort must be >= 0, got {effort}", field="effort")
    counts = expected_type_counts(profile, catalogue)
    total = 0.0
    for dt in catalogue.defect_types:
        theta = technique.difficulty_at(dt.id, effort)
        total += counts[dt.id] * dt.failure_probability * (1.0 - theta) * dt.field_cost
    return total


def _plan_techniques(plan: QAPlan, catalogue: MetricsCatalogue) -> list[Technique]:
    return [catalogue.technique(step.technique_id) for step in plan.steps]


def _accumulate(plan: QAPlan, profile: FaultProfile, catalogue: MetricsCatalogue):
    """One pass over (step, type) computing every contribution the model needs.

    Returns per-step appraisal costs, per-step-per-type removal costs and
    saved field costs, and per-type escaped field costs. All combined
    operations and the breakdown sum these in the same fixed order, so
    their totals agree bit-for-bit.
    """
    techniques = _plan_techniques(plan, catalogue)
    counts = expected_type_counts(profile, catalogue)
    appraisal: list[float] = []
    removal: list[dict[str, float]] = []
    saved: list[dict[str, float]] = []
    for technique, step in zip(techniques, plan.steps):
        if step.effort == 0.0:
            appraisal.append(0.0)
        else:
            appraisal.append(technique.setup_cost + technique.execution_cost(step.effort))
        removal.append({})
        saved.append({})
    escaped: dict[str, float] = {}
    for dt in catalogue.defect_types:
        n = counts[dt.id]
        survival = 1.0
        for x, (technique, step) in enumerate(zip(techniques, plan.steps)):
            theta = technique.difficulty_at(dt.id, step.effort)
            found = (1.0 - theta) * survival
            removal[x][dt.id] = n * found * technique.removal_cost(dt.id)
            saved[x][dt.id] = n * dt.failure_probability * found * dt.field_cost
            survival *= theta
        escaped[dt.id] = n * dt.failure_probability * survival * dt.field_cost
    return appraisal, removal, saved, escaped


def direct_cost_combined(plan: QAPlan, profile: FaultProfile, catalogue: MetricsCatalogue) -> float:
    """Direct costs of the whole ordered plan.

    A step only pays removal costs for faults every earlier step missed.
    Steps with effort 0 contribute nothing.
    """
    appraisal, removal, _, _ = _accumulate(plan, profile, catalogue)
    total = 0.0
    for x in range(len(plan.steps)):
        total += appraisal[x]
        for type_id in (dt.id for dt in catalogue.defect_types):
            total += removal[x][type_id]
    return total


def future_cost_combined(plan: QAPlan, profile: FaultProfile, catalogue: MetricsCatalogue) -> float:
    """Expected field costs of faults that escape every step of the plan."""
    _, _, _, escaped = _accumulate(plan, profile, catalogue)
    total = 0.0
    for dt in catalogue.defect_types:
        total += escaped[dt.id]
    return total


def revenue_combined(plan: QAPlan, profile: FaultProfile, catalogue: MetricsCatalogue) -> float:
    """Expected field costs saved across all steps, first-finder wins."""
    _, _, saved, _ = _accumulate(plan, profile, catalogue)
    total = 0.0
    for x in range(len(plan.steps)):
        for dt in catalogue.defect_types:
            total += saved[x][dt.id]
    return total


def evaluate_plan(plan: QAPlan, profile: FaultProfile, catalogue: MetricsCatalogue) -> CostBreakdown:
    """Full cost breakdown of a plan.

    The per-technique split carries each step's (direct, revenue)
    contribution; the per-type split carries (direct, future, revenue)
    per defect type, with appraisal costs apportioned across types by the
    profile's shares so both splits sum to the totals.
    """
    appraisal, removal, saved, escaped = _accumulate(plan, profile, catalogue)
    shares = profile.shares(catalogue)

    per_technique: dict[str, TechniqueContribution] = {}
    direct_total = 0.0
    revenue_total = 0.0
    for x, step in enumerate(plan.steps):
        step_direct = appraisal[x]
        step_revenue = 0.0
        for dt in catalogue.defect_types:
            step_direct += removal[x][dt.id]
            step_revenue += saved[x][dt.id]
        per_technique[step.technique_id] = TechniqueContribution(direct=step_direct, revenue=step_revenue)
        direct_total += step_direct
        revenue_total += step_revenue

    future_total = 0.0
    per_type: dict[str, TypeContribution] = {}
    for dt in catalogue.defect_types:
        t_direct = 0.0
        t_revenue = 0.0
        for x in range(len(plan.steps)):
            t_direct += appraisal[x] * shares[dt.id] + removal[x][dt.id]
            t_revenue += saved[x][dt.id]
        per_type[dt.id] = TypeContribution(direct=t_direct, future=escaped[dt.id], revenue=t_revenue)
        future_total += escaped[dt.id]

    return CostBreakdown(
        direct=direct_total,
        future=future_total,
        revenue=revenue_total,
        net=revenue_total - direct_total,
        per_technique=per_technique,
        per_type=per_type,
    )
