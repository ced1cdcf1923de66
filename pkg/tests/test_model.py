"""Domain type validation and difficulty/cost law behaviour."""

import math

import pytest

from qaplan import (
    CatalogueMismatchError,
    DefectType,
    DifficultyModel,
    FaultProfile,
    MetricsCatalogue,
    QAPlan,
    Technique,
    ValidationError,
)
from helpers import single_type_catalogue


def test_defect_type_rejects_bad_ranges():
    with pytest.raises(ValidationError):
        DefectType(id="d", name="d", share=1.2, failure_probability=0.1, field_removal_cost=1, field_effect_cost=1)
    with pytest.raises(ValidationError):
        DefectType(id="d", name="d", share=0.5, failure_probability=-0.1, field_removal_cost=1, field_effect_cost=1)
    with pytest.raises(ValidationError):
        DefectType(id="d", name="d", share=0.5, failure_probability=0.1, field_removal_cost=-1, field_effect_cost=1)
    with pytest.raises(ValidationError):
        DefectType(id="d", name="d", share=float("nan"), failure_probability=0.1, field_removal_cost=1, field_effect_cost=1)


def test_exponential_difficulty_is_one_at_zero_effort():
    for theta0 in (0.0, 0.3, 0.5, 1.0):
        model = DifficultyModel.exponential(theta0, reference_effort=2.0)
        assert model.at(0.0) == 1.0


def test_exponential_difficulty_values():
    model = DifficultyModel.exponential(0.5, reference_effort=1.0)
    assert model.at(1.0) == 0.5
    assert model.at(2.0) == 0.25
    assert model.at(3.0) == pytest.approx(0.125, rel=1e-15)
    # reference effort rescales the exponent
    model = DifficultyModel.exponential(0.25, reference_effort=2.0)
    assert model.at(2.0) == 0.25
    assert model.at(1.0) == pytest.approx(0.5, rel=1e-15)


def test_exponential_difficulty_edge_bases():
    perfect = DifficultyModel.exponential(0.0)
    assert perfect.at(0.0) == 1.0
    assert perfect.at(0.5) == 0.0
    blind = DifficultyModel.exponential(1.0)
    assert blind.at(100.0) == 1.0


def test_difficulty_non_increasing():
    model = DifficultyModel.exponential(0.7, 1.5)
    values = [model.at(t / 4) for t in range(0, 60)]
    assert all(b <= a for a, b in zip(values, values[1:]))
    assert all(0.0 <= v <= 1.0 for v in values)


def test_tabulated_difficulty_interpolates_and_saturates():
    model = DifficultyModel.tabulated([(0.0, 1.0), (2.0, 0.6), (4.0, 0.1)])
    assert model.at(0.0) == 1.0
    assert model.at(1.0) == pytest.approx(0.8)
    assert model.at(2.0) == 0.6
    assert model.at(3.0) == pytest.approx(0.35)
    assert model.at(4.0) == 0.1
    assert model.at(50.0) == 0.1  # constant beyond the last knot


def test_tabulated_difficulty_validation():
    with pytest.raises(ValidationError):
        DifficultyModel.tabulated([(1.0, 0.5)])  # must start at effort 0
    with pytest.raises(ValidationError):
        DifficultyModel.tabulated([(0.0, 0.9)])  # first difficulty must be 1
    with pytest.raises(ValidationError):
        DifficultyModel.tabulated([(0.0, 1.0), (1.0, 0.5), (1.0, 0.4)])  # strictly increasing efforts
    with pytest.raises(ValidationError):
        DifficultyModel.tabulated([(0.0, 1.0), (1.0, 0.5), (2.0, 0.7)])  # non-increasing difficulty


def test_execution_cost_laws():
    cat = single_type_catalogue(rate=2.5)
    tech = cat.technique("t1")
    assert tech.execution_cost(0.0) == 0.0
    assert tech.execution_cost(4.0) == 10.0

    tabulated = Technique(
        id="tab",
        name="tab",
        setup_cost=0.0,
        execution_cost_rate=0.0,
        removal_costs={"d1": 1.0},
        difficulty={"d1": DifficultyModel.exponential(0.5)},
        execution_cost_knots=((0.0, 0.0), (2.0, 10.0), (4.0, 14.0)),
    )
    assert tabulated.execution_cost(0.0) == 0.0
    assert tabulated.execution_cost(1.0) == pytest.approx(5.0)
    assert tabulated.execution_cost(3.0) == pytest.approx(12.0)
    # beyond the last knot: final segment slope (2 per unit)
    assert tabulated.execution_cost(6.0) == pytest.approx(18.0)
    with pytest.raises(ValidationError):
        Technique(
            id="bad",
            name="bad",
            setup_cost=0.0,
            execution_cost_rate=0.0,
            removal_costs={"d1": 1.0},
            difficulty={"d1": DifficultyModel.exponential(0.5)},
            execution_cost_knots=((1.0, 0.0), (2.0, 1.0)),
        )


def test_catalogue_share_sum_enforced():
    types = tuple(
        DefectType(id=f"d{i}", name="", share=0.4, failure_probability=0.1, field_removal_cost=1, field_effect_cost=1)
        for i in range(2)
    )
    with pytest.raises(ValidationError):
        MetricsCatalogue(
            catalogue_id="c", version=1, currency="EUR", effort_unit="h", defect_types=types, techniques=()
        )


def test_catalogue_requires_full_coverage():
    types = (
        DefectType(id="d1", name="", share=0.5, failure_probability=0.1, field_removal_cost=1, field_effect_cost=1),
        DefectType(id="d2", name="", share=0.5, failure_probability=0.1, field_removal_cost=1, field_effect_cost=1),
    )
    tech = Technique(
        id="t",
        name="",
        setup_cost=0.0,
        execution_cost_rate=1.0,
        removal_costs={"d1": 1.0},
        difficulty={"d1": DifficultyModel.exponential(0.5)},
    )
    with pytest.raises(ValidationError) as exc:
        MetricsCatalogue(
            catalogue_id="c", version=1, currency="EUR", effort_unit="h", defect_types=types, techniques=(tech,)
        )
    assert any("d2" in p for p in exc.value.problems)


def test_catalogue_lookup_errors():
    cat = single_type_catalogue()
    with pytest.raises(CatalogueMismatchError):
        cat.defect_type("nope")
    with pytest.raises(CatalogueMismatchError):
        cat.technique("nope")


def test_plan_rejects_duplicate_and_negative():
    with pytest.raises(ValidationError):
        QAPlan.of(("a", 1.0), ("a", 2.0))
    with pytest.raises(ValidationError):
        QAPlan.of(("a", -1.0))


def test_profile_counts_sum_to_population():
    cat = single_type_catalogue()
    profile = FaultProfile(estimated_fault_count=42.0)
    shares = profile.shares(cat)
    assert math.fsum(shares.values()) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValidationError):
        FaultProfile(estimated_fault_count=-1.0)


def test_profile_share_overrides_validated():
    cat = single_type_catalogue()
    good = FaultProfile(estimated_fault_count=10.0, share_overrides={"d1": 1.0})
    assert good.shares(cat) == {"d1": 1.0}
    with pytest.raises(ValidationError):
        FaultProfile(estimated_fault_count=10.0, share_overrides={"d1": 0.5})
    mismatched = FaultProfile(estimated_fault_count=10.0, share_overrides={"other": 1.0})
    with pytest.raises(CatalogueMismatchError):
        mismatched.shares(cat)
