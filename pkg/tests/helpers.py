"""Shared instance builders for the test suite.

The random generators produce valid model instances: shares normalized
to sum to 1, probabilities in [0, 1], costs non-negative. Seeds are
pinned by the callers so every test run sees the same instances.
"""

import numpy as np

from qaplan import (
    DefectType,
    DifficultyModel,
    FaultProfile,
    MetricsCatalogue,
    QAPlan,
    Technique,
)


def single_type_catalogue(
    *,
    pi=0.1,
    v_field=50.0,
    f_field=150.0,
    setup=100.0,
    rate=2.0,
    removal=3.0,
    theta0=0.5,
    t_ref=1.0,
    tech_id="t1",
) -> MetricsCatalogue:
    dt = DefectType(
        id="d1",
        name="only type",
        share=1.0,
        failure_probability=pi,
        field_removal_cost=v_field,
        field_effect_cost=f_field,
    )
    tech = Technique(
        id=tech_id,
        name=tech_id,
        setup_cost=setup,
        execution_cost_rate=rate,
        removal_costs={"d1": removal},
        difficulty={"d1": DifficultyModel.exponential(theta0, t_ref)},
    )
    return MetricsCatalogue(
        catalogue_id="test",
        version=1,
        currency="EUR",
        effort_unit="h",
        defect_types=(dt,),
        techniques=(tech,),
    )


def two_technique_catalogue(**overrides) -> MetricsCatalogue:
    """One defect type, two identical techniques (u=0, rate=1, theta0=0.5)."""
    params = dict(pi=0.2, v_field=60.0, f_field=40.0, removal=2.0, theta0=0.5)
    params.update(overrides)
    dt = DefectType(
        id="d1",
        name="only type",
        share=1.0,
        failure_probability=params["pi"],
        field_removal_cost=params["v_field"],
        field_effect_cost=params["f_field"],
    )
    techs = tuple(
        Technique(
            id=tid,
            name=tid,
            setup_cost=0.0,
            execution_cost_rate=1.0,
            removal_costs={"d1": params["removal"]},
            difficulty={"d1": DifficultyModel.exponential(params["theta0"], 1.0)},
        )
        for tid in ("a", "b")
    )
    return MetricsCatalogue(
        catalogue_id="test",
        version=1,
        currency="EUR",
        effort_unit="h",
        defect_types=(dt,),
        techniques=techs,
    )


def random_catalogue(rng: np.random.Generator, n_types: int, n_techniques: int, tabulated_fraction=0.0):
    shares = rng.dirichlet(np.ones(n_types))
    types = tuple(
        DefectType(
            id=f"d{i}",
            name=f"type {i}",
            share=float(shares[i]),
            failure_probability=float(rng.uniform(0.0, 1.0)),
            field_removal_cost=float(rng.uniform(0.0, 100.0)),
            field_effect_cost=float(rng.uniform(0.0, 200.0)),
        )
        for i in range(n_types)
    )
    techniques = []
    for j in range(n_techniques):
        difficulty = {}
        for dt in types:
            if rng.random() < tabulated_fraction:
                efforts = np.sort(rng.uniform(0.5, 10.0, size=3))
                diffs = np.sort(rng.uniform(0.0, 1.0, size=3))[::-1]
                knots = [(0.0, 1.0)] + list(zip(efforts.tolist(), diffs.tolist()))
                difficulty[dt.id] = DifficultyModel.tabulated(knots)
            else:
                difficulty[dt.id] = DifficultyModel.exponential(
                    float(rng.uniform(0.05, 0.95)), float(rng.uniform(0.5, 5.0))
                )
        techniques.append(
            Technique(
                id=f"t{j}",
                name=f"technique {j}",
                setup_cost=float(rng.uniform(0.0, 50.0)),
                execution_cost_rate=float(rng.uniform(0.1, 10.0)),
                removal_costs={dt.id: float(rng.uniform(0.0, 20.0)) for dt in types},
                difficulty=difficulty,
                order_index=j,
            )
        )
    return MetricsCatalogue(
        catalogue_id="random",
        version=1,
        currency="EUR",
        effort_unit="h",
        defect_types=types,
        techniques=tuple(techniques),
    )


def random_profile(rng: np.random.Generator, catalogue: MetricsCatalogue) -> FaultProfile:
    return FaultProfile(
        estimated_fault_count=float(rng.uniform(0.0, 500.0)),
        catalogue_ref=f"{catalogue.catalogue_id}@v{catalogue.version}",
    )


def random_plan(rng: np.random.Generator, catalogue: MetricsCatalogue, max_effort=10.0, zero_prob=0.15):
    steps = []
    for tech in catalogue.techniques:
        effort = 0.0 if rng.random() < zero_prob else float(rng.uniform(0.0, max_effort))
        steps.append((tech.id, effort))
    return QAPlan.of(*steps)


def scale_currency(catalogue: MetricsCatalogue, lam: float) -> MetricsCatalogue:
    """Scale every currency-denominated input by lam (efforts untouched)."""
    from dataclasses import replace

    types = tuple(
        replace(dt, field_removal_cost=dt.field_removal_cost * lam, field_effect_cost=dt.field_effect_cost * lam)
        for dt in catalogue.defect_types
    )
    techs = tuple(
        replace(
            t,
            setup_cost=t.setup_cost * lam,
            execution_cost_rate=t.execution_cost_rate * lam,
            removal_costs={k: v * lam for k, v in t.removal_costs.items()},
        )
        for t in catalogue.techniques
    )
    return replace(catalogue, defect_types=types, techniques=techs)
