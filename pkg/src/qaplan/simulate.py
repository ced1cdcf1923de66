"""Monte-Carlo defect-flow simulator.

Serves as the independent verification oracle for the analytic
expectations in :mod:`qaplan.economics`: it draws concrete fault
populations, pushes every fault through the plan's steps in order, and
books realized costs per trial. Sample means converge to the analytic
direct/future/revenue values; standard errors quantify how far along
that convergence is.

Per trial:

1. Draw the fault population size (``fixed``: round of the profile's
   expected count, same every trial; ``poisson``: Poisson with that
   mean).
2. Assign each fault a defect type by inverse CDF over the type shares.
3. Draw, per fault, one failure event with the type's failure
   probability. The same draw decides the counterfactual: if the fault
   is detected, a positive draw books its field cost as revenue (cost
   saved); if it escapes everything, a positive draw books it as future
   cost. Exactly one of the two buckets can receive each fault's field
   cost, which makes the per-trial accounting identity exact and the
   revenue estimator unbiased.
4. Pass the fault through the steps in plan order; step x detects it
   with probability 1 - theta_x(type, effort_x) if no earlier step did.
   Detection books the technique's removal cost as direct cost.
5. Appraisal costs (setup + execution of every applied step) are added
   to each trial's direct cost deterministically.

Randomness contract (pinned; changing it is a breaking change):

* Generator: numpy's counter-based Philox (4x64), keyed with the config
  seed.
* Trials are processed in fixed chunks of ``CHUNK_TRIALS`` = 4096.
  Chunk k draws from ``Philox(key=seed, counter=k * 2**128)``, i.e. every
  chunk owns a disjoint counter region, so chunked (or parallel,
  chunk-per-worker) execution reproduces the single-threaded stream
  bit-for-bit.
* Within a chunk the draw layout is: in ``poisson`` mode first one
  population-size draw per trial; then one uniform array of shape
  (2 + number of plan steps, faults in chunk): row 0 assigns types,
  row 1 is the failure draw, row 2+s is the detection draw of plan step
  s. Skipped steps (effort 0) keep their row; their detection
  probability is 0.
* Per-component sums are accumulated with numpy pairwise summation per
  chunk and reduced across chunks in chunk-index order, so a parallel
  run merging partial sums in that order matches the serial result
  bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .model import FaultProfile, MetricsCatalogue, QAPlan

CHUNK_TRIALS = 4096

_MODES = ("fixed", "poisson")


@dataclass(frozen=True)
class SimulationConfig:
    trials: int
    seed: int
    fault_count_mode: str = "fixed"

    def __post_init__(self):
        if not isinstance(self.trials, int) or isinstance(self.trials, bool) or self.trials < 1:
            raise ValidationError(f"trials must be a positive integer, got {self.trials!r}", field="trials")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ValidationError(f"seed must be a non-negative integer, got {self.seed!r}", field="seed")
        if self.fault_count_mode not in _MODES:
            raise ValidationError(
                f"fault_count_mode must be one of {_MODES}, got {self.fault_count_mode!r}",
                field="fault_count_mode",
            )


@dataclass(frozen=True)
class ComponentStats:
    mean: float
    std_error: float


@dataclass(frozen=True)
class SimulationReport:
    """Sample means and standard errors over trials, plus detection bookkeeping.

    ``conservation_violations`` counts faults for which the realized
    field-cost draw did not land in exactly one of {future, revenue,
    neither}; it is 0 for a correct simulator and asserted so in tests.
    ``max_conservation_residual`` is the largest per-trial floating-point
    difference between future + revenue and an independently summed
    realized exposure (grouping noise only, at machine-epsilon scale).
    """

    trials: int
    fault_count_mode: str
    direct: ComponentStats
    future: ComponentStats
    revenue: ComponentStats
    net: ComponentStats
    detections: dict[str, dict[str, int]] = field(default_factory=dict)
    conservation_violations: int = 0
    max_conservation_residual: float = 0.0


def _component(total: float, total_sq: float, n: int) -> ComponentStats:
    mean = total / n
    if n < 2:
        return ComponentStats(mean=mean, std_error=0.0)
    variance = max(0.0, (total_sq - n * mean * mean) / (n - 1))
    return ComponentStats(mean=mean, std_error=math.sqrt(variance / n))


def simulate(
    plan: QAPlan,
    profile: FaultProfile,
    catalogue: MetricsCatalogue,
    config: SimulationConfig,
) -> SimulationReport:
    """Run the simulator; deterministic given the config seed."""
    techniques = [catalogue.technique(step.technique_id) for step in plan.steps]
    type_ids = list(catalogue.type_ids)
    n_types = len(type_ids)
    n_steps = len(plan.steps)

    shares = profile.shares(catalogue)
    share_arr = np.array([shares[t] for t in type_ids], dtype=np.float64)
    cum_shares = np.cumsum(share_arr)
    pi = np.array([dt.failure_probability for dt in catalogue.defect_types], dtype=np.float64)
    field_cost = np.array([dt.field_cost for dt in catalogue.defect_types], dtype=np.float64)

    p_detect = np.zeros((n_steps, n_types), dtype=np.float64)
    removal = np.zeros((n_steps, n_types), dtype=np.float64)
    appraisal = 0.0
    for s, (tech, step) in enumerate(zip(techniques, plan.steps)):
        for i, type_id in enumerate(type_ids):
            p_detect[s, i] = 1.0 - tech.difficulty_at(type_id, step.effort)
            removal[s, i] = tech.removal_cost(type_id)
        if step.effort > 0.0:
            appraisal += tech.setup_cost + tech.execution_cost(step.effort)

    mean_count = profile.estimated_fault_count
    fixed_count = round(mean_count) if config.fault_count_mode == "fixed" else None

    n = config.trials
    sums = np.zeros(4)  # direct, future, revenue, net
    sums_sq = np.zeros(4)
    detect_counts = np.zeros((n_steps, n_types), dtype=np.int64)
    violations = 0
    max_residual = 0.0

    n_chunks = (n + CHUNK_TRIALS - 1) // CHUNK_TRIALS
    for chunk in range(n_chunks):
        start = chunk * CHUNK_TRIALS
        c = min(CHUNK_TRIALS, n - start)
        gen = np.random.Generator(np.random.Philox(key=config.seed, counter=chunk << 128))

        if config.fault_count_mode == "poisson":
            counts = gen.poisson(mean_count, size=c)
        else:
            counts = np.full(c, fixed_count, dtype=np.int64)
        total_faults = int(counts.sum())

        if total_faults == 0:
            direct = np.full(c, appraisal)
            zero = np.zeros(c)
            _accumulate_chunk(sums, sums_sq, direct, zero, zero)
            continue

        trial_of_fault = np.repeat(np.arange(c), counts)
        u = gen.random((2 + n_steps, total_faults))
        type_idx = np.minimum(np.searchsorted(cum_shares, u[0], side="right"), n_types - 1)
        fail_event = u[1] < pi[type_idx]

        alive = np.ones(total_faults, dtype=bool)
        detected_any = np.zeros(total_faults, dtype=bool)
        removal_cost = np.zeros(c)
        for s in range(n_steps):
            hit = alive & (u[2 + s] < p_detect[s][type_idx])
            if hit.any():
                hit_types = type_idx[hit]
                detect_counts[s] += np.bincount(hit_types, minlength=n_types)
                removal_cost += np.bincount(
                    trial_of_fault[hit], weights=removal[s][hit_types], minlength=c
                )
                detected_any |= hit
                alive &= ~hit

        # Accounting identity: detected and escaped must partition the population.
        violations += int(np.count_nonzero(alive == detected_any))

        w_fault = field_cost[type_idx]
        revenue_mask = fail_event & detected_any
        future_mask = fail_event & alive
        revenue = np.bincount(trial_of_fault[revenue_mask], weights=w_fault[revenue_mask], minlength=c)
        future = np.bincount(trial_of_fault[future_mask], weights=w_fault[future_mask], minlength=c)
        exposure = np.bincount(trial_of_fault[fail_event], weights=w_fault[fail_event], minlength=c)
        residual = np.abs((future + revenue) - exposure)
        if residual.size:
            max_residual = max(max_residual, float(residual.max()))

        direct = appraisal + removal_cost
        _accumulate_chunk(sums, sums_sq, direct, future, revenue)

    detections = {
        step.technique_id: {type_ids[i]: int(detect_counts[s, i]) for i in range(n_types)}
        for s, step in enumerate(plan.steps)
    }
    return SimulationReport(
        trials=n,
        fault_count_mode=config.fault_count_mode,
        direct=_component(sums[0], sums_sq[0], n),
        future=_component(sums[1], sums_sq[1], n),
        revenue=_component(sums[2], sums_sq[2], n),
        net=_component(sums[3], sums_sq[3], n),
        detections=detections,
        conservation_violations=violations,
        max_conservation_residual=max_residual,
    )


def _accumulate_chunk(sums, sums_sq, direct, future, revenue):
    net = revenue - direct
    for k, arr in enumerate((direct, future, revenue, net)):
        sums[k] += arr.sum()
        sums_sq[k] += (arr * arr).sum()
