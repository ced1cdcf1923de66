"""Net-benefit maximization over QA effort allocations.

The decision variable is the effort vector of an ordered technique list;
the objective is the plan's net value (revenues minus direct costs,
future costs being redundant with revenues through the conservation of
total field exposure). Supported constraint families:

* ``Budget``: total effort at most t_max,
* ``FixedOrNone``: a technique runs at exactly one fixed effort or not
  at all (effort in {0, T}),
* ``EffortBounds``: per-technique box bounds,
* ``FixedOrder``: asserts the technique application order (the plan
  order is always the problem's technique order; a FixedOrder constraint
  must be consistent with it).

The objective is smooth in each effort under the exponential difficulty
law but generally non-concave, and it jumps at effort 0 where the setup
cost switches on. The solver therefore branches explicitly over
fixed-or-none choices, seeds multistart coordinate ascent from the best
points of a coarse feasibility-filtered lattice (plus random feasible
starts), and refines each coordinate with a golden-section line search
that always also checks the 0/lower/upper endpoints. ``enumerate_grid``
is the brute-force lattice oracle the solver is tested against.

The convergence tolerance is denominated in currency units, like every
cost input; scaling all currency inputs (including the tolerance) by a
positive factor scales every objective value by that factor and leaves
the chosen allocation unchanged up to tie-breaking.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from .economics import evaluate_plan, expected_type_counts
from .errors import (
    GridCapExceededError,
    InfeasibleError,
    NumericInputError,
    ValidationError,
)
from .model import (
    CostBreakdown,
    DifficultyModel,
    FaultProfile,
    MetricsCatalogue,
    QAPlan,
    Technique,
)

_FEAS_TOL = 1e-9
_BLOCK = 65536
# Difficulty below this is treated as exhausted when deriving default effort caps.
_THETA_FLOOR = 1e-9


@dataclass(frozen=True)
class Budget:
    t_max: float

    def __post_init__(self):
        if not math.isfinite(self.t_max) or self.t_max < 0.0:
            raise ValidationError(f"budget t_max must be finite and >= 0, got {self.t_max}", field="t_max")


@dataclass(frozen=True)
class FixedOrNone:
    technique_id: str
    fixed_effort: float

    def __post_init__(self):
        if not math.isfinite(self.fixed_effort) or self.fixed_effort < 0.0:
            raise ValidationError(
                f"fixed_effort must be finite and >= 0, got {self.fixed_effort}", field="fixed_effort"
            )


@dataclass(frozen=True)
class EffortBounds:
    technique_id: str
    lower: float
    upper: float

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValidationError("bounds must be finite", field="bounds")
        if self.lower < 0.0 or self.lower > self.upper:
            raise ValidationError(
                f"bounds need 0 <= lower <= upper, got [{self.lower}, {self.upper}]", field="bounds"
            )


@dataclass(frozen=True)
class FixedOrder:
    technique_ids: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "technique_ids", tuple(self.technique_ids))
        if len(set(self.technique_ids)) != len(self.technique_ids):
            raise ValidationError("fixed_order ids must be distinct", field="technique_ids")


Constraint = Budget | FixedOrNone | EffortBounds | FixedOrder


@dataclass(frozen=True)
class SolverSettings:
    """Knobs of the hybrid solver; all strictly positive.

    ``grid_points`` caps the total size of the seeding lattice,
    ``tolerance`` is the currency-denominated sweep-improvement stopping
    threshold, ``max_sweeps`` the ascent iteration cap per start.
    """

    grid_points: int = 100_000
    multistarts: int = 8
    seed: int = 0
    max_sweeps: int = 500
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.grid_points < 1 or self.multistarts < 1 or self.max_sweeps < 1:
            raise ValidationError("solver settings must be strictly positive", field="settings")
        if not math.isfinite(self.tolerance) or self.tolerance <= 0.0:
            raise ValidationError(f"tolerance must be > 0, got {self.tolerance}", field="tolerance")
        if self.seed < 0:
            raise ValidationError(f"seed must be >= 0, got {self.seed}", field="seed")


@dataclass(frozen=True)
class OptimizationProblem:
    technique_ids: tuple[str, ...]
    profile: FaultProfile
    catalogue: MetricsCatalogue
    constraints: tuple[Constraint, ...] = ()
    settings: SolverSettings = SolverSettings()

    def __post_init__(self):
        object.__setattr__(self, "technique_ids", tuple(self.technique_ids))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if not self.technique_ids:
            raise ValidationError("problem needs at least one technique", field="technique_ids")
        if len(set(self.technique_ids)) != len(self.technique_ids):
            raise ValidationError("technique ids must be unique", field="technique_ids")
        for tid in self.technique_ids:
            self.catalogue.technique(tid)  # raises CatalogueMismatchError if unknown
        for con in self.constraints:
            if isinstance(con, (FixedOrNone, EffortBounds)) and con.technique_id not in self.technique_ids:
                raise ValidationError(
                    f"constraint references technique {con.technique_id!r} not in the problem",
                    field="constraints",
                )
            if isinstance(con, FixedOrder):
                unknown = [t for t in con.technique_ids if t not in self.technique_ids]
                if unknown:
                    raise ValidationError(
                        f"fixed_order references techniques {unknown} not in the problem", field="constraints"
                    )
                positions = [self.technique_ids.index(t) for t in con.technique_ids]
                if positions != sorted(positions):
                    raise ValidationError(
                        "fixed_order conflicts with the problem's technique order "
                        f"(expected relative order {con.technique_ids})",
                        field="constraints",
                    )

    def plan_for(self, allocation) -> QAPlan:
        if len(allocation) != len(self.technique_ids):
            raise ValidationError(
                f"allocation length {len(allocation)} != technique count {len(self.technique_ids)}",
                field="allocation",
            )
        return QAPlan.of(*zip(self.technique_ids, (float(t) for t in allocation)))


@dataclass(frozen=True)
class OptimizationResult:
    best_plan: QAPlan
    best_breakdown: CostBreakdown
    objective: float
    trace: tuple[tuple[int, float], ...]
    status: str  # converged | iteration-limit | infeasible


@dataclass(frozen=True)
class SensitivityEntry:
    factor: str
    net_low: float
    net_high: float
    swing: float
    clamped: bool = False


def objective(problem: OptimizationProblem, allocation) -> float:
    """Net value of the allocation under the problem's technique order.

    Defined for every non-negative allocation; constraints do not apply
    here. Raises NumericInputError if the value is not finite.
    """
    plan = problem.plan_for(allocation)
    breakdown = evaluate_plan(plan, problem.profile, problem.catalogue)
    if not math.isfinite(breakdown.net):
        raise NumericInputError(_diagnose_nonfinite(plan, problem))
    return breakdown.net


def _diagnose_nonfinite(plan: QAPlan, problem: OptimizationProblem) -> str:
    counts = expected_type_counts(problem.profile, problem.catalogue)
    for step in plan.steps:
        tech = problem.catalogue.technique(step.technique_id)
        if not math.isfinite(tech.execution_cost(step.effort)):
            return f"non-finite execution cost for technique {tech.id!r} at effort {step.effort}"
        for dt in problem.catalogue.defect_types:
            term = counts[dt.id] * (1.0 - tech.difficulty_at(dt.id, step.effort)) * tech.removal_cost(dt.id)
            if not math.isfinite(term):
                return f"non-finite removal term for technique {tech.id!r}, defect type {dt.id!r}"
            term = counts[dt.id] * dt.failure_probability * dt.field_cost
            if not math.isfinite(term):
                return f"non-finite field cost term for defect type {dt.id!r}"
    return "objective evaluated to a non-finite value"


# ---------------------------------------------------------------------------
# feasible box / branch construction


def _effort_cap(technique: Technique, catalogue: MetricsCatalogue) -> float:
    """Default per-technique search upper bound when no budget or bound caps it.

    Past this effort no defect type's difficulty can drop further in any
    practically relevant way, so added effort only adds execution cost.
    """
    cap = 0.0
    for dt in catalogue.defect_types:
        model = technique.difficulty[dt.id]
        if model.law == "tabulated":
            cap = max(cap, model.knots[-1][0])
        else:
            theta0 = model.base_difficulty
            if theta0 >= 1.0:
                continue  # blind for this type at every effort
            if theta0 <= 0.0:
                cap = max(cap, model.reference_effort)
            else:
                cap = max(cap, model.reference_effort * math.log(_THETA_FLOOR) / math.log(theta0))
    return cap


def _boxes(problem: OptimizationProblem):
    """Per-technique bounds, fixed-or-none value sets, and the budget.

    ``hi_user`` holds only user-imposed upper bounds (None if absent);
    ``hi_search`` additionally folds in the heuristic effort cap and the
    budget and is what the solver actually searches over. The heuristic
    cap never filters user-supplied values such as fixed-or-none efforts.
    """
    n = len(problem.technique_ids)
    budget = None
    lo = [0.0] * n
    hi_user: list[float | None] = [None] * n
    fixed_choices: dict[int, float] = {}
    for con in problem.constraints:
        if isinstance(con, Budget):
            budget = con.t_max if budget is None else min(budget, con.t_max)
        elif isinstance(con, EffortBounds):
            j = problem.technique_ids.index(con.technique_id)
            lo[j] = max(lo[j], con.lower)
            hi_user[j] = con.upper if hi_user[j] is None else min(hi_user[j], con.upper)
        elif isinstance(con, FixedOrNone):
            j = problem.technique_ids.index(con.technique_id)
            if j in fixed_choices and fixed_choices[j] != con.fixed_effort:
                raise ValidationError(
                    f"conflicting fixed_or_none efforts for technique {con.technique_id!r}",
                    field="constraints",
                )
            fixed_choices[j] = con.fixed_effort
    hi_search = [0.0] * n
    for j, tid in enumerate(problem.technique_ids):
        if hi_user[j] is not None and lo[j] > hi_user[j] + _FEAS_TOL:
            raise InfeasibleError(f"technique {tid!r} has empty effort range [{lo[j]}, {hi_user[j]}]")
        cap = hi_user[j]
        if cap is None:
            cap = _effort_cap(problem.catalogue.technique(tid), problem.catalogue)
        if budget is not None:
            if lo[j] > budget + _FEAS_TOL:
                raise InfeasibleError(f"technique {tid!r} lower bound {lo[j]} exceeds budget {budget}")
            cap = min(cap, budget)
        hi_search[j] = max(cap, lo[j])
    if budget is not None and sum(lo) > budget + _FEAS_TOL:
        raise InfeasibleError(f"lower bounds require total effort {sum(lo)}, budget is {budget}")
    return lo, hi_user, hi_search, fixed_choices, budget


def _branches(lo, hi_user, fixed_choices):
    """Cartesian product over each fixed-or-none technique's admissible values."""
    if not fixed_choices:
        yield {}
        return
    indices = sorted(fixed_choices)
    value_sets = []
    for j in indices:
        upper = hi_user[j] if hi_user[j] is not None else math.inf
        allowed = sorted(
            {v for v in (0.0, fixed_choices[j]) if lo[j] - _FEAS_TOL <= v <= upper + _FEAS_TOL}
        )
        if not allowed:
            raise InfeasibleError(
                f"fixed_or_none values {{0, {fixed_choices[j]}}} all conflict with bounds "
                f"[{lo[j]}, {upper}] for technique index {j}"
            )
        value_sets.append(allowed)
    if len(indices) > 20:
        raise ValidationError(
            f"{len(indices)} fixed_or_none constraints would need 2**{len(indices)} branches",
            field="constraints",
        )
    for combo in itertools.product(*value_sets):
        yield dict(zip(indices, combo))


def satisfies_constraints(problem: OptimizationProblem, allocation, tol: float = _FEAS_TOL) -> bool:
    alloc = list(allocation)
    for con in problem.constraints:
        if isinstance(con, Budget):
            if sum(alloc) > con.t_max + tol:
                return False
        elif isinstance(con, EffortBounds):
            j = problem.technique_ids.index(con.technique_id)
            if alloc[j] < con.lower - tol or alloc[j] > con.upper + tol:
                return False
        elif isinstance(con, FixedOrNone):
            j = problem.technique_ids.index(con.technique_id)
            if min(abs(alloc[j]), abs(alloc[j] - con.fixed_effort)) > tol:
                return False
    return True


# ---------------------------------------------------------------------------
# vectorized net evaluation for lattices


def _theta_batch(model: DifficultyModel, efforts: np.ndarray) -> np.ndarray:
    if model.law == "exponential":
        return np.power(model.base_difficulty, efforts / model.reference_effort)
    xs = np.array([k[0] for k in model.knots])
    ys = np.array([k[1] for k in model.knots])
    return np.interp(efforts, xs, ys)


def _exec_cost_batch(technique: Technique, efforts: np.ndarray) -> np.ndarray:
    knots = technique.execution_cost_knots
    if knots is None:
        return technique.execution_cost_rate * efforts
    xs = np.array([k[0] for k in knots])
    ys = np.array([k[1] for k in knots])
    cost = np.interp(efforts, xs, ys)
    if len(knots) > 1:
        slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        beyond = efforts > xs[-1]
        cost = np.where(beyond, ys[-1] + slope * (efforts - xs[-1]), cost)
    return cost


def net_batch(
    catalogue: MetricsCatalogue,
    profile: FaultProfile,
    technique_ids,
    allocations: np.ndarray,
) -> np.ndarray:
    """Net value for a whole batch of allocations (rows) at once.

    Same formula as the scalar path in :func:`qaplan.economics.evaluate_plan`;
    agreement between the two is pinned by tests.
    """
    allocations = np.asarray(allocations, dtype=np.float64)
    techniques = [catalogue.technique(t) for t in technique_ids]
    counts = expected_type_counts(profile, catalogue)
    net = np.zeros(allocations.shape[0])
    thetas = []
    for x, tech in enumerate(techniques):
        t = allocations[:, x]
        net -= np.where(t > 0.0, tech.setup_cost, 0.0) + _exec_cost_batch(tech, t)
        thetas.append({dt.id: _theta_batch(tech.difficulty[dt.id], t) for dt in catalogue.defect_types})
    for dt in catalogue.defect_types:
        n = counts[dt.id]
        margin_field = dt.failure_probability * dt.field_cost
        survival = np.ones(allocations.shape[0])
        for x, tech in enumerate(techniques):
            theta = thetas[x][dt.id]
            net += n * (1.0 - theta) * survival * (margin_field - tech.removal_cost(dt.id))
            survival = survival * theta
    return net


# ---------------------------------------------------------------------------
# grid oracle


def enumerate_grid(
    problem: OptimizationProblem, step: float, cap: int = 10_000_000
) -> OptimizationResult:
    """Exact maximum of the objective over the feasible effort lattice.

    Each free technique ranges over lo, lo+step, ... up to its upper
    bound (upper bound included); fixed-or-none techniques range over
    their admissible {0, T} values. Refuses to enumerate more than
    ``cap`` lattice points.
    """
    if not math.isfinite(step) or step <= 0.0:
        raise ValidationError(f"grid step must be > 0, got {step}", field="step")
    lo, hi_user, hi_search, fixed_choices, budget = _boxes(problem)

    axes = []
    for j in range(len(problem.technique_ids)):
        if j in fixed_choices:
            upper = hi_user[j] if hi_user[j] is not None else math.inf
            values = [v for v in (0.0, fixed_choices[j]) if lo[j] - _FEAS_TOL <= v <= upper + _FEAS_TOL]
            axes.append(np.array(sorted(set(values))))
        else:
            values = np.arange(lo[j], hi_search[j] + step * 1e-9, step)
            if values.size == 0 or values[-1] < hi_search[j] - _FEAS_TOL:
                values = np.append(values, hi_search[j])
            axes.append(values)

    total = 1
    for axis in axes:
        total *= len(axis)
    if total > cap:
        raise GridCapExceededError(
            f"grid enumeration refused: {total} lattice points exceed the cap of {cap}", total
        )

    sizes = [len(a) for a in axes]
    best_alloc = None
    best_key = None
    for block_start in range(0, total, _BLOCK):
        idx = np.arange(block_start, min(block_start + _BLOCK, total))
        coords = np.unravel_index(idx, sizes)
        allocs = np.column_stack([axes[j][coords[j]] for j in range(len(axes))])
        if budget is not None:
            mask = allocs.sum(axis=1) <= budget + _FEAS_TOL
            allocs = allocs[mask]
            if allocs.shape[0] == 0:
                continue
        nets = net_batch(problem.catalogue, problem.profile, problem.technique_ids, allocs)
        block_max = nets.max()
        tied = allocs[nets == block_max]
        for row in tied:
            key = (-block_max, float(row.sum()), tuple(row))
            if best_key is None or key < best_key:
                best_key = key
                best_alloc = row.copy()
    if best_alloc is None:
        raise InfeasibleError("no feasible lattice point under the budget")

    plan = problem.plan_for(best_alloc)
    breakdown = evaluate_plan(plan, problem.profile, problem.catalogue)
    if not math.isfinite(breakdown.net):
        raise NumericInputError(_diagnose_nonfinite(plan, problem))
    return OptimizationResult(
        best_plan=plan,
        best_breakdown=breakdown,
        objective=breakdown.net,
        trace=((0, breakdown.net),),
        status="converged",
    )


# ---------------------------------------------------------------------------
# hybrid solver


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_INV_PHI_SQ = (3.0 - math.sqrt(5.0)) / 2.0


def _line_max(f, lo: float, hi: float, x_cur: float, f_cur: float):
    """Best point on [lo, hi]: golden-section result, both endpoints, current point."""
    xtol = max(1e-12, 1e-9 * max(1.0, hi - lo))
    candidates = [(x_cur, f_cur)] if lo <= x_cur <= hi else []
    candidates.append(_golden_max(f, lo, hi, xtol))
    for endpoint in (lo, hi):
        if endpoint != x_cur:
            candidates.append((endpoint, f(endpoint)))
    # Highest value wins; ties prefer the smaller coordinate.
    candidates.sort(key=lambda p: (-p[1], p[0]))
    return candidates[0]


def _golden_max(f, lo: float, hi: float, xtol: float):
    """Golden-section maximum of f on [lo, hi]; returns (x, f(x))."""
    dist = hi - lo
    if dist <= xtol:
        x = 0.5 * (lo + hi)
        return x, f(x)
    n = int(math.ceil(math.log(xtol / dist) / math.log(_INV_PHI)))
    c = lo + _INV_PHI_SQ * dist
    d = lo + _INV_PHI * dist
    yc = f(c)
    yd = f(d)
    for _ in range(max(0, n - 1)):
        if yc > yd:
            hi = d
            d = c
            yd = yc
            dist = _INV_PHI * dist
            c = lo + _INV_PHI_SQ * dist
            yc = f(c)
        else:
            lo = c
            c = d
            yc = yd
            dist = _INV_PHI * dist
            d = lo + _INV_PHI * dist
            yd = f(d)
    if yc > yd:
        x = 0.5 * (lo + d)
    else:
        x = 0.5 * (c + hi)
    return x, f(x)


def _seed_starts(problem, lo, hi, fixed, budget, free, rng):
    """Best coarse-lattice points plus random feasible points, as ascent starts."""
    settings = problem.settings
    n = len(problem.technique_ids)
    m = len(free)
    per_axis = max(2, int(round(settings.grid_points ** (1.0 / m))))
    per_axis = min(per_axis, 201)
    axes = [np.linspace(lo[j], hi[j], per_axis) for j in free]

    base = np.zeros(n)
    for j, v in fixed.items():
        base[j] = v

    starts: list[np.ndarray] = []
    floor_alloc = base.copy()
    for j in free:
        floor_alloc[j] = lo[j]
    if budget is None or floor_alloc.sum() <= budget + _FEAS_TOL:
        starts.append(floor_alloc)

    total = per_axis**m
    sizes = [per_axis] * m
    best_rows: list[tuple[float, np.ndarray]] = []
    for block_start in range(0, total, _BLOCK):
        idx = np.arange(block_start, min(block_start + _BLOCK, total))
        coords = np.unravel_index(idx, sizes)
        allocs = np.tile(base, (len(idx), 1))
        for k, j in enumerate(free):
            allocs[:, j] = axes[k][coords[k]]
        if budget is not None:
            mask = allocs.sum(axis=1) <= budget + _FEAS_TOL
            allocs = allocs[mask]
            if allocs.shape[0] == 0:
                continue
        nets = net_batch(problem.catalogue, problem.profile, problem.technique_ids, allocs)
        order = np.argsort(-nets, kind="stable")[: settings.multistarts]
        best_rows.extend((float(nets[i]), allocs[i].copy()) for i in order)
    best_rows.sort(key=lambda item: -item[0])
    starts.extend(row for _, row in best_rows[: settings.multistarts])

    for _ in range(settings.multistarts):
        alloc = base.copy()
        for j in free:
            alloc[j] = rng.uniform(lo[j], hi[j])
        if budget is not None:
            free_total = sum(alloc[j] - lo[j] for j in free)
            room = budget - floor_alloc.sum()
            if free_total > room and free_total > 0.0:
                scale = max(0.0, room) / free_total
                for j in free:
                    alloc[j] = lo[j] + (alloc[j] - lo[j]) * scale
        starts.append(alloc)
    return starts


def optimize(problem: OptimizationProblem) -> OptimizationResult:
    """Best feasible allocation found by branch + grid-seeded coordinate ascent.

    Deterministic for a given problem and settings seed. Ties between
    equal-objective allocations resolve to the smaller total effort,
    then the lexicographically smaller allocation vector.
    """
    settings = problem.settings
    try:
        lo, hi_user, hi, fixed_choices, budget = _boxes(problem)
        branch_list = list(_branches(lo, hi_user, fixed_choices))
    except InfeasibleError:
        empty = QAPlan(())
        breakdown = evaluate_plan(empty, problem.profile, problem.catalogue)
        return OptimizationResult(
            best_plan=empty,
            best_breakdown=breakdown,
            objective=breakdown.net,
            trace=(),
            status="infeasible",
        )

    rng = np.random.Generator(np.random.PCG64(settings.seed))
    scalar = lambda alloc: objective(problem, alloc)

    best_key = None
    best_alloc = None
    best_converged = True
    trace: list[tuple[int, float]] = []
    sweep_counter = 0
    found_feasible = False

    for fixed in branch_list:
        free = [j for j in range(len(problem.technique_ids)) if j not in fixed]
        if budget is not None:
            fixed_total = sum(fixed.values()) + sum(lo[j] for j in free)
            if fixed_total > budget + _FEAS_TOL:
                continue
        found_feasible = True

        if not free:
            alloc = np.zeros(len(problem.technique_ids))
            for j, v in fixed.items():
                alloc[j] = v
            f_val = scalar(alloc)
            key = (-f_val, float(alloc.sum()), tuple(alloc))
            if best_key is None or key < best_key:
                best_key, best_alloc, best_converged = key, alloc, True
            continue

        for start in _seed_starts(problem, lo, hi, fixed, budget, free, rng):
            current = start.copy()
            f_cur = scalar(current)
            converged = False
            for _ in range(settings.max_sweeps):
                f_before = f_cur
                for j in free:
                    lo_j = lo[j]
                    hi_j = hi[j]
                    if budget is not None:
                        hi_j = min(hi_j, budget - (current.sum() - current[j]))
                        hi_j = max(hi_j, lo_j)

                    def f_line(t, j=j):
                        trial = current.copy()
                        trial[j] = t
                        return scalar(trial)

                    x_best, f_best = _line_max(f_line, lo_j, hi_j, current[j], f_cur)
                    if f_best > f_cur or (f_best == f_cur and x_best < current[j]):
                        current[j] = x_best
                        f_cur = f_best
                if budget is not None and len(free) > 1:
                    # On the budget face single-coordinate moves are blocked;
                    # exchange moves (shift effort between two techniques at
                    # constant total) restore first-order optimality there.
                    for a in range(len(free)):
                        for b in range(a + 1, len(free)):
                            j, k = free[a], free[b]
                            d_lo = max(lo[j] - current[j], current[k] - hi[k])
                            d_hi = min(hi[j] - current[j], current[k] - lo[k])
                            if d_hi - d_lo <= 0.0:
                                continue

                            def f_swap(d, j=j, k=k):
                                trial = current.copy()
                                trial[j] += d
                                trial[k] -= d
                                return scalar(trial)

                            d_best, f_best = _line_max(f_swap, d_lo, d_hi, 0.0, f_cur)
                            if f_best > f_cur:
                                current[j] += d_best
                                current[k] -= d_best
                                f_cur = f_best
                sweep_counter += 1
                running_best = f_cur if best_key is None else max(f_cur, -best_key[0])
                trace.append((sweep_counter, running_best))
                if f_cur - f_before <= settings.tolerance:
                    converged = True
                    break
            key = (-f_cur, float(current.sum()), tuple(current))
            if best_key is None or key < best_key:
                best_key, best_alloc, best_converged = key, current.copy(), converged

    if not found_feasible or best_alloc is None:
        empty = QAPlan(())
        breakdown = evaluate_plan(empty, problem.profile, problem.catalogue)
        return OptimizationResult(
            best_plan=empty,
            best_breakdown=breakdown,
            objective=breakdown.net,
            trace=tuple(trace),
            status="infeasible",
        )

    assert satisfies_constraints(problem, best_alloc), "solver produced an infeasible allocation"
    plan = problem.plan_for(best_alloc)
    breakdown = evaluate_plan(plan, problem.profile, problem.catalogue)
    if not math.isfinite(breakdown.net):
        raise NumericInputError(_diagnose_nonfinite(plan, problem))
    return OptimizationResult(
        best_plan=plan,
        best_breakdown=breakdown,
        objective=breakdown.net,
        trace=tuple(trace),
        status="converged" if best_converged else "iteration-limit",
    )


# ---------------------------------------------------------------------------
# sensitivity analysis


def _factor_values(problem: OptimizationProblem):
    """Deterministic enumeration of every scalar input the model reacts to."""
    yield "fault_count", problem.profile.estimated_fault_count
    for dt in problem.catalogue.defect_types:
        yield f"pi:{dt.id}", dt.failure_probability
        yield f"field_removal:{dt.id}", dt.field_removal_cost
        yield f"field_effect:{dt.id}", dt.field_effect_cost
    for tid in problem.technique_ids:
        tech = problem.catalogue.technique(tid)
        yield f"setup:{tid}", tech.setup_cost
        if tech.execution_cost_knots is None:
            yield f"exec_rate:{tid}", tech.execution_cost_rate
        for dt in problem.catalogue.defect_types:
            model = tech.difficulty[dt.id]
            if model.law == "exponential":
                yield f"base_difficulty:{tid}:{dt.id}", model.base_difficulty


def _with_factor(problem: OptimizationProblem, factor: str, value: float) -> OptimizationProblem:
    catalogue = problem.catalogue
    profile = problem.profile
    if factor == "fault_count":
        profile = replace(profile, estimated_fault_count=value)
        return replace(problem, profile=profile)
    kind, _, rest = factor.partition(":")
    if kind in ("pi", "field_removal", "field_effect"):
        field_name = {
            "pi": "failure_probability",
            "field_removal": "field_removal_cost",
            "field_effect": "field_effect_cost",
        }[kind]
        new_types = tuple(
            replace(dt, **{field_name: value}) if dt.id == rest else dt for dt in catalogue.defect_types
        )
        return replace(problem, catalogue=replace(catalogue, defect_types=new_types))
    if kind in ("setup", "exec_rate"):
        field_name = "setup_cost" if kind == "setup" else "execution_cost_rate"
        new_techs = tuple(
            replace(t, **{field_name: value}) if t.id == rest else t for t in catalogue.techniques
        )
        return replace(problem, catalogue=replace(catalogue, techniques=new_techs))
    if kind == "base_difficulty":
        tid, _, type_id = rest.partition(":")
        new_techs = []
        for tech in catalogue.techniques:
            if tech.id == tid:
                new_diff = dict(tech.difficulty)
                new_diff[type_id] = replace(new_diff[type_id], base_difficulty=value)
                tech = replace(tech, difficulty=new_diff)
            new_techs.append(tech)
        return replace(problem, catalogue=replace(catalogue, techniques=tuple(new_techs)))
    raise ValidationError(f"unknown sensitivity factor {factor!r}", field="factor")


_UNIT_BOUNDED = ("pi", "base_difficulty")


def sensitivity(
    problem: OptimizationProblem,
    base_plan: QAPlan,
    factor_selector=None,
    relative_range: float = 0.2,
) -> list[SensitivityEntry]:
    """One-at-a-time +/- perturbation of each scalar input, ranked by net swing.

    ``factor_selector`` filters by exact factor id or by category prefix
    (e.g. ``"pi"`` selects every type's failure probability). Values
    perturbed out of their valid domain (probabilities above 1) are
    clamped and the entry flagged. Ties rank lexicographically.
    """
    if not 0.0 <= relative_range <= 1.0:
        raise ValidationError(
            f"relative_range must lie in [0, 1], got {relative_range}", field="relative_range"
        )
    if not satisfies_constraints(problem, _plan_allocation(problem, base_plan)):
        raise InfeasibleError("base_plan violates the problem constraints")

    selected = []
    for factor, value in _factor_values(problem):
        if factor_selector is not None:
            wanted = set(factor_selector)
            category = factor.split(":", 1)[0]
            if factor not in wanted and category not in wanted:
                continue
        selected.append((factor, value))

    entries = []
    for factor, value in selected:
        low_v = value * (1.0 - relative_range)
        high_v = value * (1.0 + relative_range)
        clamped = False
        if factor.split(":", 1)[0] in _UNIT_BOUNDED and high_v > 1.0:
            high_v = 1.0
            clamped = True
        net_low = evaluate_plan(
            base_plan, *_problem_parts(_with_factor(problem, factor, low_v))
        ).net
        net_high = evaluate_plan(
            base_plan, *_problem_parts(_with_factor(problem, factor, high_v))
        ).net
        entries.append(
            SensitivityEntry(
                factor=factor,
                net_low=net_low,
                net_high=net_high,
                swing=abs(net_high - net_low),
                clamped=clamped,
            )
        )
    entries.sort(key=lambda e: (-e.swing, e.factor))
    return entries


def _problem_parts(problem: OptimizationProblem):
    return problem.profile, problem.catalogue


def _plan_allocation(problem: OptimizationProblem, plan: QAPlan):
    efforts = {s.technique_id: s.effort for s in plan.steps}
    return [efforts.get(tid, 0.0) for tid in problem.technique_ids]
