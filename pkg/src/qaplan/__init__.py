"""Decision support for planning analytical quality assurance.

Prices ordered defect-detection technique applications (direct costs,
future costs, revenues), optimizes effort allocation under constraints,
validates the analytics with a Monte-Carlo simulator, and persists the
cross-project metrics the model needs.
"""

from .errors import (
    CatalogueMismatchError,
    GridCapExceededError,
    IncompleteCatalogueError,
    InfeasibleError,
    NotFoundError,
    NumericInputError,
    QAPlanError,
    StaleWriteError,
    ValidationError,
)
from .model import (
    CostBreakdown,
    DefectType,
    DifficultyModel,
    FaultProfile,
    MetricsCatalogue,
    PlanStep,
    QAPlan,
    Technique,
    TechniqueContribution,
    TypeContribution,
)
from .economics import (
    direct_cost_combined,
    direct_cost_single,
    evaluate_plan,
    expected_type_counts,
    future_cost_combined,
    future_cost_single,
    revenue_combined,
    revenue_single,
    survival_before,
    total_field_exposure,
)
from .optimize import (
    Budget,
    EffortBounds,
    FixedOrder,
    FixedOrNone,
    OptimizationProblem,
    OptimizationResult,
    SensitivityEntry,
    SolverSettings,
    enumerate_grid,
    net_batch,
    objective,
    optimize,
    sensitivity,
)
from .simulate import SimulationConfig, SimulationReport, simulate

__version__ = "0.1.0"

__all__ = [
    "CatalogueMismatchError",
    "GridCapExceededError",
    "IncompleteCatalogueError",
    "InfeasibleError",
    "NotFoundError",
    "NumericInputError",
    "QAPlanError",
    "StaleWriteError",
    "ValidationError",
    "CostBreakdown",
    "DefectType",
    "DifficultyModel",
    "FaultProfile",
    "MetricsCatalogue",
    "PlanStep",
    "QAPlan",
    "Technique",
    "TechniqueContribution",
    "TypeContribution",
    "direct_cost_combined",
    "direct_cost_single",
    "evaluate_plan",
    "expected_type_counts",
    "future_cost_combined",
    "future_cost_single",
    "revenue_combined",
    "revenue_single",
    "survival_before",
    "total_field_exposure",
    "Budget",
    "EffortBounds",
    "FixedOrder",
    "FixedOrNone",
    "OptimizationProblem",
    "OptimizationResult",
    "SensitivityEntry",
    "SolverSettings",
    "enumerate_grid",
    "net_batch",
    "objective",
    "optimize",
    "sensitivity",
    "SimulationConfig",
    "SimulationReport",
    "simulate",
    "__version__",
]
