/**
 * Document types mirroring the service's canonical JSON schemas
 * (see docs/schemas.md in the repository root).
 */

export interface DefectTypeDoc {
  id: string;
  name: string;
  share: number;
  failure_probability: number;
  field_removal_cost: number;
  field_effect_cost: number;
}

export interface DifficultyDoc {
  law: "exponential" | "tabulated";
  base_difficulty?: number;
  reference_effort?: number;
  knots?: [number, number][];
}

export interface TechniqueDoc {
  id: string;
  name: string;
  setup_cost: number;
  execution_cost_rate: number;
  execution_cost_knots: [number, number][] | null;
  order_index: number;
  removal_costs: Record<string, number>;
  difficulty: Record<string, DifficultyDoc>;
}

export interface CatalogueDoc {
  kind: "metrics_catalogue";
  catalogue_id: string;
  version: number;
  currency: string;
  effort_unit: string;
  defect_types: DefectTypeDoc[];
  techniques: TechniqueDoc[];
  provenance: Record<string, string>;
}

export interface ProfileDoc {
  kind: "fault_profile";
  schema_version: number;
  estimated_fault_count: number;
  catalogue_ref: string;
  share_overrides: Record<string, number> | null;
}

export interface PlanStepDoc {
  technique_id: string;
  effort: number;
}

export interface PlanDoc {
  kind: "qa_plan";
  schema_version: number;
  steps: PlanStepDoc[];
}

export interface BreakdownDoc {
  kind: "cost_breakdown";
  direct: number;
  future: number;
  revenue: number;
  net: number;
  per_technique: Record<string, { direct: number; revenue: number }>;
  per_type: Record<string, { direct: number; future: number; revenue: number }>;
}

export type ConstraintDoc =
  | { variant: "budget"; t_max: number }
  | { variant: "fixed_or_none"; technique_id: string; fixed_effort: number }
  | { variant: "bounds"; technique_id: string; min: number; max: number }
  | { variant: "fixed_order"; technique_ids: string[] };

export interface ScenarioDoc {
  kind: "scenario";
  scenario_id: string;
  name: string;
  catalogue_version: number;
  profile: ProfileDoc;
  plan: PlanDoc;
  constraints: ConstraintDoc[];
  breakdown: BreakdownDoc;
  rev: number;
  created: string;
  modified: string;
}

export interface OptimizationResultDoc {
  kind: "optimization_result";
  status: "converged" | "iteration-limit" | "infeasible";
  objective: number;
  best_plan: PlanDoc;
  best_breakdown: BreakdownDoc;
  trace: [number, number][];
}

export interface ComponentStatsDoc {
  mean: number;
  std_error: number;
}

export interface SimulationReportDoc {
  kind: "simulation_report";
  trials: number;
  fault_count_mode: string;
  direct: ComponentStatsDoc;
  future: ComponentStatsDoc;
  revenue: ComponentStatsDoc;
  net: ComponentStatsDoc;
  detections: Record<string, Record<string, number>>;
  conservation_violations: number;
  max_conservation_residual: number;
}

export interface SensitivityEntryDoc {
  factor: string;
  net_low: number;
  net_high: number;
  swing: number;
  clamped: boolean;
}

export interface SensitivityRankingDoc {
  kind: "sensitivity_ranking";
  entries: SensitivityEntryDoc[];
}

export interface CompareResponse {
  scenarios: {
    scenario_id: string;
    name: string;
    catalogue_version: number;
    breakdown: BreakdownDoc;
  }[];
  deltas: {
    scenario_id: string;
    direct: number;
    future: number;
    revenue: number;
    net: number;
  }[];
}

export interface JobDoc {
  id: string;
  kind: string;
  status: "running" | "done" | "failed";
  result?: unknown;
  error?: { code: string; message: string };
}

export interface ApiError {
  code: string;
  message: string;
  field?: string;
}
