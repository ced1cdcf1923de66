/**
 * Client view state. Drafts never touch the server until explicitly
 * saved; every displayed result is tagged with the scenario and
 * catalogue version it came from; responses arriving out of order are
 * discarded via per-scenario sequence stamps.
 */

import type {
  BreakdownDoc,
  OptimizationResultDoc,
  PlanDoc,
  ScenarioDoc,
  SensitivityRankingDoc,
  SimulationReportDoc,
} from "./types.js";

export interface DraftStep {
  technique_id: string;
  effort: number;
}

export interface TaggedEvaluation {
  breakdown: BreakdownDoc;
  catalogueVersion: number;
  seq: number;
}

export class ViewState {
  scenarios: ScenarioDoc[] = [];
  activeId: string | null = null;
  compareSelection: string[] = [];

  private drafts = new Map<string, DraftStep[]>();
  private evaluations = new Map<string, TaggedEvaluation>();
  private optimizations = new Map<string, OptimizationResultDoc>();
  private simulations = new Map<string, SimulationReportDoc>();
  private sensitivities = new Map<string, SensitivityRankingDoc>();
  private nextSeq = new Map<string, number>();

  setScenarios(scenarios: ScenarioDoc[]): void {
    this.scenarios = scenarios;
    const ids = new Set(scenarios.map((s) => s.scenario_id));
    if (this.activeId !== null && !ids.has(this.activeId)) this.activeId = null;
    this.compareSelection = this.compareSelection.filter((id) => ids.has(id));
    for (const map of [this.drafts, this.evaluations, this.optimizations, this.simulations, this.sensitivities]) {
      for (const key of [...map.keys()]) if (!ids.has(key)) map.delete(key);
    }
  }

  upsertScenario(scenario: ScenarioDoc): void {
    const index = this.scenarios.findIndex((s) => s.scenario_id === scenario.scenario_id);
    if (index >= 0) this.scenarios[index] = scenario;
    else this.scenarios.push(scenario);
  }

  activeScenario(): ScenarioDoc | null {
    return this.scenarios.find((s) => s.scenario_id === this.activeId) ?? null;
  }

  // -- drafts ---------------------------------------------------------------

  /** Current draft for a scenario, seeded from its stored plan. */
  draftFor(scenario: ScenarioDoc): DraftStep[] {
    let draft = this.drafts.get(scenario.scenario_id);
    if (!draft) {
      draft = scenario.plan.steps.map((s) => ({ technique_id: s.technique_id, effort: s.effort }));
      this.drafts.set(scenario.scenario_id, draft);
    }
    return draft;
  }

  setDraftEffort(scenarioId: string, techniqueId: string, effort: number): void {
    const scenario = this.scenarios.find((s) => s.scenario_id === scenarioId);
    if (!scenario) return;
    const draft = this.draftFor(scenario);
    const step = draft.find((s) => s.technique_id === techniqueId);
    if (step) step.effort = effort;
    else draft.push({ technique_id: techniqueId, effort });
  }

  /** Replace the whole draft (e.g. applying an optimization result). */
  setDraft(scenarioId: string, steps: DraftStep[]): void {
    this.drafts.set(scenarioId, steps.map((s) => ({ ...s })));
  }

  discardDraft(scenarioId: string): void {
    this.drafts.delete(scenarioId);
  }

  draftIsDirty(scenario: ScenarioDoc): boolean {
    const draft = this.drafts.get(scenario.scenario_id);
    if (!draft) return false;
    const stored = scenario.plan.steps;
    if (draft.length !== stored.length) return true;
    return draft.some((s, i) => s.technique_id !== stored[i]!.technique_id || s.effort !== stored[i]!.effort);
  }

  draftPlanDoc(scenario: ScenarioDoc): PlanDoc {
    return {
      kind: "qa_plan",
      schema_version: 1,
      steps: this.draftFor(scenario).map((s) => ({ technique_id: s.technique_id, effort: s.effort })),
    };
  }

  // -- stale-response guard ---------------------------------------------------

  /** Stamp a new in-flight request for the scenario. */
  beginRequest(scenarioId: string): number {
    const seq = (this.nextSeq.get(scenarioId) ?? 0) + 1;
    this.nextSeq.set(scenarioId, seq);
    return seq;
  }

  /** Accept an evaluation response unless a newer one already landed. */
  acceptEvaluation(
    scenarioId: string,
    seq: number,
    breakdown: BreakdownDoc,
    catalogueVersion: number,
  ): boolean {
    const current = this.evaluations.get(scenarioId);
    if (current && current.seq > seq) return false;
    this.evaluations.set(scenarioId, { breakdown, catalogueVersion, seq });
    return true;
  }

  evaluationFor(scenarioId: string): TaggedEvaluation | null {
    return this.evaluations.get(scenarioId) ?? null;
  }

  // -- job results --------------------------------------------------------

  setOptimization(scenarioId: string, result: OptimizationResultDoc): void {
    this.optimizations.set(scenarioId, result);
  }

  optimizationFor(scenarioId: string): OptimizationResultDoc | null {
    return this.optimizations.get(scenarioId) ?? null;
  }

  setSimulation(scenarioId: string, report: SimulationReportDoc): void {
    this.simulations.set(scenarioId, report);
  }

  simulationFor(scenarioId: string): SimulationReportDoc | null {
    return this.simulations.get(scenarioId) ?? null;
  }

  setSensitivity(scenarioId: string, ranking: SensitivityRankingDoc): void {
    this.sensitivities.set(scenarioId, ranking);
  }

  sensitivityFor(scenarioId: string): SensitivityRankingDoc | null {
    return this.sensitivities.get(scenarioId) ?? null;
  }

  // -- comparison ------------------------------------------------------------

  toggleCompare(scenarioId: string, limit = 4): void {
    const index = this.compareSelection.indexOf(scenarioId);
    if (index >= 0) this.compareSelection.splice(index, 1);
    else if (this.compareSelection.length < limit) this.compareSelection.push(scenarioId);
  }
}
