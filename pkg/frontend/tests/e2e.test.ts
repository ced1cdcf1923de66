/**
 * End-to-end acceptance against a live qaplan service: spawns
 * `qaplan serve` (override the binary with QAPLAN_BIN), bootstraps a
 * catalogue, and drives the same client-state flows the browser uses.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { ViewState } from "../src/state.js";
import type { CatalogueDoc, ScenarioDoc } from "../src/types.js";
import { renderBreakdown, renderCompareView } from "../src/views.js";

const PORT = 8973;
const BASE = `http://127.0.0.1:${PORT}`;

const catalogueDoc: CatalogueDoc & { schema_version: number } = {
  schema_version: 1,
  kind: "metrics_catalogue",
  catalogue_id: "e2e",
  version: 1,
  currency: "EUR",
  effort_unit: "person-days",
  defect_types: [
    { id: "logic", name: "logic", share: 0.6, failure_probability: 0.2, field_removal_cost: 120, field_effect_cost: 280 },
    { id: "doc", name: "documentation", share: 0.4, failure_probability: 0.05, field_removal_cost: 20, field_effect_cost: 10 },
  ],
  techniques: [
    {
      id: "review",
      name: "code review",
      setup_cost: 40,
      execution_cost_rate: 8,
      execution_cost_knots: null,
      order_index: 0,
      removal_costs: { logic: 6, doc: 1.5 },
      difficulty: {
        logic: { law: "exponential", base_difficulty: 0.55, reference_effort: 1 },
        doc: { law: "exponential", base_difficulty: 0.4, reference_effort: 1 },
      },
    },
    {
      id: "systest",
      name: "system test",
      setup_cost: 90,
      execution_cost_rate: 15,
      execution_cost_knots: null,
      order_index: 1,
      removal_costs: { logic: 14, doc: 3 },
      difficulty: {
        logic: { law: "exponential", base_difficulty: 0.5, reference_effort: 2 },
        doc: { law: "exponential", base_difficulty: 0.9, reference_effort: 2 },
      },
    },
  ],
  provenance: {},
};

let server: ChildProcess;
const api = new ApiClient(BASE);

async function waitForServer(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const response = await fetch(`${BASE}/health`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error("service did not come up");
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
}

async function createScenario(name: string, efforts: [string, number][]): Promise<ScenarioDoc> {
  return api.createScenario({
    name,
    catalogue_version: 1,
    profile: {
      kind: "fault_profile",
      schema_version: 1,
      estimated_fault_count: 100,
      catalogue_ref: "e2e@v1",
      share_overrides: null,
    },
    plan: {
      kind: "qa_plan",
      schema_version: 1,
      steps: efforts.map(([technique_id, effort]) => ({ technique_id, effort })),
    },
  });
}

beforeAll(async () => {
  const dataDir = mkdtempSync(join(tmpdir(), "qaplan-e2e-"));
  const bin = process.env.QAPLAN_BIN ?? "qaplan";
  server = spawn(bin, ["serve", "--port", String(PORT), "--data-dir", dataDir], {
    stdio: "ignore",
  });
  await waitForServer();
  const stored = await fetch(`${BASE}/catalogue`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(catalogueDoc),
  });
  expect(stored.ok).toBe(true);
}, 60_000);

afterAll(() => {
  server?.kill();
});

describe("live service", () => {
  it("editing an effort and evaluating shows the API's net value verbatim", async () => {
    const scenario = await createScenario("edit-and-evaluate", [
      ["review", 2],
      ["systest", 3],
    ]);
    const state = new ViewState();
    state.setScenarios([scenario]);
    state.activeId = scenario.scenario_id;

    // the user drags the review effort to 4.5; the draft stays client-side
    state.setDraftEffort(scenario.scenario_id, "review", 4.5);
    const seq = state.beginRequest(scenario.scenario_id);
    const fromClient = await api.evaluate(scenario.scenario_id, state.draftPlanDoc(scenario));
    expect(state.acceptEvaluation(scenario.scenario_id, seq, fromClient, scenario.catalogue_version)).toBe(true);

    // an independent raw request must yield the identical number
    const raw = await fetch(`${BASE}/scenarios/${scenario.scenario_id}/evaluate`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        plan: {
          kind: "qa_plan",
          schema_version: 1,
          steps: [
            { technique_id: "review", effort: 4.5 },
            { technique_id: "systest", effort: 3 },
          ],
        },
      }),
    }).then((r) => r.json());
    expect(fromClient.net).toBe(raw.net);

    // the rendered view carries the raw net verbatim in the tooltip
    const html = renderBreakdown(state.evaluationFor(scenario.scenario_id), "EUR");
    expect(html).toContain(`title="${String(raw.net)}"`);

    // the stored scenario was never mutated by draft evaluation
    const stored = await api.getScenario(scenario.scenario_id);
    expect(stored.plan.steps[0]!.effort).toBe(2);
  }, 30_000);

  it("comparing a scenario with itself shows zero deltas", async () => {
    const scenario = await createScenario("self-compare", [
      ["review", 1],
      ["systest", 2],
    ]);
    const state = new ViewState();
    state.setScenarios([scenario]);
    state.toggleCompare(scenario.scenario_id);
    state.toggleCompare(scenario.scenario_id); // off again
    state.toggleCompare(scenario.scenario_id);

    const comparison = await api.compare([scenario.scenario_id, scenario.scenario_id]);
    for (const delta of comparison.deltas) {
      expect(delta.direct).toBe(0);
      expect(delta.future).toBe(0);
      expect(delta.revenue).toBe(0);
      expect(delta.net).toBe(0);
    }
    const html = renderCompareView(state, comparison);
    expect(html).toContain("(+0.00)");
  }, 30_000);

  it("an applied optimization result re-evaluates to the job's net", async () => {
    const scenario = await createScenario("optimize-apply", [
      ["review", 1],
      ["systest", 1],
    ]);
    const state = new ViewState();
    state.setScenarios([scenario]);
    state.activeId = scenario.scenario_id;

    const result = await api.optimizeAndWait(
      scenario.scenario_id,
      { constraints: [{ variant: "budget", t_max: 8 }], settings: { seed: 2 } },
      { initialMs: 100, timeoutMs: 60_000 },
    );
    expect(result.status).toBe("converged");
    state.setOptimization(scenario.scenario_id, result);

    // apply as a new draft and re-evaluate through the API
    state.setDraft(scenario.scenario_id, result.best_plan.steps);
    const evaluated = await api.evaluate(scenario.scenario_id, state.draftPlanDoc(scenario));
    expect(evaluated.net).toBe(result.objective);
    expect(evaluated.net).toBe(result.best_breakdown.net);
  }, 90_000);

  it("simulation reports agree with evaluation within a few standard errors", async () => {
    const scenario = await createScenario("simulate", [
      ["review", 2],
      ["systest", 2],
    ]);
    const analytic = await api.evaluate(scenario.scenario_id);
    const report = await api.simulateAndWait(
      scenario.scenario_id,
      { trials: 20_000, seed: 5 },
      { initialMs: 100, timeoutMs: 60_000 },
    );
    expect(report.conservation_violations).toBe(0);
    const z = Math.abs(report.revenue.mean - analytic.revenue) / report.revenue.std_error;
    expect(z).toBeLessThan(4);
  }, 90_000);

  it("stale scenario writes are rejected with a 409", async () => {
    const scenario = await createScenario("stale-write", [["review", 1], ["systest", 0]]);
    await api.updateScenario(scenario.scenario_id, { rev: scenario.rev, name: "renamed once" });
    await expect(
      api.updateScenario(scenario.scenario_id, { rev: scenario.rev, name: "stale" }),
    ).rejects.toMatchObject({ status: 409, code: "stale-write" });
  }, 30_000);
});
