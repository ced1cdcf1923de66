import { describe, expect, it } from "vitest";

import { ViewState } from "../src/state.js";
import type { BreakdownDoc, CompareResponse, ScenarioDoc, SensitivityRankingDoc } from "../src/types.js";
import { renderBreakdown, renderCompareView, renderScenarioList, renderSensitivityPanel } from "../src/views.js";

const breakdown: BreakdownDoc = {
  kind: "cost_breakdown",
  direct: 17,
  future: 50,
  revenue: 150,
  net: 133,
  per_technique: { a: { direct: 11, revenue: 100 }, b: { direct: 6, revenue: 50 } },
  per_type: { d1: { direct: 17, future: 50, revenue: 150 } },
};

function scenario(id: string, name: string): ScenarioDoc {
  return {
    kind: "scenario",
    scenario_id: id,
    name,
    catalogue_version: 3,
    profile: {
      kind: "fault_profile",
      schema_version: 1,
      estimated_fault_count: 10,
      catalogue_ref: "c@v3",
      share_overrides: null,
    },
    plan: { kind: "qa_plan", schema_version: 1, steps: [{ technique_id: "a", effort: 1 }] },
    constraints: [],
    breakdown,
    rev: 1,
    created: "",
    modified: "",
  };
}

describe("renderBreakdown", () => {
  it("shows only API numbers, 2 decimals with raw tooltips, tagged with the catalogue version", () => {
    const html = renderBreakdown({ breakdown, catalogueVersion: 3, seq: 1 }, "EUR");
    expect(html).toContain("catalogue v3");
    expect(html).toContain('title="133"');
    expect(html).toContain("133.00");
    expect(html).toContain("17.00");
  });

  it("always fills the exposure line with the revenue and future segments", () => {
    const html = renderBreakdown({ breakdown, catalogueVersion: 3, seq: 1 }, "EUR");
    const widths = [...html.matchAll(/class="seg [a-z]+" style="width:([0-9.]+)%"/g)].map((m) => Number(m[1]));
    expect(widths).toHaveLength(2);
    expect(widths[0]! + widths[1]!).toBeCloseTo(100, 9);
    expect(html).toContain('title="200"'); // exposure = future + revenue
  });
});

describe("renderCompareView", () => {
  it("renders zero deltas for self-comparison", () => {
    const state = new ViewState();
    state.setScenarios([scenario("a", "base")]);
    state.toggleCompare("a");
    state.toggleCompare("a");
    const comparison: CompareResponse = {
      scenarios: [
        { scenario_id: "a", name: "base", catalogue_version: 3, breakdown },
        { scenario_id: "a", name: "base", catalogue_version: 3, breakdown },
      ],
      deltas: [
        { scenario_id: "a", direct: 0, future: 0, revenue: 0, net: 0 },
        { scenario_id: "a", direct: 0, future: 0, revenue: 0, net: 0 },
      ],
    };
    const html = renderCompareView(state, comparison);
    expect(html).toContain("(+0.00)");
    expect(html).not.toContain("(-0.00)");
  });
});

describe("renderSensitivityPanel", () => {
  it("scales tornado bars by swing and flags clamped entries", () => {
    const ranking: SensitivityRankingDoc = {
      kind: "sensitivity_ranking",
      entries: [
        { factor: "pi:d1", net_low: 10, net_high: 50, swing: 40, clamped: false },
        { factor: "setup:a", net_low: 25, net_high: 45, swing: 20, clamped: true },
      ],
    };
    const html = renderSensitivityPanel(ranking, false);
    const widths = [...html.matchAll(/class="tornado-bar" style="width:([0-9.]+)%"/g)].map((m) => Number(m[1]));
    expect(widths).toEqual([100, 50]);
    expect(html).toContain("(clamped)");
  });
});

describe("renderScenarioList", () => {
  it("marks the active scenario and escapes names", () => {
    const state = new ViewState();
    state.setScenarios([scenario("a", "<script>")]);
    state.activeId = "a";
    const html = renderScenarioList(state);
    expect(html).toContain("scenario-row active");
    expect(html).toContain("&lt;script&gt;");
    expect(html).not.toContain("<script>");
  });
});
