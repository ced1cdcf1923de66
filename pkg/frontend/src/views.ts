/**
 * Pure render functions: view state in, HTML string out. Event wiring
 * happens in main.ts via data-action attributes; nothing here computes
 * model figures (the service does), only layout percentages.
 */

import { escapeHtml, fmt2, money, widthPct } from "./format.js";
import type { DraftStep, TaggedEvaluation, ViewState } from "./state.js";
import type {
  CatalogueDoc,
  CompareResponse,
  OptimizationResultDoc,
  ScenarioDoc,
  SensitivityRankingDoc,
  SimulationReportDoc,
} from "./types.js";

export function renderScenarioList(state: ViewState): string {
  const rows = state.scenarios
    .map((s) => {
      const active = s.scenario_id === state.activeId ? " active" : "";
      const checked = state.compareSelection.includes(s.scenario_id) ? " checked" : "";
      return `
      <li class="scenario-row${active}" data-id="${s.scenario_id}">
        <input type="checkbox" class="compare-check" data-action="toggle-compare"
               data-id="${s.scenario_id}" title="select for comparison"${checked}>
        <button class="scenario-name" data-action="select-scenario" data-id="${s.scenario_id}">
          ${escapeHtml(s.name)}
        </button>
        <span class="muted">v${s.catalogue_version} · rev ${s.rev}</span>
        <button data-action="clone-scenario" data-id="${s.scenario_id}" title="clone">⧉</button>
        <button data-action="rename-scenario" data-id="${s.scenario_id}" title="rename">✎</button>
        <button data-action="delete-scenario" data-id="${s.scenario_id}" title="delete">✕</button>
      </li>`;
    })
    .join("");
  return `
    <h2>Scenarios</h2>
    <ul class="scenario-list">${rows}</ul>
    <form class="new-scenario" data-action="create-scenario">
      <input name="name" placeholder="new scenario name" required>
      <input name="faults" type="number" step="any" min="0" value="100" title="estimated fault count">
      <input name="version" type="number" min="1" placeholder="catalogue version (latest)"
             title="catalogue version; empty uses the latest">
      <button type="submit">Create</button>
    </form>`;
}

export function renderPlanEditor(
  scenario: ScenarioDoc,
  draft: DraftStep[],
  catalogue: CatalogueDoc,
  dirty: boolean,
): string {
  const rows = draft
    .map((step) => {
      const max = Math.max(10, step.effort * 2);
      return `
      <tr>
        <td>${escapeHtml(step.technique_id)}</td>
        <td><input type="range" min="0" max="${max}" step="0.1" value="${step.effort}"
                   data-action="draft-effort" data-technique="${step.technique_id}"></td>
        <td><input type="number" min="0" step="any" value="${step.effort}" class="effort-input"
                   data-action="draft-effort" data-technique="${step.technique_id}"></td>
      </tr>`;
    })
    .join("");
  const saveState = dirty ? "" : " disabled";
  return `
    <h2>Plan <span class="muted">(${escapeHtml(catalogue.effort_unit)}, order = application order)</span></h2>
    <table class="plan-editor"><tbody>${rows}</tbody></table>
    <div class="row">
      <button data-action="save-draft"${saveState}>Save plan</button>
      <button data-action="discard-draft"${saveState}>Discard draft</button>
      <span class="muted">${dirty ? "unsaved draft — evaluations reflect the draft" : "in sync with server"}</span>
    </div>`;
}

export function renderBreakdown(evaluation: TaggedEvaluation | null, currency: string): string {
  if (!evaluation) return `<h2>Breakdown</h2><p class="muted">no evaluation yet</p>`;
  const b = evaluation.breakdown;
  const exposure = b.future + b.revenue;
  const revenuePct = widthPct(b.revenue, exposure);
  const futurePct = widthPct(b.future, exposure);
  const typeRows = Object.entries(b.per_type)
    .map(
      ([typeId, c]) => `
      <tr><td>${escapeHtml(typeId)}</td><td>${money(c.direct)}</td><td>${money(c.future)}</td>
          <td>${money(c.revenue)}</td></tr>`,
    )
    .join("");
  const techRows = Object.entries(b.per_technique)
    .map(
      ([techId, c]) => `
      <tr><td>${escapeHtml(techId)}</td><td>${money(c.direct)}</td><td>${money(c.revenue)}</td></tr>`,
    )
    .join("");
  return `
    <h2>Breakdown <span class="muted">(catalogue v${evaluation.catalogueVersion}, ${escapeHtml(currency)})</span></h2>
    <div class="net-figure">net ${money(b.net)}</div>
    <div class="totals">
      direct ${money(b.direct)} · future ${money(b.future)} · revenue ${money(b.revenue)}
    </div>
    <div class="exposure-line">
      field exposure (future + revenue) ${money(exposure)}
      <div class="stacked-bar" title="future + revenue always fill the exposure line">
        <div class="seg revenue" style="width:${revenuePct}%" title="revenue ${String(b.revenue)}"></div>
        <div class="seg future" style="width:${futurePct}%" title="future ${String(b.future)}"></div>
      </div>
    </div>
    <h3>Per technique <span class="muted">(direct / revenue)</span></h3>
    <table class="data"><tbody>${techRows}</tbody></table>
    <h3>Per defect type <span class="muted">(direct / future / revenue)</span></h3>
    <table class="data"><tbody>${typeRows}</tbody></table>`;
}

export function renderOptimizePanel(
  scenario: ScenarioDoc,
  result: OptimizationResultDoc | null,
  running: boolean,
): string {
  const budget = scenario.constraints.find((c) => c.variant === "budget");
  const budgetValue = budget && budget.variant === "budget" ? String(budget.t_max) : "";
  const techRows = scenario.plan.steps
    .map((step) => {
      const fon = scenario.constraints.find(
        (c) => c.variant === "fixed_or_none" && c.technique_id === step.technique_id,
      );
      const bounds = scenario.constraints.find(
        (c) => c.variant === "bounds" && c.technique_id === step.technique_id,
      );
      const fonValue = fon && fon.variant === "fixed_or_none" ? String(fon.fixed_effort) : "";
      const minValue = bounds && bounds.variant === "bounds" ? String(bounds.min) : "";
      const maxValue = bounds && bounds.variant === "bounds" ? String(bounds.max) : "";
      return `
      <tr data-technique="${step.technique_id}">
        <td>${escapeHtml(step.technique_id)}</td>
        <td><input type="number" step="any" min="0" class="con-fon" placeholder="—" value="${fonValue}"
                   title="fixed-or-none effort (run at exactly this effort or skip)"></td>
        <td><input type="number" step="any" min="0" class="con-min" placeholder="min" value="${minValue}"></td>
        <td><input type="number" step="any" min="0" class="con-max" placeholder="max" value="${maxValue}"></td>
      </tr>`;
    })
    .join("");
  let resultHtml = "";
  if (running) {
    resultHtml = `<p class="muted job-progress">optimization job running…</p>`;
  } else if (result) {
    const steps = result.best_plan.steps
      .map((s) => `<li>${escapeHtml(s.technique_id)}: <span title="${String(s.effort)}">${fmt2(s.effort)}</span></li>`)
      .join("");
    resultHtml = `
      <div class="opt-result" data-status="${result.status}">
        <p>status <b>${result.status}</b>, net ${money(result.objective)}</p>
        <ul>${steps}</ul>
        <button data-action="apply-optimization">Apply as draft</button>
      </div>`;
  }
  return `
    <h2>Optimize</h2>
    <div class="row">
      <label>budget <input type="number" step="any" min="0" id="opt-budget" value="${budgetValue}"></label>
    </div>
    <table class="constraints">
      <thead><tr><th>technique</th><th>fixed-or-none</th><th>min</th><th>max</th></tr></thead>
      <tbody>${techRows}</tbody>
    </table>
    <button data-action="run-optimize"${running ? " disabled" : ""}>Run optimization</button>
    ${resultHtml}`;
}

export function renderSimulatePanel(
  report: SimulationReportDoc | null,
  analytic: TaggedEvaluation | null,
  running: boolean,
): string {
  let body = "";
  if (running) {
    body = `<p class="muted job-progress">simulation job running…</p>`;
  } else if (report) {
    const components: ("direct" | "future" | "revenue" | "net")[] = ["direct", "future", "revenue", "net"];
    const rows = components
      .map((name) => {
        const stats = report[name];
        const analyticCell = analytic ? money(analytic.breakdown[name]) : `<span class="muted">—</span>`;
        const spread = stats.std_error;
        const barWidth = widthPct(spread, Math.abs(stats.mean) || 1);
        return `
        <tr>
          <td>${name}</td>
          <td>${analyticCell}</td>
          <td>${money(stats.mean)}</td>
          <td>${money(stats.std_error)}
            <div class="error-bar" title="std error ${String(stats.std_error)}">
              <div class="whisker" style="width:${Math.max(1, barWidth)}%"></div>
            </div>
          </td>
        </tr>`;
      })
      .join("");
    body = `
      <p class="muted">${report.trials} trials (${report.fault_count_mode} population),
         ${report.conservation_violations} conservation violations</p>
      <table class="data">
        <thead><tr><th>component</th><th>analytic</th><th>sampled mean</th><th>std error</th></tr></thead>
        <tbody>${rows}</tbody>
      </table>`;
  }
  return `
    <h2>Simulate</h2>
    <div class="row">
      <label>trials <input id="sim-trials" type="number" min="1" value="20000"></label>
      <label>seed <input id="sim-seed" type="number" min="0" value="42"></label>
      <label><input id="sim-poisson" type="checkbox"> Poisson population</label>
      <button data-action="run-simulate"${running ? " disabled" : ""}>Run simulation</button>
    </div>
    ${body}`;
}

export function renderSensitivityPanel(ranking: SensitivityRankingDoc | null, running: boolean): string {
  let body = "";
  if (running) {
    body = `<p class="muted job-progress">sensitivity running…</p>`;
  } else if (ranking) {
    const maxSwing = ranking.entries.reduce((acc, e) => Math.max(acc, e.swing), 0);
    const rows = ranking.entries
      .map((e) => {
        const width = widthPct(e.swing, maxSwing || 1);
        const clamped = e.clamped ? ` <span class="muted">(clamped)</span>` : "";
        return `
        <div class="tornado-row">
          <span class="tornado-label">${escapeHtml(e.factor)}${clamped}</span>
          <div class="tornado-bar" style="width:${width}%"
               title="net_low ${String(e.net_low)} · net_high ${String(e.net_high)}"></div>
          <span>${money(e.swing)}</span>
        </div>`;
      })
      .join("");
    body = `<div class="tornado">${rows}</div>`;
  }
  return `
    <h2>Sensitivity</h2>
    <div class="row">
      <label>range ±<input id="sens-range" type="number" min="0" max="1" step="0.05" value="0.2"></label>
      <button data-action="run-sensitivity"${running ? " disabled" : ""}>Rank factors</button>
    </div>
    ${body}`;
}

export function renderCompareView(state: ViewState, comparison: CompareResponse | null): string {
  const hint =
    state.compareSelection.length < 2
      ? `<p class="muted">select 2–4 scenarios in the list to compare (deltas vs the first)</p>`
      : "";
  let table = "";
  if (comparison) {
    const header = comparison.scenarios
      .map((s) => `<th>${escapeHtml(s.name)} <span class="muted">v${s.catalogue_version}</span></th>`)
      .join("");
    const componentRow = (label: "direct" | "future" | "revenue" | "net") => {
      const cells = comparison.scenarios
        .map((s, i) => {
          const delta = comparison.deltas[i]![label];
          const deltaHtml =
            i === 0 ? "" : ` <span class="delta" title="${String(delta)}">(${delta >= 0 ? "+" : ""}${fmt2(delta)})</span>`;
          return `<td>${money(s.breakdown[label])}${deltaHtml}</td>`;
        })
        .join("");
      return `<tr><td>${label}</td>${cells}</tr>`;
    };
    table = `
      <table class="data compare">
        <thead><tr><th></th>${header}</tr></thead>
        <tbody>
          ${componentRow("direct")}
          ${componentRow("future")}
          ${componentRow("revenue")}
          ${componentRow("net")}
        </tbody>
      </table>`;
  }
  return `
    <h2>Compare</h2>
    ${hint}
    <button data-action="run-compare"${state.compareSelection.length < 2 ? " disabled" : ""}>Compare selected</button>
    ${table}`;
}

export function renderError(message: string | null): string {
  if (!message) return "";
  return `<div class="error-banner">${escapeHtml(message)}</div>`;
}
