/**
 * Controller: wires the API client, view state, and DOM panels.
 * All interactions re-render from state; every displayed figure comes
 * from a service response (drafts are priced via evaluate overrides,
 * never computed client-side).
 */

import { ApiClient, ApiRequestError, resolveApiBase } from "./api.js";
import { debounce } from "./format.js";
import { ViewState } from "./state.js";
import type { CatalogueDoc, CompareResponse, ConstraintDoc } from "./types.js";
import {
  renderBreakdown,
  renderCompareView,
  renderError,
  renderOptimizePanel,
  renderPlanEditor,
  renderScenarioList,
  renderSensitivityPanel,
  renderSimulatePanel,
} from "./views.js";

const api = new ApiClient(resolveApiBase());
const state = new ViewState();
let catalogue: CatalogueDoc | null = null;
let lastError: string | null = null;
let comparison: CompareResponse | null = null;
let optimizeRunning = false;
let simulateRunning = false;
let sensitivityRunning = false;

function byId(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing container #${id}`);
  return el;
}

function renderAll(): void {
  byId("error").innerHTML = renderError(lastError);
  byId("scenario-list").innerHTML = renderScenarioList(state);
  const scenario = state.activeScenario();
  if (scenario && catalogue) {
    byId("plan-editor").innerHTML = renderPlanEditor(
      scenario,
      state.draftFor(scenario),
      catalogue,
      state.draftIsDirty(scenario),
    );
    byId("breakdown").innerHTML = renderBreakdown(
      state.evaluationFor(scenario.scenario_id),
      catalogue.currency,
    );
    byId("optimize-panel").innerHTML = renderOptimizePanel(
      scenario,
      state.optimizationFor(scenario.scenario_id),
      optimizeRunning,
    );
    byId("simulate-panel").innerHTML = renderSimulatePanel(
      state.simulationFor(scenario.scenario_id),
      state.evaluationFor(scenario.scenario_id),
      simulateRunning,
    );
    byId("sensitivity-panel").innerHTML = renderSensitivityPanel(
      state.sensitivityFor(scenario.scenario_id),
      sensitivityRunning,
    );
  } else {
    for (const id of ["plan-editor", "breakdown", "optimize-panel", "simulate-panel", "sensitivity-panel"]) {
      byId(id).innerHTML = `<p class="muted">select or create a scenario</p>`;
    }
  }
  byId("compare-view").innerHTML = renderCompareView(state, comparison);
}

function fail(error: unknown): void {
  lastError = error instanceof ApiRequestError ? `${error.code}: ${error.message}` : String(error);
  renderAll();
}

async function evaluateActiveDraft(): Promise<void> {
  const scenario = state.activeScenario();
  if (!scenario) return;
  const sid = scenario.scenario_id;
  const seq = state.beginRequest(sid);
  try {
    const breakdown = await api.evaluate(sid, state.draftPlanDoc(scenario));
    if (state.acceptEvaluation(sid, seq, breakdown, scenario.catalogue_version)) renderAll();
  } catch (error) {
    fail(error);
  }
}

const evaluateDebounced = debounce(() => void evaluateActiveDraft(), 300);

async function selectScenario(id: string): Promise<void> {
  state.activeId = id;
  const scenario = state.activeScenario();
  if (scenario && !state.evaluationFor(id)) {
    // seed the display from the server-cached breakdown of the stored plan
    const seq = state.beginRequest(id);
    state.acceptEvaluation(id, seq, scenario.breakdown, scenario.catalogue_version);
  }
  renderAll();
}

async function reloadScenarios(): Promise<void> {
  const { scenarios } = await api.listScenarios();
  state.setScenarios(scenarios);
  if (state.activeId === null && scenarios.length > 0) await selectScenario(scenarios[0]!.scenario_id);
  renderAll();
}

function collectConstraints(): ConstraintDoc[] {
  const constraints: ConstraintDoc[] = [];
  const budgetInput = document.getElementById("opt-budget") as HTMLInputElement | null;
  if (budgetInput && budgetInput.value !== "") {
    constraints.push({ variant: "budget", t_max: Number(budgetInput.value) });
  }
  for (const row of document.querySelectorAll<HTMLTableRowElement>(".constraints tbody tr")) {
    const techniqueId = row.dataset.technique ?? "";
    const fon = row.querySelector<HTMLInputElement>(".con-fon");
    const min = row.querySelector<HTMLInputElement>(".con-min");
    const max = row.querySelector<HTMLInputElement>(".con-max");
    if (fon && fon.value !== "") {
      constraints.push({ variant: "fixed_or_none", technique_id: techniqueId, fixed_effort: Number(fon.value) });
    }
    if (min && max && (min.value !== "" || max.value !== "")) {
      constraints.push({
        variant: "bounds",
        technique_id: techniqueId,
        min: min.value === "" ? 0 : Number(min.value),
        max: max.value === "" ? Number.MAX_SAFE_INTEGER : Number(max.value),
      });
    }
  }
  return constraints;
}

async function handleAction(action: string, target: HTMLElement): Promise<void> {
  lastError = null;
  const scenario = state.activeScenario();
  switch (action) {
    case "select-scenario":
      await selectScenario(target.dataset.id!);
      break;
    case "toggle-compare":
      state.toggleCompare(target.dataset.id!);
      comparison = null;
      renderAll();
      break;
    case "clone-scenario": {
      const source = state.scenarios.find((s) => s.scenario_id === target.dataset.id);
      if (!source) return;
      const created = await api.createScenario({
        name: `${source.name} (copy)`,
        profile: source.profile,
        plan: source.plan,
        constraints: source.constraints,
        catalogue_version: source.catalogue_version,
      });
      state.upsertScenario(created);
      await selectScenario(created.scenario_id);
      break;
    }
    case "rename-scenario": {
      const doc = state.scenarios.find((s) => s.scenario_id === target.dataset.id);
      if (!doc) return;
      const name = window.prompt("new scenario name", doc.name);
      if (!name) return;
      const updated = await api.updateScenario(doc.scenario_id, { rev: doc.rev, name });
      state.upsertScenario(updated);
      renderAll();
      break;
    }
    case "delete-scenario":
      await api.deleteScenario(target.dataset.id!);
      await reloadScenarios();
      break;
    case "save-draft": {
      if (!scenario) return;
      const updated = await api.updateScenario(scenario.scenario_id, {
        rev: scenario.rev,
        plan: state.draftPlanDoc(scenario),
      });
      state.upsertScenario(updated);
      state.discardDraft(updated.scenario_id);
      const seq = state.beginRequest(updated.scenario_id);
      state.acceptEvaluation(updated.scenario_id, seq, updated.breakdown, updated.catalogue_version);
      renderAll();
      break;
    }
    case "discard-draft":
      if (!scenario) return;
      state.discardDraft(scenario.scenario_id);
      renderAll();
      void evaluateActiveDraft();
      break;
    case "apply-optimization": {
      if (!scenario) return;
      const result = state.optimizationFor(scenario.scenario_id);
      if (!result) return;
      state.setDraft(scenario.scenario_id, result.best_plan.steps);
      renderAll();
      await evaluateActiveDraft();
      break;
    }
    case "run-optimize": {
      if (!scenario) return;
      optimizeRunning = true;
      renderAll();
      try {
        const result = await api.optimizeAndWait(scenario.scenario_id, {
          constraints: collectConstraints(),
        });
        state.setOptimization(scenario.scenario_id, result);
      } finally {
        optimizeRunning = false;
      }
      renderAll();
      break;
    }
    case "run-simulate": {
      if (!scenario) return;
      const trials = Number((document.getElementById("sim-trials") as HTMLInputElement).value);
      const seed = Number((document.getElementById("sim-seed") as HTMLInputElement).value);
      const poisson = (document.getElementById("sim-poisson") as HTMLInputElement).checked;
      simulateRunning = true;
      renderAll();
      try {
        const report = await api.simulateAndWait(scenario.scenario_id, {
          trials,
          seed,
          fault_count_mode: poisson ? "poisson" : "fixed",
          plan: state.draftPlanDoc(scenario),
        });
        state.setSimulation(scenario.scenario_id, report);
      } finally {
        simulateRunning = false;
      }
      renderAll();
      break;
    }
    case "run-sensitivity": {
      if (!scenario) return;
      const range = Number((document.getElementById("sens-range") as HTMLInputElement).value);
      sensitivityRunning = true;
      renderAll();
      try {
        const ranking = await api.sensitivity(scenario.scenario_id, {
          range,
          plan: state.draftPlanDoc(scenario),
        });
        state.setSensitivity(scenario.scenario_id, ranking);
      } finally {
        sensitivityRunning = false;
      }
      renderAll();
      break;
    }
    case "run-compare":
      comparison = await api.compare(state.compareSelection);
      renderAll();
      break;
    default:
      break;
  }
}

function wireEvents(): void {
  document.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (!target || target.dataset.action === "draft-effort" || target.dataset.action === "create-scenario") return;
    event.preventDefault();
    void handleAction(target.dataset.action!, target).catch(fail);
  });

  document.addEventListener("input", (event) => {
    const target = event.target as HTMLInputElement;
    if (target.dataset.action !== "draft-effort") return;
    const scenario = state.activeScenario();
    if (!scenario) return;
    const effort = Number(target.value);
    if (!Number.isFinite(effort) || effort < 0) return;
    state.setDraftEffort(scenario.scenario_id, target.dataset.technique!, effort);
    // keep slider and number input in sync without a full re-render
    const row = target.closest("tr");
    row?.querySelectorAll<HTMLInputElement>("[data-action=draft-effort]").forEach((input) => {
      if (input !== target) input.value = target.value;
    });
    evaluateDebounced();
  });

  document.addEventListener("submit", (event) => {
    const form = event.target as HTMLFormElement;
    if (form.dataset.action !== "create-scenario") return;
    event.preventDefault();
    const data = new FormData(form);
    const name = String(data.get("name") ?? "").trim();
    const faults = Number(data.get("faults") ?? 0);
    const versionEntry = String(data.get("version") ?? "").trim();
    if (!name || !catalogue) return;
    const version = versionEntry === "" ? catalogue.version : Number(versionEntry);
    const plan = {
      kind: "qa_plan" as const,
      schema_version: 1,
      steps: catalogue.techniques.map((t) => ({ technique_id: t.id, effort: 0 })),
    };
    const profile = {
      kind: "fault_profile" as const,
      schema_version: 1,
      estimated_fault_count: faults,
      catalogue_ref: `${catalogue.catalogue_id}@v${version}`,
      share_overrides: null,
    };
    api
      .createScenario({ name, profile, plan, catalogue_version: version })
      .then(async (created) => {
        state.upsertScenario(created);
        await selectScenario(created.scenario_id);
      })
      .catch(fail);
  });
}

async function bootstrap(): Promise<void> {
  try {
    catalogue = await api.getCatalogue();
    await reloadScenarios();
  } catch (error) {
    fail(error);
    return;
  }
  renderAll();
}

if (typeof document !== "undefined" && document.getElementById("scenario-list")) {
  wireEvents();
  void bootstrap();
}
