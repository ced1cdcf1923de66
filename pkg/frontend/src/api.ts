/**
 * Typed client for the qaplan service. All numbers displayed anywhere in
 * the UI originate from these responses.
 */

import type {
  BreakdownDoc,
  CatalogueDoc,
  CompareResponse,
  ConstraintDoc,
  JobDoc,
  OptimizationResultDoc,
  PlanDoc,
  ProfileDoc,
  ScenarioDoc,
  SensitivityRankingDoc,
  SimulationReportDoc,
} from "./types.js";

export class ApiRequestError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export interface PollOptions {
  initialMs?: number;
  factor?: number;
  maxMs?: number;
  timeoutMs?: number;
}

export class ApiClient {
  constructor(public baseUrl: string) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body !== undefined ? { "content-type": "application/json" } : undefined,
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    const text = await response.text();
    const payload = text ? JSON.parse(text) : null;
    if (!response.ok) {
      const code = payload?.code ?? "internal";
      const message = payload?.message ?? `HTTP ${response.status}`;
      throw new ApiRequestError(response.status, code, message);
    }
    return payload as T;
  }

  getCatalogue(version?: number): Promise<CatalogueDoc> {
    const query = version !== undefined ? `?version=${version}` : "";
    return this.request("GET", `/catalogue${query}`);
  }

  listScenarios(): Promise<{ scenarios: ScenarioDoc[] }> {
    return this.request("GET", "/scenarios");
  }

  getScenario(id: string): Promise<ScenarioDoc> {
    return this.request("GET", `/scenarios/${id}`);
  }

  createScenario(body: {
    name: string;
    profile: ProfileDoc;
    plan: PlanDoc;
    constraints?: ConstraintDoc[];
    catalogue_version?: number;
  }): Promise<ScenarioDoc> {
    return this.request("POST", "/scenarios", body);
  }

  updateScenario(id: string, body: Record<string, unknown> & { rev: number }): Promise<ScenarioDoc> {
    return this.request("PUT", `/scenarios/${id}`, body);
  }

  deleteScenario(id: string): Promise<{ deleted: string }> {
    return this.request("DELETE", `/scenarios/${id}`);
  }

  /** Evaluate the stored plan, or a draft override without saving it. */
  evaluate(id: string, draftPlan?: PlanDoc): Promise<BreakdownDoc> {
    return this.request("POST", `/scenarios/${id}/evaluate`, draftPlan ? { plan: draftPlan } : {});
  }

  startOptimize(
    id: string,
    body: { settings?: Record<string, unknown>; constraints?: ConstraintDoc[] },
  ): Promise<{ job_id: string }> {
    return this.request("POST", `/scenarios/${id}/optimize`, body);
  }

  startSimulate(
    id: string,
    body: { trials: number; seed: number; fault_count_mode?: string; plan?: PlanDoc },
  ): Promise<{ job_id: string }> {
    return this.request("POST", `/scenarios/${id}/simulate`, body);
  }

  sensitivity(
    id: string,
    body: { range: number; factors?: string[]; plan?: PlanDoc },
  ): Promise<SensitivityRankingDoc> {
    return this.request("POST", `/scenarios/${id}/sensitivity`, body);
  }

  compare(ids: string[]): Promise<CompareResponse> {
    return this.request("POST", "/scenarios/compare", { ids });
  }

  getJob(jobId: string): Promise<JobDoc> {
    return this.request("GET", `/jobs/${jobId}`);
  }

  /**
   * Poll a job until it leaves "running": 500 ms cadence with 1.5x backoff
   * capped at 5 s. Resolves with the job document; rejects on job failure
   * or timeout.
   */
  async pollJob(jobId: string, options: PollOptions = {}, onTick?: (job: JobDoc) => void): Promise<JobDoc> {
    const initial = options.initialMs ?? 500;
    const factor = options.factor ?? 1.5;
    const max = options.maxMs ?? 5000;
    const deadline = Date.now() + (options.timeoutMs ?? 120_000);
    let delay = initial;
    for (;;) {
      const job = await this.getJob(jobId);
      onTick?.(job);
      if (job.status === "done") return job;
      if (job.status === "failed") {
        throw new ApiRequestError(500, job.error?.code ?? "internal", job.error?.message ?? "job failed");
      }
      if (Date.now() > deadline) throw new ApiRequestError(504, "timeout", `job ${jobId} timed out`);
      await new Promise((resolve) => setTimeout(resolve, delay));
      delay = Math.min(max, delay * factor);
    }
  }

  optimizeAndWait(
    id: string,
    body: { settings?: Record<string, unknown>; constraints?: ConstraintDoc[] },
    options?: PollOptions,
    onTick?: (job: JobDoc) => void,
  ): Promise<OptimizationResultDoc> {
    return this.startOptimize(id, body)
      .then(({ job_id }) => this.pollJob(job_id, options, onTick))
      .then((job) => job.result as OptimizationResultDoc);
  }

  simulateAndWait(
    id: string,
    body: { trials: number; seed: number; fault_count_mode?: string; plan?: PlanDoc },
    options?: PollOptions,
    onTick?: (job: JobDoc) => void,
  ): Promise<SimulationReportDoc> {
    return this.startSimulate(id, body)
      .then(({ job_id }) => this.pollJob(job_id, options, onTick))
      .then((job) => job.result as SimulationReportDoc);
  }
}

/** API base URL resolution: global override, then saved setting, then same-origin default. */
export function resolveApiBase(): string {
  const anyWindow = globalThis as { QAPLAN_API?: string; localStorage?: Storage; location?: Location };
  if (anyWindow.QAPLAN_API) return anyWindow.QAPLAN_API;
  const saved = anyWindow.localStorage?.getItem("qaplan-api-base");
  if (saved) return saved;
  if (anyWindow.location && anyWindow.location.protocol.startsWith("http")) {
    return anyWindow.location.origin;
  }
  return "http://127.0.0.1:8000";
}
