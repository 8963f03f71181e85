/** Typed client for the session API (/api/v1). */

export interface MoranPayload {
  i: number;
  expected: number;
  z: number;
  p: number;
  n_used: number;
}

export interface ScanRow {
  group: Record<string, string>;
  label: string;
  coverage: number;
  moran_ols: MoranPayload | null;
  moran_sdm: MoranPayload | null;
  r2_ols: number | null;
  r2_sdm: number | null;
  error: string | null;
}

export interface ScanPayload {
  rows: ScanRow[];
  excluded: { group: Record<string, string>; coverage: number }[];
  behavior: string;
  attrs: string[];
}

export interface CorrelationPayload {
  variables: string[];
  matrix: (number | null)[][];
  flagged: [string, string, number][];
  undefined: string[];
}

export interface ProjectionPayload {
  n: number;
  k: number;
  leaf_order: number[];
  unit_ids: string[];
  labels_in_order: number[];
  segments: [number, number, number][];
  variables: Record<string, (number | null)[]>;
}

export interface GlyphEntry {
  cluster: number;
  size: number;
  radar: { axes: string[]; values: number[] };
  spillover: number[];
  representative: [number, number];
}

export interface GlyphPayload {
  clusters: GlyphEntry[];
  directions: string[];
}

export interface HistogramPayload {
  variables: Record<string, { bin_edges: number[]; clusters: Record<string, number[]> }>;
  bins: number;
}

export interface Individual {
  [attr: string]: string | boolean;
}

export interface ParallelSetsPayload {
  cluster: number;
  m: number;
  seed: number;
  attributes: string[];
  behavior: string;
  individuals: Individual[];
}

export interface GeometryPayload {
  type: "FeatureCollection";
  features: {
    type: "Feature";
    properties: { unit_id: string; cluster?: number };
    geometry: { type: string; coordinates: unknown };
  }[];
}

export interface ChoroplethPayload {
  variable: string;
  unit_ids: string[];
  values: (number | null)[];
  normalized: (number | null)[];
}

export interface JobPayload {
  job_id: string;
  stage: string;
  status: "running" | "done" | "failed";
  error: string | null;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public payload: unknown,
  ) {
    super(`API error ${status}: ${JSON.stringify(payload)}`);
  }
}

export class ApiClient {
  constructor(
    private base: string,
    private fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.base}/api/v1${path}`, init);
    const body = await response.json();
    if (!response.ok) throw new ApiError(response.status, body);
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  createSession(dataset: string): Promise<{ session_id: string; n_units: number }> {
    return this.post("/sessions", { dataset });
  }

  variables(sid: string): Promise<{ variables: string[]; demographic: string[]; behavior: string }> {
    return this.request(`/sessions/${sid}/variables`);
  }

  correlation(sid: string, vars?: string[]): Promise<CorrelationPayload> {
    const query = vars ? `?vars=${vars.join(",")}` : "";
    return this.request(`/sessions/${sid}/correlation${query}`);
  }

  setSpec(sid: string, spec: Record<string, unknown>): Promise<unknown> {
    return this.post(`/sessions/${sid}/spec`, spec);
  }

  groupScan(sid: string, attrs: string[], background = true): Promise<{ job: JobPayload }> {
    return this.post(`/sessions/${sid}/group-scan`, { attrs, background });
  }

  scan(sid: string): Promise<ScanPayload> {
    return this.request(`/sessions/${sid}/scan`);
  }

  selectGroup(sid: string, selectors: Record<string, string>): Promise<unknown> {
    return this.post(`/sessions/${sid}/select-group`, { selectors });
  }

  fitLocal(sid: string, bandwidth: number | null = null, background = true): Promise<{ job: JobPayload }> {
    return this.post(`/sessions/${sid}/fit-local`, { bandwidth, background });
  }

  regionalize(sid: string, k: number): Promise<{ k: number; sizes: number[] }> {
    return this.post(`/sessions/${sid}/regionalize`, { k });
  }

  job(sid: string, jobId: string): Promise<JobPayload> {
    return this.request(`/sessions/${sid}/jobs/${jobId}`);
  }

  projection(sid: string): Promise<ProjectionPayload> {
    return this.request(`/sessions/${sid}/projection`);
  }

  glyphs(sid: string): Promise<GlyphPayload> {
    return this.request(`/sessions/${sid}/glyphs`);
  }

  histograms(sid: string): Promise<HistogramPayload> {
    return this.request(`/sessions/${sid}/cluster-histograms`);
  }

  parallelSets(sid: string, cluster: number, m: number, seed: number): Promise<ParallelSetsPayload> {
    return this.request(`/sessions/${sid}/parallel-sets-sample?cluster=${cluster}&m=${m}&seed=${seed}`);
  }

  geometry(sid: string): Promise<GeometryPayload> {
    return this.request(`/sessions/${sid}/geometry`);
  }

  choropleth(sid: string, variable: string): Promise<ChoroplethPayload> {
    return this.request(`/sessions/${sid}/choropleth?variable=${encodeURIComponent(variable)}`);
  }

  representative(sid: string, cluster: number): Promise<{ cluster: number; coordinate: [number, number] }> {
    return this.request(`/sessions/${sid}/clusters/${cluster}/representative`);
  }

  async waitForJob(sid: string, jobId: string, intervalMs = 150, timeoutMs = 120_000): Promise<void> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const state = await this.job(sid, jobId);
      if (state.status === "done") return;
      if (state.status === "failed") throw new Error(`job ${jobId} failed: ${state.error}`);
      if (Date.now() > deadline) throw new Error(`job ${jobId} timed out`);
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }
}
