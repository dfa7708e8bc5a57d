// Typed client for the fairthresh HTTP API. The dashboard performs no metric
// arithmetic of its own: every number it shows comes from these responses.

export interface CountsDoc {
  tp: number;
  fp: number;
  tn: number;
  fn: number;
}

export interface SubgroupMetrics {
  threshold: number;
  size: number;
  utility: number | null;
  counts: CountsDoc;
}

export interface WhatifResponse {
  version: number;
  utility: string;
  per_subgroup: Record<string, SubgroupMetrics>;
  overall: { utility: number | null; counts: CountsDoc };
  dominant: string | null;
  discrimination: Record<string, number | null>;
}

export interface DiffDoc {
  net_diff: number;
  pct_diff: number | null;
}

export interface ReportDoc {
  schema_version: string;
  utility: string;
  mode: string;
  aggregate_objective: string;
  tau_base: number;
  dominant: string;
  dominant_tie_broken: boolean;
  subgroup_sizes: Record<string, number>;
  baseline: { overall: number; per_subgroup: Record<string, number> };
  adjusted: { overall: number; per_subgroup: Record<string, number> };
  thresholds: { tau_base: number; per_subgroup: Record<string, number> };
  discrimination: Record<
    string,
    { before: number; after: number; net_diff: number; pct_diff: number | null }
  >;
  diffs: { overall: DiffDoc; per_subgroup: Record<string, DiffDoc> };
  validation: { feasible: boolean; checks: unknown[] };
  footnote: string;
}

export interface SessionSummary {
  session: string;
  instances: number;
  version: number;
  subgroups: Record<string, number> | null;
  chosen_k: number | null;
  has_report: boolean;
}

export interface PartitionSummary {
  subgroups: Record<string, number>;
  chosen_k: number | null;
  version: number;
}

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const detail =
      typeof (body as { detail?: unknown }).detail === "string"
        ? (body as { detail: string }).detail
        : `request failed with status ${response.status}`;
    throw new ApiError(response.status, detail);
  }
  return body as T;
}

export class Client {
  constructor(private baseUrl: string) {}

  createSession(csv: string, manifest: Record<string, unknown>) {
    return request<{ session: string; instances: number }>(`${this.baseUrl}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ csv, manifest }),
    });
  }

  describe(session: string) {
    return request<SessionSummary>(`${this.baseUrl}/sessions/${session}`);
  }

  setPartition(session: string, spec: Record<string, unknown>) {
    return request<PartitionSummary>(`${this.baseUrl}/sessions/${session}/partition`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(spec),
    });
  }

  whatif(session: string, thresholds: Record<string, number>, utility = "ppv") {
    const pairs = Object.entries(thresholds)
      .map(([subgroup, tau]) => `${subgroup}:${tau}`)
      .join(",");
    const params = new URLSearchParams({ thresholds: pairs, utility });
    return request<WhatifResponse>(
      `${this.baseUrl}/sessions/${session}/whatif?${params.toString()}`,
    );
  }

  optimize(session: string, config: Record<string, unknown>) {
    return request<ReportDoc>(`${this.baseUrl}/sessions/${session}/optimize`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(config),
    });
  }
}
