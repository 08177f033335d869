// Typed client for the session service HTTP+JSON API. All console state
// changes round-trip through these calls; nothing is derived locally.

export interface DatasetInfo {
  name: string;
  train_size: number;
  test_size: number;
  boundary: number;
  baseline_f1: number | null;
}

export interface SessionConfig {
  stop_at: number;
  batch_size?: number;
  warmup?: string;
  hot?: string;
  classifier?: string;
  seed?: number;
  eval_every?: number;
}

export interface SessionInfo {
  session_id: string;
  dataset: string;
  status: "AwaitingLabels" | "Training" | "Finished";
  phase: "initial" | "warm_up" | "hot";
  labeled_pool_size: number;
  pending_count: number;
  config: SessionConfig;
}

export interface FeatureEntry {
  feature: number;
  value: number;
}

export interface BatchItem {
  tx_id: number;
  time_step: number | null;
  model_score: number | null;
  anomaly_score: number | null;
  feature_summary: FeatureEntry[];
}

export interface BatchBody {
  session_id: string;
  phase: string;
  items: BatchItem[];
}

export interface MetricPoint {
  x: number;
  f1: number;
  precision: number;
  recall: number;
  degenerate: boolean;
}

export interface PhaseAnnotation {
  pool_size: number;
  phase: string;
}

export interface MetricsBody {
  session_id: string;
  series: { x_meaning: string; points: MetricPoint[] };
  annotations: PhaseAnnotation[];
  baseline_f1: number | null;
  status: string;
}

export interface SubmitResult {
  status: string;
  labeled_pool_size: number;
  phase: string;
  latest_metric: MetricPoint | null;
}

export interface ErrorDetails {
  missing?: number[];
  extra?: number[];
  [key: string]: unknown;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public details: ErrorDetails = {},
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function asApiError(response: Response): Promise<ApiError> {
  let code = "unknown";
  let message = response.statusText;
  let details: ErrorDetails = {};
  try {
    const body = await response.json();
    code = body.code ?? code;
    message = body.message ?? message;
    details = body.details ?? {};
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, code, message, details);
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.base + path, init);
    if (!response.ok) {
      throw await asApiError(response);
    }
    return (await response.json()) as T;
  }

  listDatasets(): Promise<{ datasets: DatasetInfo[] }> {
    return this.request("/api/datasets");
  }

  createSession(dataset: string, config: SessionConfig): Promise<SessionInfo> {
    return this.request("/api/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ dataset, config }),
    });
  }

  getSession(sessionId: string): Promise<SessionInfo> {
    return this.request(`/api/sessions/${sessionId}`);
  }

  getBatch(sessionId: string): Promise<BatchBody> {
    return this.request(`/api/sessions/${sessionId}/batch`);
  }

  submitLabels(
    sessionId: string,
    labels: Record<string, number>,
  ): Promise<SubmitResult> {
    return this.request(`/api/sessions/${sessionId}/labels`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ labels }),
    });
  }

  getMetrics(sessionId: string): Promise<MetricsBody> {
    return this.request(`/api/sessions/${sessionId}/metrics`);
  }
}
