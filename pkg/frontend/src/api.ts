/** Typed client for the prediction service. Same-origin by default; tests
 * pass an explicit base URL. */

import type { Features } from "./features.js";

export interface ModelInfo {
  kind: "linear" | "mlp";
  shape: number[] | null;
  k: number;
  dataset_fingerprint: string;
  final_loss: number;
  seed: number;
}

export interface Preset {
  season: string;
  team: string;
  ortg: number;
  features: Features;
}

export interface PredictResponse {
  ortg: number;
  normalized: number;
  out_of_region: string[];
}

export type Verdict = "below" | "within" | "above";

export interface HypothesisCheck {
  verdict: Verdict;
  value: number;
  band: number[];
}

export interface GameplanResponse {
  predicted_ortg: number;
  features: Features;
  active_constraints: string[];
  locked: Features;
  hypothesis_checks: {
    checks: Record<string, HypothesisCheck>;
    within_count: number;
  };
  region_fingerprint: string;
}

export interface SensitivityEntry {
  name: string;
  mean_gradient: number;
  feature_std: number;
  score: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public field?: string,
  ) {
    super(message);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let code = "http_error";
    let message = `HTTP ${response.status}`;
    let field: string | undefined;
    try {
      const body = (await response.json()) as {
        code?: string;
        message?: string;
        field?: string;
      };
      code = body.code ?? code;
      message = body.message ?? message;
      field = body.field;
    } catch {
      // non-JSON error body; keep the defaults
    }
    throw new ApiError(response.status, code, message, field);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(private base: string = "") {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  health(): Promise<{ status: string }> {
    return fetch(this.url("/api/health")).then((r) => asJson(r));
  }

  model(): Promise<ModelInfo> {
    return fetch(this.url("/api/model")).then((r) => asJson(r));
  }

  presets(): Promise<Preset[]> {
    return fetch(this.url("/api/presets")).then((r) => asJson(r));
  }

  sensitivity(): Promise<{ entries: SensitivityEntry[] }> {
    return fetch(this.url("/api/sensitivity")).then((r) => asJson(r));
  }

  predict(features: Features): Promise<PredictResponse> {
    return fetch(this.url("/api/predict"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(features),
    }).then((r) => asJson(r));
  }

  optimize(locked: Features, seed: number, margin = 0): Promise<GameplanResponse> {
    return fetch(this.url("/api/optimize"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ locked, seed, margin }),
    }).then((r) => asJson(r));
  }
}
