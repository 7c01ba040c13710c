/** Typed fetch client for the trial service. */

import type {
  ApiErrorBody,
  DrawPayload,
  EvidenceResponse,
  SnapshotPayload,
  TrialConfigPayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  let res: Response;
  try {
    res = await fetch(base + path, {
      headers: { "content-type": "application/json" },
      ...init,
    });
  } catch (err) {
    throw new ApiError(0, "network", String(err));
  }
  const body = await res.json().catch(() => ({}));
  if (!res.ok) {
    const e = body as ApiErrorBody;
    throw new ApiError(res.status, e.code ?? "error", e.message ?? res.statusText);
  }
  return body as T;
}

export class TrialApi {
  constructor(private base: string = "") {}

  health(): Promise<{ status: string }> {
    return request(this.base, "/healthz");
  }

  createTrial(config: TrialConfigPayload): Promise<SnapshotPayload> {
    return request(this.base, "/trials", { method: "POST", body: JSON.stringify(config) });
  }

  getTrial(id: string): Promise<SnapshotPayload> {
    return request(this.base, `/trials/${encodeURIComponent(id)}`);
  }

  draw(id: string): Promise<DrawPayload> {
    return request(this.base, `/trials/${encodeURIComponent(id)}/draw`, {
      method: "POST",
      body: JSON.stringify({}),
    });
  }

  recordOutcome(
    id: string,
    patient: number,
    outcome: 0 | 1,
    arm?: number,
    externalArm = false,
  ): Promise<SnapshotPayload> {
    return request(this.base, `/trials/${encodeURIComponent(id)}/outcomes`, {
      method: "POST",
      body: JSON.stringify({ patient, outcome, arm, external_arm: externalArm }),
    });
  }

  evidence(id: string, history = true): Promise<EvidenceResponse> {
    const qs = history ? "?history=true" : "";
    return request(this.base, `/trials/${encodeURIComponent(id)}/evidence${qs}`);
  }
}
