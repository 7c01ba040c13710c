/** Payload shapes of the trial-service JSON API (the single source of numbers). */

export interface EvidencePayload {
  hypotheses: string[];
  log_ml: number[];
  posterior: number[];
  bf_log: number[][];
}

export interface SnapshotPayload {
  id: string;
  arms: string[];
  counts: { y: number[]; n: number[] };
  seq: number;
  next_patient: number;
  allocation: number[];
  fallback: boolean;
  evidence: EvidencePayload | null;
}

export interface DrawPayload {
  patient: number;
  allocation: number[];
  arm: number;
}

export interface HistoryPayload {
  id: string;
  arms: string[];
  posterior_trace: (number[] | null)[];
  log_bf_vs_null_trace: (number[] | null)[];
  allocation_trace: number[][];
  fallback_trace: boolean[];
}

export interface EvidenceResponse extends SnapshotPayload {
  history?: HistoryPayload;
}

export interface ApiErrorBody {
  code: string;
  message: string;
}

export interface TrialConfigPayload {
  id: string;
  arms: string[];
  policy: {
    method: string;
    p_null?: number;
    estimator?: string;
    burn_in?: number;
    cap?: [number, number];
  };
  prior?: Record<string, unknown>;
  seed?: number;
}
