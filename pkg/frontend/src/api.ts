/**
 * Typed client for the facesolve session server.
 *
 * Every mutation is posted through {@link SessionClient.applyAction} with the
 * last-seen revision; a stale revision surfaces as a ConflictError so the
 * caller can refetch and re-apply. Mutations are queued so at most one is in
 * flight per session, while reads may run concurrently.
 */

export interface RegionInfo {
  channels: number[];
  markers: number[];
}

export interface AnchorInfo {
  frame: number;
  weights: number[];
}

export interface RmseSummary {
  mean_rmse: number;
  rmse: number[];
  rmse_unaligned?: number[];
}

export interface SessionState {
  id: string;
  revision: number;
  n_frames: number;
  n_markers: number;
  channels: string[];
  regions: Record<string, RegionInfo>;
  anchors: AnchorInfo[];
  jaw_override: boolean;
  report_stale: boolean;
  report?: {
    raw: RmseSummary;
    finetuned?: RmseSummary;
  };
}

export interface TrackDocument {
  n?: number;
  frames: number[][] | number[][][];
}

export interface ReportDocument {
  raw: { frames: number[][]; channels?: string[] };
  aligned: { n: number; frames: number[][][] };
  finetuned?: { frames: number[][] };
  rmse: { raw: number[]; aligned: number[]; finetuned?: number[] };
  revision: number;
  stale: boolean;
}

export type Action =
  | { type: "set_anchor"; frame: number; weights: number[]; position?: number }
  | { type: "remove_anchor"; index: number }
  | { type: "set_jaw_override"; track: TrackDocument | null }
  | { type: "edit_weight"; frame: number; channel: number | string; value: number }
  | { type: "run_raw_solve" }
  | { type: "run_finetune"; channels: (number | string)[]; frame_range?: [number, number]; max_iters?: number }
  | { type: "reset" };

export interface ActionResult {
  revision: number;
  delta: Record<string, unknown> & { type: string };
}

export interface ApiErrorBody {
  code: string;
  message: string;
  path: string;
}

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly path: string;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.status = status;
    this.code = body.code;
    this.path = body.path;
  }
}

export class ConflictError extends ApiError {}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function readError(resp: Response): Promise<ApiError> {
  let body: ApiErrorBody;
  try {
    body = (await resp.json()) as ApiErrorBody;
  } catch {
    body = { code: "transport", message: `HTTP ${resp.status}`, path: "$" };
  }
  return resp.status === 409 ? new ConflictError(resp.status, body) : new ApiError(resp.status, body);
}

export class SessionClient {
  readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;
  private mutationQueue: Promise<unknown> = Promise.resolve();

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    if (!resp.ok) {
      throw await readError(resp);
    }
    return (await resp.json()) as T;
  }

  async createSession(rig: unknown, bundle: unknown, track: unknown): Promise<{ id: string; revision: number }> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ rig, bundle, track }),
    });
  }

  async getState(sessionId: string): Promise<SessionState> {
    return this.request(`/sessions/${sessionId}`);
  }

  async getReport(sessionId: string): Promise<ReportDocument> {
    return this.request(`/sessions/${sessionId}/report`);
  }

  async exportData(sessionId: string, what: "weights" | "markers"): Promise<TrackDocument> {
    return this.request(`/sessions/${sessionId}/export?what=${what}`);
  }

  /**
   * Post one action with the given revision echo. Mutations are serialized:
   * a second call waits for the first to settle before it is sent.
   */
  async applyAction(sessionId: string, revision: number, action: Action): Promise<ActionResult> {
    const run = async (): Promise<ActionResult> =>
      this.request(`/sessions/${sessionId}/actions`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ revision, action }),
      });
    const queued = this.mutationQueue.then(run, run);
    this.mutationQueue = queued.catch(() => undefined);
    return queued;
  }
}
