/**
 * Typed client for the inversion service. Every call throws ApiError on a
 * non-2xx response, carrying the server's error message plus any extra
 * fields it sent (detail, available directions).
 */

export type JobState = 'queued' | 'running' | 'done' | 'failed';

export interface JobProgress {
  iteration: number;
  total: number;
}

export interface JobSnapshot {
  id: string;
  kind: string;
  state: JobState;
  progress: JobProgress;
  config: Record<string, unknown>;
  error: string | null;
}

export interface Direction {
  name: string;
  default_strength: number;
  strength_range: [number, number];
}

export interface BankInfo {
  id: string;
  arch_hash: string;
  directions: Direction[];
}

export interface VersionInfo {
  api: string;
  formats: Record<string, string>;
  generator: { arch_hash: string; resolution: number };
}

export class ApiError extends Error {
  readonly status: number;
  readonly detail?: string;
  readonly extra: Record<string, unknown>;

  constructor(status: number, message: string, extra: Record<string, unknown> = {}) {
    super(message);
    this.name = 'ApiError';
    this.status = status;
    this.detail = typeof extra.detail === 'string' ? extra.detail : undefined;
    this.extra = extra;
  }
}

async function readError(res: Response): Promise<ApiError> {
  let message = `${res.status} ${res.statusText}`;
  let extra: Record<string, unknown> = {};
  try {
    const body = await res.json();
    if (body && typeof body.error === 'string') {
      const { error, ...rest } = body;
      message = error;
      extra = rest;
    }
  } catch {
    // non-JSON error body; keep the status line
  }
  return new ApiError(res.status, message, extra);
}

async function requestJson<T>(path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(path, init);
  if (!res.ok) throw await readError(res);
  return res.json() as Promise<T>;
}

export const api = {
  async version(): Promise<VersionInfo> {
    return requestJson<VersionInfo>('/api/version');
  },

  async banks(): Promise<BankInfo[]> {
    const body = await requestJson<{ banks: BankInfo[] }>('/api/banks');
    return body.banks;
  },

  /** Upload a target image and start an inversion job. */
  async createJob(
    image: Blob,
    opts: { iters?: number; seed?: number } = {},
  ): Promise<JobSnapshot> {
    const form = new FormData();
    form.append('image', image, 'target.png');
    if (opts.iters !== undefined) form.append('iters', String(opts.iters));
    if (opts.seed !== undefined) form.append('seed', String(opts.seed));
    return requestJson<JobSnapshot>('/api/jobs', { method: 'POST', body: form });
  },

  async getJob(jobId: string): Promise<JobSnapshot> {
    return requestJson<JobSnapshot>(`/api/jobs/${encodeURIComponent(jobId)}`);
  },

  /** Fetch the stored target or reconstruction PNG. */
  async jobImage(jobId: string, kind: 'target' | 'reconstruction'): Promise<Blob> {
    const res = await fetch(`/api/jobs/${encodeURIComponent(jobId)}/image?kind=${kind}`);
    if (!res.ok) throw await readError(res);
    return res.blob();
  },

  /** Render one edit. Pass a signal so a superseded request can be aborted. */
  async requestEdit(
    jobId: string,
    direction: string,
    strength: number,
    signal?: AbortSignal,
  ): Promise<Blob> {
    const res = await fetch(`/api/results/${encodeURIComponent(jobId)}/edit`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ direction, strength }),
      signal,
    });
    if (!res.ok) throw await readError(res);
    return res.blob();
  },

  async manifest(jobId: string): Promise<Record<string, unknown>> {
    return requestJson(`/api/results/${encodeURIComponent(jobId)}/manifest`);
  },
};
