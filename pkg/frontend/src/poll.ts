import { api, JobSnapshot } from './api';

const TERMINAL = new Set<string>(['done', 'failed']);

export interface PollOptions {
  intervalMs?: number;
  onUpdate?: (snap: JobSnapshot) => void;
  signal?: AbortSignal;
}

function sleep(ms: number, signal?: AbortSignal): Promise<void> {
  return new Promise((resolve, reject) => {
    const timer = setTimeout(() => {
      signal?.removeEventListener('abort', onAbort);
      resolve();
    }, ms);
    const onAbort = () => {
      clearTimeout(timer);
      reject(new DOMException('polling aborted', 'AbortError'));
    };
    signal?.addEventListener('abort', onAbort, { once: true });
  });
}

/**
 * Poll a job until it reaches a terminal state (done / failed).
 * Calls onUpdate with every snapshot and resolves with the final one.
 */
export async function pollJob(jobId: string, opts: PollOptions = {}): Promise<JobSnapshot> {
  const interval = opts.intervalMs ?? 500;
  for (;;) {
    if (opts.signal?.aborted) {
      throw new DOMException('polling aborted', 'AbortError');
    }
    const snap = await api.getJob(jobId);
    opts.onUpdate?.(snap);
    if (TERMINAL.has(snap.state)) return snap;
    await sleep(interval, opts.signal);
  }
}
