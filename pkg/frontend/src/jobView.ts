import { JobSnapshot, JobState } from './api';

export const STATE_LABELS: Record<JobState, string> = {
  queued: 'Queued',
  running: 'Running',
  done: 'Done',
  failed: 'Failed',
};

/**
 * View model for one job: a state label plus a progress fraction that
 * never decreases, even if poll responses land out of order.
 */
export class JobView {
  readonly id: string;
  state: JobState = 'queued';
  error: string | null = null;
  private fraction = 0;

  constructor(id: string) {
    this.id = id;
  }

  update(snap: JobSnapshot): void {
    this.state = snap.state;
    this.error = snap.error;
    const total = snap.progress.total;
    const f = total > 0 ? snap.progress.iteration / total : 0;
    if (f > this.fraction) this.fraction = f;
    if (snap.state === 'done') this.fraction = 1;
  }

  get progressFraction(): number {
    return this.fraction;
  }

  get stateLabel(): string {
    return STATE_LABELS[this.state];
  }

  get terminal(): boolean {
    return this.state === 'done' || this.state === 'failed';
  }
}

/** One-line status for the header: the state label, plus the server's
 * error detail when the job failed. */
export function statusText(view: JobView): string {
  if (view.state === 'failed' && view.error) {
    return `${view.stateLabel}: ${view.error}`;
  }
  return view.stateLabel;
}
