/**
 * Trailing debounce for abortable async work. request() schedules fn to
 * run once input has been quiet for windowMs; a newer request while one
 * is pending replaces it, and starting a run aborts the previous run's
 * controller, so at most one call fires per quiet window and at most one
 * request is in flight.
 */
export class TrailingRunner<T> {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inflight: AbortController | null = null;

  constructor(
    private readonly windowMs: number,
    private readonly fn: (value: T, signal: AbortSignal) => Promise<void>,
  ) {}

  request(value: T): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      this.run(value);
    }, this.windowMs);
  }

  /** Skip the quiet window and run now (used by explicit retry). */
  runNow(value: T): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
    this.run(value);
  }

  /** Drop any pending call and abort the in-flight one. */
  cancel(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
    this.inflight?.abort();
    this.inflight = null;
  }

  private run(value: T): void {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    void this.fn(value, controller.signal).finally(() => {
      if (this.inflight === controller) this.inflight = null;
    });
  }
}
