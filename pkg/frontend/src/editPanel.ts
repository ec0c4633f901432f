import { api, ApiError, Direction } from './api';
import { TrailingRunner } from './debounce';
import { DEBOUNCE_MS, EditState } from './editState';
import { ComparePanel } from './panels';

interface EditRequest {
  direction: string;
  strength: number;
}

/**
 * Edit controls for one job: direction picker plus strength slider.
 * Slider movement is debounced (trailing, 150 ms) and every new render
 * aborts the one before it, so at most one edit request is in flight.
 * Failures surface inline with a retry button. Controls stay disabled
 * until the job is done, mirroring the server's 409 on unfinished jobs.
 */
export class EditPanel {
  readonly root: HTMLElement;
  readonly state: EditState;
  readonly select: HTMLSelectElement;
  readonly slider: HTMLInputElement;
  readonly errorBox: HTMLElement;
  readonly retryButton: HTMLButtonElement;

  private readonly valueLabel: HTMLSpanElement;
  private readonly errorMessage: HTMLSpanElement;
  private readonly runner: TrailingRunner<EditRequest>;
  private readonly directions: Map<string, Direction>;
  private lastRequest: EditRequest | null = null;
  private enabled = false;

  constructor(
    private readonly jobId: string,
    directions: Direction[],
    private readonly panel: ComparePanel,
  ) {
    if (directions.length === 0) throw new Error('edit bank is empty');
    this.directions = new Map(directions.map((d) => [d.name, d]));
    this.state = new EditState(directions[0]);
    this.runner = new TrailingRunner(DEBOUNCE_MS, (req, signal) => this.render(req, signal));

    this.root = document.createElement('div');
    this.root.className = 'edit-panel';

    this.select = document.createElement('select');
    for (const d of directions) {
      const option = document.createElement('option');
      option.value = d.name;
      option.textContent = d.name;
      this.select.append(option);
    }
    this.select.addEventListener('change', () => this.onSelect(this.select.value));

    this.slider = document.createElement('input');
    this.slider.type = 'range';
    this.slider.step = '0.05';
    this.slider.addEventListener('input', () => this.onSlider(Number(this.slider.value)));

    this.valueLabel = document.createElement('span');
    this.valueLabel.className = 'strength-value';

    this.errorMessage = document.createElement('span');
    this.retryButton = document.createElement('button');
    this.retryButton.type = 'button';
    this.retryButton.textContent = 'Retry';
    this.retryButton.addEventListener('click', () => this.onRetry());
    this.errorBox = document.createElement('div');
    this.errorBox.className = 'edit-error';
    this.errorBox.hidden = true;
    this.errorBox.append(this.errorMessage, this.retryButton);

    this.root.append(this.select, this.slider, this.valueLabel, this.errorBox);
    this.applyDirection();
    this.setEnabled(false);
  }

  /** Unlock the controls once the job has finished. */
  enable(): void {
    this.setEnabled(true);
  }

  get isEnabled(): boolean {
    return this.enabled;
  }

  private setEnabled(on: boolean): void {
    this.enabled = on;
    this.select.disabled = !on;
    this.slider.disabled = !on;
  }

  private applyDirection(): void {
    const [lo, hi] = this.state.direction.strength_range;
    this.slider.min = String(lo);
    this.slider.max = String(hi);
    this.slider.value = String(this.state.strength);
    this.valueLabel.textContent = this.state.strength.toFixed(2);
  }

  private payload(): EditRequest {
    return { direction: this.state.direction.name, strength: this.state.strength };
  }

  private onSelect(name: string): void {
    const direction = this.directions.get(name);
    if (!direction) return;
    this.state.select(direction);
    this.applyDirection();
    if (this.enabled) this.runner.request(this.payload());
  }

  private onSlider(value: number): void {
    this.state.setStrength(value);
    this.slider.value = String(this.state.strength);
    this.valueLabel.textContent = this.state.strength.toFixed(2);
    if (this.enabled) this.runner.request(this.payload());
  }

  private onRetry(): void {
    if (this.lastRequest) this.runner.runNow(this.lastRequest);
  }

  private async render(req: EditRequest, signal: AbortSignal): Promise<void> {
    this.lastRequest = req;
    try {
      const blob = await api.requestEdit(this.jobId, req.direction, req.strength, signal);
      this.panel.setImage('edited', blob);
      this.errorBox.hidden = true;
    } catch (err) {
      if (err instanceof DOMException && err.name === 'AbortError') return;
      const message =
        err instanceof ApiError && err.detail
          ? `${err.message}: ${err.detail}`
          : err instanceof Error
            ? err.message
            : String(err);
      this.errorMessage.textContent = message;
      this.errorBox.hidden = false;
    }
  }
}
