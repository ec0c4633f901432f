import { Direction } from './api';

/** Quiet window before a slider position becomes a render request. */
export const DEBOUNCE_MS = 150;

function clamp(v: number, [lo, hi]: [number, number]): number {
  return Math.min(hi, Math.max(lo, v));
}

/**
 * State for one edit panel: the chosen direction and a strength kept
 * inside the bank's declared range.
 */
export class EditState {
  direction: Direction;
  strength: number;

  constructor(direction: Direction) {
    this.direction = direction;
    this.strength = clamp(direction.default_strength, direction.strength_range);
  }

  select(direction: Direction): void {
    this.direction = direction;
    this.strength = clamp(direction.default_strength, direction.strength_range);
  }

  setStrength(value: number): void {
    this.strength = clamp(value, this.direction.strength_range);
  }
}
