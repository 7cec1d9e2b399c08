import type { RecommendResponse, ScenarioState } from './types';

export interface HistoryEntry {
  state: ScenarioState;
  response: RecommendResponse;
  at: number; // epoch ms
}

/** Append-only within a session; supports diffing against the previous
 * explored state. */
export class ScenarioHistory {
  private entries: HistoryEntry[] = [];

  push(state: ScenarioState, response: RecommendResponse, at = Date.now()): void {
    this.entries.push({ state: { ...state }, response, at });
  }

  get length(): number {
    return this.entries.length;
  }

  latest(): HistoryEntry | undefined {
    return this.entries[this.entries.length - 1];
  }

  previous(): HistoryEntry | undefined {
    return this.entries[this.entries.length - 2];
  }

  all(): readonly HistoryEntry[] {
    return this.entries;
  }
}

export interface FieldDiff {
  field: keyof ScenarioState;
  from: number;
  to: number;
}

export function diffStates(prev: ScenarioState, next: ScenarioState): FieldDiff[] {
  const out: FieldDiff[] = [];
  for (const key of Object.keys(next) as (keyof ScenarioState)[]) {
    if (prev[key] !== next[key]) {
      out.push({ field: key, from: prev[key], to: next[key] });
    }
  }
  return out;
}
