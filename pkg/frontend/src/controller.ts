import { ApiClient } from './api';
import { debounce } from './debounce';
import { ScenarioHistory, diffStates, type FieldDiff } from './history';
import type { RecommendResponse, ScenarioState } from './types';
import { DEFAULT_STATE } from './types';
import { validateState, type FieldError } from './validation';

export interface ControllerEvents {
  onRecommendation?: (state: ScenarioState, resp: RecommendResponse, diff: FieldDiff[]) => void;
  onValidationErrors?: (errors: FieldError[]) => void;
  onServerError?: (message: string) => void;
}

export const DEBOUNCE_MS = 250;

/**
 * What-if loop: each field edit validates locally, then (after debounce)
 * issues at most one in-flight /recommend; superseded responses are
 * dropped by the client's sequence guard; accepted answers are pushed
 * onto the session history with a diff against the previous scenario.
 */
export class WhatIfController {
  readonly history = new ScenarioHistory();
  private state: ScenarioState;
  private readonly debouncedFetch: (() => void) & { cancel: () => void };
  requestsIssued = 0;

  constructor(
    private api: ApiClient,
    private events: ControllerEvents = {},
    initial: ScenarioState = DEFAULT_STATE,
    debounceMs: number = DEBOUNCE_MS,
  ) {
    this.state = { ...initial };
    this.debouncedFetch = debounce(() => void this.fetchNow(), debounceMs);
  }

  current(): ScenarioState {
    return { ...this.state };
  }

  /** Apply one field edit. Invalid states surface errors and never issue
   * a request. */
  edit(field: keyof ScenarioState, value: number): void {
    this.state = { ...this.state, [field]: value };
    const errors = validateState(this.state);
    if (errors.length > 0) {
      this.debouncedFetch.cancel();
      this.events.onValidationErrors?.(errors);
      return;
    }
    this.events.onValidationErrors?.([]);
    this.debouncedFetch();
  }

  /** Immediate fetch (initial load or explicit submit). */
  async fetchNow(): Promise<void> {
    const snapshot = { ...this.state };
    const errors = validateState(snapshot);
    if (errors.length > 0) {
      this.events.onValidationErrors?.(errors);
      return;
    }
    this.requestsIssued += 1;
    let resp: RecommendResponse | null;
    try {
      resp = await this.api.recommend(snapshot);
    } catch (err) {
      this.events.onServerError?.(err instanceof Error ? err.message : String(err));
      return;
    }
    if (resp === null) return; // superseded
    const prev = this.history.latest();
    const diff = prev ? diffStates(prev.state, snapshot) : [];
    this.history.push(snapshot, resp);
    this.events.onRecommendation?.(snapshot, resp, diff);
  }
}
