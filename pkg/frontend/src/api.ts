import type { BoundaryResponse, RecommendResponse, ScenarioState } from './types';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly fieldErrors: { field: string; message: string }[] = [],
  ) {
    super(message);
  }
}

/**
 * Typed client with a per-endpoint request sequence number: a response is
 * surfaced only if no newer request has been issued since, so a stale
 * what-if answer can never overwrite a fresher one.
 */
export class ApiClient {
  private seq: Record<string, number> = {};

  constructor(
    private baseUrl: string = '',
    private fetchImpl: FetchLike = (...a) => fetch(...a),
  ) {}

  private async post<T>(endpoint: string, body: unknown): Promise<T | null> {
    const mySeq = (this.seq[endpoint] = (this.seq[endpoint] ?? 0) + 1);
    const resp = await this.fetchImpl(`${this.baseUrl}${endpoint}`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
    if (this.seq[endpoint] !== mySeq) {
      return null; // superseded by a newer request: drop silently
    }
    if (!resp.ok) {
      let fields: { field: string; message: string }[] = [];
      try {
        const payload = await resp.json();
        fields = payload.errors ?? [];
      } catch {
        // non-JSON error body
      }
      throw new ApiError(`${endpoint} failed (${resp.status})`, resp.status, fields);
    }
    return (await resp.json()) as T;
  }

  /** Returns null when the response was superseded by a newer request. */
  recommend(state: ScenarioState): Promise<RecommendResponse | null> {
    return this.post<RecommendResponse>('/recommend', state);
  }

  boundary(
    state: ScenarioState,
    yRange: [number, number],
    zRange: [number, number],
    mode: 'point' | 'boot',
  ): Promise<BoundaryResponse | null> {
    return this.post<BoundaryResponse>('/boundary', {
      state,
      y_range: yRange,
      z_range: zRange,
      mode,
    });
  }

  async health(): Promise<{ status: string; B: number; ensemble_fingerprint: string }> {
    const resp = await this.fetchImpl(`${this.baseUrl}/health`);
    if (!resp.ok) throw new ApiError('service unavailable', resp.status);
    return resp.json();
  }
}
