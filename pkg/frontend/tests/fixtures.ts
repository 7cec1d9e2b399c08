import type { RecommendResponse, ScenarioState } from '../src/types';
import { DEFAULT_STATE } from '../src/types';

export function fixtureRecommend(overrides: Partial<RecommendResponse> = {}): RecommendResponse {
  return {
    wp: { go: 0.55, field_goal: 0.54, punt: null },
    best: 'go',
    effect_size: 0.011,
    boot_pct: 56.4,
    ci: [-0.04, 0.05],
    bin: 'uncertain',
    gains: [-0.02, 0.01, 0.03, 0.0, -0.01],
    detail: {
      p_conversion: 0.62,
      p_fg_make: 0.71,
      punt_expected_next_yardline: 78,
      wp_go_success: 0.61,
      wp_go_failure: 0.45,
      wp_fg_make: 0.58,
      wp_fg_miss: 0.43,
      go_success_is_touchdown: false,
    },
    ...overrides,
  };
}

export function validState(overrides: Partial<ScenarioState> = {}): ScenarioState {
  return { ...DEFAULT_STATE, ...overrides };
}

export interface RecordedRequest {
  url: string;
  body: unknown;
}

/** Fixture server: canned JSON responses behind a fetch-compatible
 * function, with optional manual resolution for race tests. */
export function fixtureServer(handler: (url: string, body: unknown) => unknown) {
  const requests: RecordedRequest[] = [];
  const fetchImpl = async (url: string, init?: RequestInit): Promise<Response> => {
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    requests.push({ url, body });
    const payload = handler(url, body);
    return new Response(JSON.stringify(payload), {
      status: 200,
      headers: { 'content-type': 'application/json' },
    });
  };
  return { fetchImpl, requests };
}

/** Like fixtureServer but each request's response resolves only when
 * release(i) is called, so tests control arrival order. */
export function deferredServer(handler: (url: string, body: unknown, index: number) => unknown) {
  const requests: RecordedRequest[] = [];
  const releases: (() => void)[] = [];
  const fetchImpl = (url: string, init?: RequestInit): Promise<Response> => {
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    const index = requests.length;
    requests.push({ url, body });
    return new Promise((resolve) => {
      releases.push(() =>
        resolve(
          new Response(JSON.stringify(handler(url, body, index)), {
            status: 200,
            headers: { 'content-type': 'application/json' },
          }),
        ),
      );
    });
  };
  return { fetchImpl, requests, release: (i: number) => releases[i]() };
}
