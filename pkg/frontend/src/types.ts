// Payload types mirroring the inference service JSON exactly.

export type Decision = 'go' | 'field_goal' | 'punt';
export type ConfidenceBin = 'confident' | 'lean' | 'uncertain';

export interface ScenarioState {
  yardline: number;
  ydstogo: number;
  game_seconds_remaining: number;
  score_differential: number;
  posteam_spread: number;
  total_points_line: number;
  posteam_timeouts: number;
  defteam_timeouts: number;
  receive_2h_ko: number;
  home: number;
  total_score: number;
  kq: number;
  pq: number;
}

export interface RecommendResponse {
  wp: { go: number; field_goal: number | null; punt: number | null };
  best: Decision;
  effect_size: number | null;
  boot_pct: number;
  ci: [number, number];
  bin: ConfidenceBin;
  gains: number[];
  detail: {
    p_conversion: number;
    p_fg_make: number;
    punt_expected_next_yardline: number;
    wp_go_success: number;
    wp_go_failure: number;
    wp_fg_make: number;
    wp_fg_miss: number;
    go_success_is_touchdown: boolean;
  };
}

export interface BoundaryCell {
  y: number;
  z: number;
  best: Decision | null;
  effect_size: number | null;
  boot_pct?: number | null;
}

export interface BoundaryResponse {
  cells: BoundaryCell[];
  mode: 'point' | 'boot';
}

export const DEFAULT_STATE: ScenarioState = {
  yardline: 45,
  ydstogo: 4,
  game_seconds_remaining: 1800,
  score_differential: 0,
  posteam_spread: 0,
  total_points_line: 44,
  posteam_timeouts: 3,
  defteam_timeouts: 3,
  receive_2h_ko: 0,
  home: 0,
  total_score: 0,
  kq: 0,
  pq: 0,
};
