import type { ScenarioState } from './types';

export interface FieldError {
  field: keyof ScenarioState | 'state';
  message: string;
}

// Mirrors the server's state rules so a structurally invalid request is
// never sent.
export function validateState(s: ScenarioState): FieldError[] {
  const errors: FieldError[] = [];
  if (!Number.isInteger(s.yardline) || s.yardline < 1 || s.yardline > 99) {
    errors.push({ field: 'yardline', message: 'yardline must be an integer in [1, 99]' });
  }
  if (!Number.isInteger(s.ydstogo) || s.ydstogo < 1) {
    errors.push({ field: 'ydstogo', message: 'ydstogo must be a positive integer' });
  }
  if (s.ydstogo > s.yardline) {
    errors.push({ field: 'ydstogo', message: 'ydstogo exceeds yardline' });
  }
  if (
    !Number.isInteger(s.game_seconds_remaining) ||
    s.game_seconds_remaining < 1 ||
    s.game_seconds_remaining > 3600
  ) {
    errors.push({
      field: 'game_seconds_remaining',
      message: 'seconds remaining must be in [1, 3600]',
    });
  }
  for (const field of ['posteam_timeouts', 'defteam_timeouts'] as const) {
    const v = s[field];
    if (!Number.isInteger(v) || v < 0 || v > 3) {
      errors.push({ field, message: `${field} must be in {0..3}` });
    }
  }
  if (s.receive_2h_ko !== 0 && s.receive_2h_ko !== 1) {
    errors.push({ field: 'receive_2h_ko', message: 'receive_2h_ko must be 0 or 1' });
  }
  if (s.home !== 0 && s.home !== 1) {
    errors.push({ field: 'home', message: 'home must be 0 or 1' });
  }
  if (s.total_score < 0) {
    errors.push({ field: 'total_score', message: 'total_score must be non-negative' });
  }
  return errors;
}

export function isValid(s: ScenarioState): boolean {
  return validateState(s).length === 0;
}
