import type { ConfidenceBin } from './types';

// Thresholds mirror the server's binning: [83, 100] confident,
// [67, 83) lean, [0, 67) uncertain.
export const CONFIDENT_MIN = 83;
export const LEAN_MIN = 67;

export function binOf(bootPct: number): ConfidenceBin {
  if (bootPct >= CONFIDENT_MIN) return 'confident';
  if (bootPct >= LEAN_MIN) return 'lean';
  return 'uncertain';
}

// Badge colors: confident green, lean yellow, uncertain red.
export const BIN_COLORS: Record<ConfidenceBin, string> = {
  confident: '#2e7d32',
  lean: '#f9a825',
  uncertain: '#c62828',
};

export function badgeFor(bootPct: number): { bin: ConfidenceBin; color: string } {
  const bin = binOf(bootPct);
  return { bin, color: BIN_COLORS[bin] };
}
