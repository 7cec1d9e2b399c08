import type { BoundaryCell, Decision } from './types';

// Decision colors match the badge palette family: go green, field goal
// yellow, punt red.
export const DECISION_COLORS: Record<Decision, string> = {
  go: '#2e7d32',
  field_goal: '#f9a825',
  punt: '#c62828',
};

export interface HeatmapCellView {
  y: number;
  z: number;
  blank: boolean;
  color: string | null;
  alpha: number; // intensity from effect size or boot%
  marked: boolean; // the currently explored state
}

export interface HeatmapModel {
  cells: HeatmapCellView[];
  yValues: number[];
  zValues: number[];
}

/**
 * Render model for the decision-boundary heatmap. Infeasible cells
 * (ydstogo > yardline) stay blank; intensity comes from effect size in
 * `effect` mode or bootstrap agreement in `bootpct` mode.
 */
export function heatmapModel(
  cells: BoundaryCell[],
  mode: 'effect' | 'bootpct',
  current: { y: number; z: number } | null = null,
): HeatmapModel {
  const effectCap = 0.05; // 5% WP saturates the effect-size palette
  const views: HeatmapCellView[] = cells.map((c) => {
    const blank = c.best === null;
    let alpha = 0;
    if (!blank) {
      if (mode === 'effect') {
        alpha = Math.min(1, Math.abs(c.effect_size ?? 0) / effectCap);
      } else {
        const bp = c.boot_pct ?? null;
        // boot% of 50 is maximal uncertainty, 100 maximal confidence.
        alpha = bp === null ? 0 : Math.min(1, Math.max(0, (bp - 50) / 50));
      }
    }
    return {
      y: c.y,
      z: c.z,
      blank,
      color: blank ? null : DECISION_COLORS[c.best as Decision],
      alpha,
      marked: current !== null && c.y === current.y && c.z === current.z,
    };
  });
  return {
    cells: views,
    yValues: [...new Set(cells.map((c) => c.y))].sort((a, b) => a - b),
    zValues: [...new Set(cells.map((c) => c.z))].sort((a, b) => a - b),
  };
}
