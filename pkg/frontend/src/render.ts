import { badgeFor } from './bins';
import type { HeatmapModel } from './heatmap';
import type { HistogramModel } from './histogram';
import type { FieldDiff } from './history';
import type { RecommendResponse } from './types';

const pct = (v: number | null | undefined, digits = 1) =>
  v === null || v === undefined ? 'n/a' : `${(100 * v).toFixed(digits)}%`;

/** Recommendation card: per-decision WP, success probabilities, branch
 * WPs, boot% bar, CI band, and the confidence badge. */
export function recommendationCardHtml(resp: RecommendResponse): string {
  const badge = badgeFor(resp.boot_pct);
  const d = resp.detail;
  const rows = [
    {
      name: 'go',
      wp: resp.wp.go,
      success: d.p_conversion,
      wpSuccess: d.wp_go_success,
      wpFailure: d.wp_go_failure,
    },
    {
      name: 'field_goal',
      wp: resp.wp.field_goal,
      success: d.p_fg_make,
      wpSuccess: d.wp_fg_make,
      wpFailure: d.wp_fg_miss,
    },
    { name: 'punt', wp: resp.wp.punt, success: null, wpSuccess: null, wpFailure: null },
  ];
  const body = rows
    .map((r) => {
      const best = r.name === resp.best ? ' class="best-row"' : '';
      if (r.wp === null) {
        return `<tr${best}><td>${r.name}</td><td colspan="4">unavailable</td></tr>`;
      }
      return (
        `<tr${best}><td>${r.name}</td><td>${pct(r.wp)}</td>` +
        `<td>${r.success === null ? '' : pct(r.success)}</td>` +
        `<td>${r.wpSuccess === null ? '' : pct(r.wpSuccess)}</td>` +
        `<td>${r.wpFailure === null ? '' : pct(r.wpFailure)}</td></tr>`
      );
    })
    .join('');
  const ci = `[${pct(resp.ci[0])}, ${pct(resp.ci[1])}]`;
  return `
<div class="card">
  <div class="headline">
    recommended: <strong>${resp.best}</strong>
    <span class="badge" data-bin="${badge.bin}" style="background:${badge.color}">${badge.bin}</span>
  </div>
  <div class="boot-bar"><div class="boot-fill" style="width:${resp.boot_pct}%"></div>
    <span>boot% ${resp.boot_pct.toFixed(1)}</span></div>
  <div class="ci">effect size ${pct(resp.effect_size, 2)}, 90% CI ${ci}</div>
  <table class="decisions">
    <thead><tr><th>decision</th><th>WP</th><th>P(success)</th><th>WP|success</th><th>WP|failure</th></tr></thead>
    <tbody>${body}</tbody>
  </table>
</div>`;
}

/** Histogram of bootstrapped gains with the zero line (dashed) and the
 * point-estimate line (solid). */
export function gainHistogramHtml(model: HistogramModel): string {
  if (model.bars.length === 0) return '<div class="histogram empty">no gains</div>';
  const bars = model.bars
    .map(
      (b) =>
        `<div class="hist-bar" style="height:${Math.round(100 * b.heightFrac)}%" ` +
        `title="[${(100 * b.lo).toFixed(1)}%, ${(100 * b.hi).toFixed(1)}%): ${b.count}"></div>`,
    )
    .join('');
  const zero =
    model.zeroFrac === null
      ? ''
      : `<div class="zero-line" style="left:${(100 * model.zeroFrac).toFixed(2)}%"></div>`;
  const point =
    model.pointFrac === null
      ? ''
      : `<div class="point-line" style="left:${(100 * model.pointFrac).toFixed(2)}%"></div>`;
  return `<div class="histogram">${bars}${zero}${point}</div>`;
}

/** Heatmap over (yardline, ydstogo); blank cells for infeasible states,
 * the current scenario outlined. */
export function heatmapHtml(model: HeatmapModel): string {
  const index = new Map(model.cells.map((c) => [`${c.y}:${c.z}`, c]));
  const rows = [...model.zValues]
    .reverse()
    .map((z) => {
      const cells = model.yValues
        .map((y) => {
          const c = index.get(`${y}:${z}`);
          if (!c || c.blank) return '<td class="blank"></td>';
          const mark = c.marked ? ' marked' : '';
          return (
            `<td class="cell${mark}" data-best="${c.color}" ` +
            `style="background:${c.color};opacity:${(0.15 + 0.85 * c.alpha).toFixed(3)}" ` +
            `title="y=${c.y} z=${c.z}"></td>`
          );
        })
        .join('');
      return `<tr><th>${z}</th>${cells}</tr>`;
    })
    .join('');
  return `<table class="heatmap"><tbody>${rows}</tbody></table>`;
}

export function diffHtml(diff: FieldDiff[]): string {
  if (diff.length === 0) return '';
  const parts = diff.map((d) => `${d.field}: ${d.from} &rarr; ${d.to}`);
  return `<div class="diff">changed ${parts.join(', ')}</div>`;
}
