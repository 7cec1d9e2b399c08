import { ApiClient } from './api';
import { WhatIfController } from './controller';
import { heatmapModel } from './heatmap';
import { gainHistogram } from './histogram';
import { diffHtml, gainHistogramHtml, heatmapHtml, recommendationCardHtml } from './render';
import type { ScenarioState } from './types';
import { DEFAULT_STATE } from './types';

const API_BASE = (window as unknown as { FOURTHDOWN_API?: string }).FOURTHDOWN_API ?? '';

interface Control {
  field: keyof ScenarioState;
  label: string;
  kind: 'slider' | 'number';
  min?: number;
  max?: number;
  step?: number;
}

const CONTROLS: Control[] = [
  { field: 'yardline', label: 'yards to opponent endzone', kind: 'slider', min: 1, max: 99, step: 1 },
  { field: 'ydstogo', label: 'yards to go', kind: 'slider', min: 1, max: 20, step: 1 },
  { field: 'game_seconds_remaining', label: 'seconds remaining', kind: 'slider', min: 1, max: 3600, step: 1 },
  { field: 'score_differential', label: 'score differential', kind: 'slider', min: -28, max: 28, step: 1 },
  { field: 'posteam_timeouts', label: 'offense timeouts', kind: 'slider', min: 0, max: 3, step: 1 },
  { field: 'defteam_timeouts', label: 'defense timeouts', kind: 'slider', min: 0, max: 3, step: 1 },
  { field: 'posteam_spread', label: 'point spread', kind: 'number', step: 0.5 },
  { field: 'total_points_line', label: 'total points line', kind: 'number', step: 0.5 },
  { field: 'total_score', label: 'total points so far', kind: 'number', step: 1 },
  { field: 'receive_2h_ko', label: 'receives 2H kickoff', kind: 'number', min: 0, max: 1, step: 1 },
  { field: 'home', label: 'at home', kind: 'number', min: 0, max: 1, step: 1 },
  { field: 'kq', label: 'kicker quality (sd)', kind: 'number', step: 0.1 },
  { field: 'pq', label: 'punter quality (sd)', kind: 'number', step: 0.1 },
];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function buildForm(container: HTMLElement, onEdit: (f: keyof ScenarioState, v: number) => void) {
  for (const c of CONTROLS) {
    const row = document.createElement('label');
    row.className = 'control';
    const span = document.createElement('span');
    span.textContent = c.label;
    const input = document.createElement('input');
    input.type = c.kind === 'slider' ? 'range' : 'number';
    if (c.min !== undefined) input.min = String(c.min);
    if (c.max !== undefined) input.max = String(c.max);
    if (c.step !== undefined) input.step = String(c.step);
    input.value = String(DEFAULT_STATE[c.field]);
    input.dataset.field = c.field;
    const val = document.createElement('output');
    val.textContent = input.value;
    input.addEventListener('input', () => {
      val.textContent = input.value;
      onEdit(c.field, Number(input.value));
    });
    row.append(span, input, val);
    container.append(row);
  }
}

function main() {
  const api = new ApiClient(API_BASE);
  let heatmapMode: 'effect' | 'bootpct' = 'effect';
  let heatmapLoaded = false;

  const controller = new WhatIfController(api, {
    onRecommendation: (state, resp, diff) => {
      el('card').innerHTML = recommendationCardHtml(resp);
      el('diff').innerHTML = diffHtml(diff);
      el('histogram').innerHTML = gainHistogramHtml(
        gainHistogram(resp.gains, resp.effect_size),
      );
      el('history-count').textContent = String(controller.history.length);
    },
    onValidationErrors: (errors) => {
      el('errors').innerHTML = errors
        .map((e) => `<div class="error">${e.field}: ${e.message}</div>`)
        .join('');
    },
    onServerError: (message) => {
      el('errors').innerHTML = `<div class="error server">${message}</div>`;
    },
  });

  buildForm(el('form'), (f, v) => controller.edit(f, v));

  async function loadHeatmap() {
    el('heatmap').innerHTML = '<div class="loading">computing grid&hellip;</div>';
    const state = controller.current();
    const resp = await api.boundary(state, [1, 99], [1, 10],
      heatmapMode === 'bootpct' ? 'boot' : 'point');
    if (resp === null) return; // superseded by a newer grid request
    const model = heatmapModel(resp.cells, heatmapMode,
      { y: state.yardline, z: state.ydstogo });
    el('heatmap').innerHTML = heatmapHtml(model);
  }

  el('tab-boundary').addEventListener('click', () => {
    el('panel-boundary').classList.remove('hidden');
    if (!heatmapLoaded) {
      heatmapLoaded = true; // fetched lazily, once per mode toggle
      void loadHeatmap();
    }
  });
  el('mode-toggle').addEventListener('click', () => {
    heatmapMode = heatmapMode === 'effect' ? 'bootpct' : 'effect';
    el('mode-toggle').textContent = `intensity: ${heatmapMode}`;
    void loadHeatmap();
  });

  void api
    .health()
    .then((h) => {
      el('status').textContent = `ensemble B=${h.B} (${h.ensemble_fingerprint.slice(0, 8)})`;
      return controller.fetchNow();
    })
    .catch((err) => {
      el('status').textContent = `service unavailable: ${err}`;
    });
}

document.addEventListener('DOMContentLoaded', main);
