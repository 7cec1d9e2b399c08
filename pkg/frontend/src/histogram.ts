// Bootstrapped-gain histogram geometry: bars plus a zero line and the
// point-estimate line, all as pure render data.

export interface HistogramBar {
  lo: number;
  hi: number;
  count: number;
  heightFrac: number; // count / max count
}

export interface HistogramModel {
  bars: HistogramBar[];
  zeroFrac: number | null; // horizontal position of the zero line in [0,1]
  pointFrac: number | null; // position of the point-estimate line
  min: number;
  max: number;
}

export function gainHistogram(
  gains: number[],
  pointEstimate: number | null,
  nBins = 15,
): HistogramModel {
  if (gains.length === 0) {
    return { bars: [], zeroFrac: null, pointFrac: null, min: 0, max: 0 };
  }
  let min = Math.min(...gains, pointEstimate ?? Infinity, 0);
  let max = Math.max(...gains, pointEstimate ?? -Infinity, 0);
  if (max - min < 1e-12) {
    min -= 0.01;
    max += 0.01;
  }
  const width = (max - min) / nBins;
  const counts = new Array<number>(nBins).fill(0);
  for (const g of gains) {
    const idx = Math.min(nBins - 1, Math.floor((g - min) / width));
    counts[idx] += 1;
  }
  const peak = Math.max(...counts);
  const frac = (v: number) => (v - min) / (max - min);
  return {
    bars: counts.map((count, i) => ({
      lo: min + i * width,
      hi: min + (i + 1) * width,
      count,
      heightFrac: peak > 0 ? count / peak : 0,
    })),
    zeroFrac: frac(0),
    pointFrac: pointEstimate === null ? null : frac(pointEstimate),
    min,
    max,
  };
}
