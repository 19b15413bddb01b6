/** Seed-aggregation statistics for plotted series. */

export function mean(xs: number[]): number {
  if (xs.length === 0) throw new Error("mean of empty sample");
  return xs.reduce((a, b) => a + b, 0) / xs.length;
}

export function sampleStd(xs: number[]): number {
  if (xs.length < 2) return 0;
  const m = mean(xs);
  const ss = xs.reduce((a, b) => a + (b - m) * (b - m), 0);
  return Math.sqrt(ss / (xs.length - 1));
}

export interface Interval {
  mean: number;
  lo: number;
  hi: number;
  n: number;
}

/** Normal-approximation 95% confidence interval over seeds. */
export function ci95(xs: number[]): Interval {
  const m = mean(xs);
  const half = xs.length > 1 ? (1.96 * sampleStd(xs)) / Math.sqrt(xs.length) : 0;
  return { mean: m, lo: m - half, hi: m + half, n: xs.length };
}
