import { MetricsRow, TraceRow } from "./csv.js";
import { Interval, ci95 } from "./stats.js";

export interface SeriesPoint extends Interval {
  x: number;
}

export interface Series {
  label: string;
  points: SeriesPoint[];
}

/**
 * Groups metrics rows by scheme and sweep-axis value and aggregates the
 * chosen metric over seeds.  Points are sorted by x within each series.
 */
export function aggregateByScheme(
  rows: MetricsRow[],
  metric: keyof MetricsRow & string,
): Series[] {
  const groups = new Map<string, Map<number, number[]>>();
  for (const row of rows) {
    const value = row[metric];
    if (typeof value !== "number") {
      throw new Error(`metric "${metric}" is not numeric`);
    }
    const x = Number.isNaN(row.axis_value) ? row.power_budget : row.axis_value;
    let byX = groups.get(row.scheme);
    if (!byX) {
      byX = new Map();
      groups.set(row.scheme, byX);
    }
    const bucket = byX.get(x);
    if (bucket) bucket.push(value);
    else byX.set(x, [value]);
  }
  const series: Series[] = [];
  for (const [scheme, byX] of groups) {
    const points = [...byX.entries()]
      .sort((a, b) => a[0] - b[0])
      .map(([x, values]) => ({ x, ...ci95(values) }));
    series.push({ label: scheme, points });
  }
  series.sort((a, b) => a.label.localeCompare(b.label));
  return series;
}

/** Per-slot trace series (no seed aggregation, one line per column). */
export function traceSeries(
  rows: TraceRow[],
  columns: (keyof TraceRow & string)[],
): Series[] {
  return columns.map((column) => ({
    label: column,
    points: rows.map((row) => {
      const y = row[column];
      return { x: row.slot, mean: y, lo: y, hi: y, n: 1 };
    }),
  }));
}

/** Fraction of slots with the contraction condition satisfied, per window. */
export function contractionBars(rows: TraceRow[], windows = 10): Series {
  const T = rows.length;
  const size = Math.max(1, Math.floor(T / windows));
  const points: SeriesPoint[] = [];
  for (let start = 0; start < T; start += size) {
    const chunk = rows.slice(start, start + size);
    const frac =
      chunk.reduce((a, r) => a + r.contraction_satisfied, 0) / chunk.length;
    points.push({ x: start, mean: frac, lo: frac, hi: frac, n: chunk.length });
  }
  return { label: "contraction_satisfied", points };
}
