import { describe, expect, it } from "vitest";

import { aggregateByScheme, contractionBars, traceSeries } from "../src/aggregate.js";
import { parseMetricsCsv, parseTraceCsv } from "../src/csv.js";
import { ci95, mean, sampleStd } from "../src/stats.js";
import { metricsCsv, traceCsv } from "./csv.test.js";

describe("stats", () => {
  it("matches hand-computed values", () => {
    expect(mean([1, 2, 3, 4])).toBe(2.5);
    expect(sampleStd([1, 2, 3, 4])).toBeCloseTo(Math.sqrt(5 / 3), 12);
    const iv = ci95([2, 4, 6]);
    expect(iv.mean).toBe(4);
    expect(iv.hi - iv.mean).toBeCloseTo((1.96 * 2) / Math.sqrt(3), 12);
  });

  it("degrades gracefully for single samples", () => {
    const iv = ci95([7]);
    expect(iv.lo).toBe(7);
    expect(iv.hi).toBe(7);
  });
});

describe("aggregateByScheme", () => {
  const rows = parseMetricsCsv(
    metricsCsv([
      { scheme: "fca", axis_value: 1, seed: 0, mean_delay_slots: 10 },
      { scheme: "fca", axis_value: 1, seed: 1, mean_delay_slots: 14 },
      { scheme: "fca", axis_value: 2, seed: 0, mean_delay_slots: 6 },
      { scheme: "fca", axis_value: 2, seed: 1, mean_delay_slots: 8 },
      { scheme: "proposed", axis_value: 2, seed: 0, mean_delay_slots: 1 },
      { scheme: "proposed", axis_value: 1, seed: 0, mean_delay_slots: 2 },
    ]),
  );

  it("aggregates equal an independent recomputation within 1e-9", () => {
    const series = aggregateByScheme(rows, "mean_delay_slots");
    const fca = series.find((s) => s.label === "fca")!;
    // independent recomputation straight from the raw samples
    const samples: Record<number, number[]> = { 1: [10, 14], 2: [6, 8] };
    for (const point of fca.points) {
      const xs = samples[point.x];
      const m = xs.reduce((a, b) => a + b, 0) / xs.length;
      const sd = Math.sqrt(
        xs.reduce((a, b) => a + (b - m) ** 2, 0) / (xs.length - 1),
      );
      const half = (1.96 * sd) / Math.sqrt(xs.length);
      expect(Math.abs(point.mean - m)).toBeLessThan(1e-9);
      expect(Math.abs(point.hi - (m + half))).toBeLessThan(1e-9);
      expect(Math.abs(point.lo - (m - half))).toBeLessThan(1e-9);
    }
  });

  it("sorts points by x and series by label", () => {
    const series = aggregateByScheme(rows, "mean_delay_slots");
    expect(series.map((s) => s.label)).toEqual(["fca", "proposed"]);
    expect(series[1].points.map((p) => p.x)).toEqual([1, 2]);
  });
});

describe("trace aggregation", () => {
  it("builds per-column slot series", () => {
    const rows = parseTraceCsv(
      traceCsv([{ queue_mean: 1 }, { queue_mean: 3 }, { queue_mean: 2 }]),
    );
    const series = traceSeries(rows, ["queue_mean"]);
    expect(series[0].points.map((p) => p.mean)).toEqual([1, 3, 2]);
  });

  it("windows contraction fractions", () => {
    const rows = parseTraceCsv(
      traceCsv(
        Array.from({ length: 20 }, (_, t) => ({
          contraction_satisfied: t < 10 ? 1 : 0,
        })),
      ),
    );
    const bars = contractionBars(rows, 2);
    expect(bars.points.map((p) => p.mean)).toEqual([1, 0]);
  });
});
