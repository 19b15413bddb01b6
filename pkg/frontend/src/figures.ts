import { readFileSync, writeFileSync } from "node:fs";

import { aggregateByScheme, contractionBars, traceSeries } from "./aggregate.js";
import { parseMetricsCsv, parseTraceCsv } from "./csv.js";
import { barChart, lineChart } from "./svg.js";

export const FAMILIES = [
  "delay_vs_power",
  "delay_vs_loading",
  "convergence",
  "contraction",
] as const;

export type Family = (typeof FAMILIES)[number];

export interface FigureSpec {
  family: Family;
  input: string; // metrics CSV for sweep families, trace CSV otherwise
  output: string; // SVG path
}

export function renderToString(spec: FigureSpec): string {
  const text = readFileSync(spec.input, "utf8");
  switch (spec.family) {
    case "delay_vs_power": {
      const series = aggregateByScheme(parseMetricsCsv(text), "mean_delay_slots");
      return lineChart(series, {
        title: "Average delay per user vs transmit power budget",
        xLabel: "per-BS power budget (noise units)",
        yLabel: "mean delay (slots)",
        logY: true,
        bands: true,
      });
    }
    case "delay_vs_loading": {
      const series = aggregateByScheme(parseMetricsCsv(text), "mean_delay_slots");
      return lineChart(series, {
        title: "Average delay per user vs traffic loading",
        xLabel: "arrival rate (packets/s)",
        yLabel: "mean delay (slots)",
        logY: true,
        bands: true,
      });
    }
    case "convergence": {
      const rows = parseTraceCsv(text);
      const series = traceSeries(rows, ["queue_mean", "power_mean", "gamma_mean"]);
      return lineChart(series, {
        title: "Learning trajectories vs slot index",
        xLabel: "slot",
        yLabel: "value",
      });
    }
    case "contraction": {
      const rows = parseTraceCsv(text);
      return barChart(contractionBars(rows), {
        title: "Contraction condition satisfied per window",
        xLabel: "window start slot",
        yLabel: "fraction of slots",
      });
    }
  }
}

export function render(spec: FigureSpec): void {
  writeFileSync(spec.output, renderToString(spec) + "\n");
}
