import Papa from "papaparse";

import {
  METRICS_FIELDS,
  SchemaError,
  TRACE_FIELDS,
  checkHeader,
  checkSchemaVersion,
} from "./schema.js";

export interface MetricsRow {
  schema_version: number;
  scheme: string;
  axis: string;
  axis_value: number;
  seed: number;
  slots: number;
  power_budget: number;
  arrival_rate: number;
  mean_queue: number;
  mean_delay_slots: number;
  mean_delay_s: number;
  drop_rate: number;
  mean_power: number;
  max_bs_power: number;
  contraction_fraction: number;
  mean_qsiwfa_iterations: number;
  throughput_pkts_per_slot: number;
}

export interface TraceRow {
  schema_version: number;
  slot: number;
  queue_mean: number;
  power_mean: number;
  gamma_mean: number;
  pattern_id: number;
  contraction_modulus: number;
  contraction_satisfied: number;
  qsiwfa_iterations: number;
  drops: number;
}

const METRICS_STRINGS = new Set(["scheme", "axis"]);

function parseTable(
  text: string,
  expected: readonly string[],
  stringColumns: Set<string>,
): Record<string, string | number>[] {
  if (text.trim() === "") {
    throw new SchemaError("no data: empty CSV");
  }
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`CSV parse error: ${parsed.errors[0].message}`);
  }
  const rows = parsed.data;
  if (rows.length === 0) {
    throw new SchemaError("no data: empty CSV");
  }
  checkHeader(rows[0], expected);
  if (rows.length === 1) {
    throw new SchemaError("no data: header-only CSV");
  }
  return rows.slice(1).map((cells, line) => {
    const out: Record<string, string | number> = {};
    expected.forEach((name, i) => {
      if (stringColumns.has(name)) {
        out[name] = cells[i];
        return;
      }
      const value = Number(cells[i]);
      if (cells[i] === undefined || (Number.isNaN(value) && cells[i] !== "nan")) {
        throw new SchemaError(
          `row ${line + 2}: column "${name}" is not numeric: "${cells[i]}"`,
        );
      }
      out[name] = value;
    });
    return out;
  });
}

export function parseMetricsCsv(text: string): MetricsRow[] {
  const rows = parseTable(text, METRICS_FIELDS, METRICS_STRINGS) as unknown as MetricsRow[];
  checkSchemaVersion(rows);
  return rows;
}

export function parseTraceCsv(text: string): TraceRow[] {
  const rows = parseTable(text, TRACE_FIELDS, new Set()) as unknown as TraceRow[];
  checkSchemaVersion(rows);
  return rows;
}
