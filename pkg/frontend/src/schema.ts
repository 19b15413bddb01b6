/** Column contracts for the simulator's CSV outputs. */

export const SCHEMA_VERSION = 1;

export const METRICS_FIELDS = [
  "schema_version",
  "scheme",
  "axis",
  "axis_value",
  "seed",
  "slots",
  "power_budget",
  "arrival_rate",
  "mean_queue",
  "mean_delay_slots",
  "mean_delay_s",
  "drop_rate",
  "mean_power",
  "max_bs_power",
  "contraction_fraction",
  "mean_qsiwfa_iterations",
  "throughput_pkts_per_slot",
] as const;

export const TRACE_FIELDS = [
  "schema_version",
  "slot",
  "queue_mean",
  "power_mean",
  "gamma_mean",
  "pattern_id",
  "contraction_modulus",
  "contraction_satisfied",
  "qsiwfa_iterations",
  "drops",
] as const;

export class SchemaError extends Error {}

/**
 * Checks a parsed header against the expected column list; the error names
 * the first offending column so drift is diagnosable from the exit message.
 */
export function checkHeader(header: string[], expected: readonly string[]): void {
  for (let i = 0; i < expected.length; i++) {
    if (header[i] !== expected[i]) {
      throw new SchemaError(
        `schema mismatch at column ${i}: expected "${expected[i]}", got "${header[i] ?? "<missing>"}"`,
      );
    }
  }
  if (header.length > expected.length) {
    throw new SchemaError(
      `schema mismatch: unexpected extra column "${header[expected.length]}"`,
    );
  }
}

export function checkSchemaVersion(rows: { schema_version: number }[]): void {
  for (const row of rows) {
    if (row.schema_version !== SCHEMA_VERSION) {
      throw new SchemaError(
        `schema version ${row.schema_version} != ${SCHEMA_VERSION}`,
      );
    }
  }
}
