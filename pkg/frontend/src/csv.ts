/**
 * Reader for the simulator's CSV outputs: leading `#` manifest comment
 * lines, one header row, then data rows. Column sets are pinned to the
 * producer's schemas and validated before any figure renders.
 */

import * as fs from "fs";

export class SchemaError extends Error {}

export interface Table {
  /** manifest key -> value, from `# key: value` comment lines */
  manifest: Record<string, string>;
  columns: string[];
  rows: Record<string, string>[];
}

/** Pinned column sets, matching the simulator CLI. */
export const SCHEMAS = {
  faults: [
    "fault_idx", "target", "seq", "bit", "detected", "detector",
    "inject_cycle", "detect_cycle", "latency_ns",
  ],
  sweep: ["n_littles", "slowdown", "stall_fabric", "stall_starvation"],
  stalls: ["reason", "cycles"],
  result: [
    "workload", "seed", "n_littles", "fabric", "baseline_cycles",
    "checked_cycles", "slowdown", "stall_fabric", "stall_starvation",
    "stall_extraction", "segments", "mean_segment_len", "packets_accepted",
    "packets_delivered", "packets_in_flight", "perf_per_area",
  ],
} as const;

export type SchemaName = keyof typeof SCHEMAS;

export function parseCsv(text: string): Table {
  const manifest: Record<string, string> = {};
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  let i = 0;
  for (; i < lines.length && lines[i].startsWith("#"); i++) {
    const m = lines[i].match(/^#\s*([^:]+):\s*(.*)$/);
    if (m) manifest[m[1].trim()] = m[2].trim();
  }
  if (i >= lines.length) {
    throw new SchemaError("no header row: file is empty");
  }
  const columns = lines[i].split(",");
  const rows: Record<string, string>[] = [];
  for (i += 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    const row: Record<string, string> = {};
    columns.forEach((c, k) => (row[c] = parts[k] ?? ""));
    rows.push(row);
  }
  return { manifest, columns, rows };
}

export function loadCsv(path: string, schema: SchemaName): Table {
  const table = parseCsv(fs.readFileSync(path, "utf-8"));
  const expect = SCHEMAS[schema];
  for (const col of expect) {
    if (!table.columns.includes(col)) {
      throw new SchemaError(
        `${path}: missing column '${col}' for schema '${schema}'`,
      );
    }
  }
  for (const col of table.columns) {
    if (!(expect as readonly string[]).includes(col)) {
      throw new SchemaError(
        `${path}: unexpected column '${col}' for schema '${schema}'`,
      );
    }
  }
  if (table.rows.length === 0) {
    throw new SchemaError(`${path}: no data rows`);
  }
  return table;
}

export function numeric(table: Table, column: string): number[] {
  return table.rows.map((r) => {
    const v = Number(r[column]);
    if (Number.isNaN(v)) {
      throw new SchemaError(`non-numeric value '${r[column]}' in '${column}'`);
    }
    return v;
  });
}
