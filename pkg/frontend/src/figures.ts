/**
 * The four figure renderers. Each consumes pinned-schema CSV files produced
 * by the simulator CLI, never recomputes simulation quantities, and emits a
 * deterministic SVG string.
 */

import { SchemaError, Table, loadCsv, numeric } from "./csv.js";
import { MARGIN, PALETTE, PLOT_H, PLOT_W, Svg, niceMax } from "./svg.js";

export const BIN_NS = 50; // fixed histogram bin width, nanoseconds

function mean(xs: number[]): number {
  return xs.reduce((a, b) => a + b, 0) / xs.length;
}

function percentile(xs: number[], p: number): number {
  const sorted = [...xs].sort((a, b) => a - b);
  const idx = Math.min(sorted.length - 1,
                       Math.ceil((p / 100) * sorted.length) - 1);
  return sorted[Math.max(0, idx)];
}

/** Detection-latency density: fixed 50 ns bins with mean and p99.9 marks. */
export function latencyDensity(paths: string[]): string {
  const table = loadCsv(paths[0], "faults");
  const detected = table.rows.filter((r) => r.detected === "1");
  if (detected.length === 0) {
    throw new SchemaError(`${paths[0]}: no detected faults to plot`);
  }
  const lats = detected.map((r) => Number(r.latency_ns));
  const nBins = Math.max(1, Math.floor(Math.max(...lats) / BIN_NS) + 1);
  const bins = new Array<number>(nBins).fill(0);
  for (const v of lats) bins[Math.floor(v / BIN_NS)] += 1;
  const density = bins.map((c) => c / lats.length);

  const workload = table.manifest.workload ?? "workload";
  const svg = new Svg(`Detection latency density: ${workload} ` +
                      `(${lats.length} faults, ${BIN_NS} ns bins)`);
  svg.axes("detection latency (ns)", "fraction of faults");
  const yMax = niceMax(Math.max(...density));
  const xMax = nBins * BIN_NS;
  svg.yTicks(yMax, (v) => v.toFixed(2));
  const bw = PLOT_W / nBins;
  density.forEach((d, i) => {
    const h = (d / yMax) * PLOT_H;
    svg.rect(MARGIN.left + i * bw, MARGIN.top + PLOT_H - h,
             Math.max(bw - 1, 0.5), h, PALETTE[0]);
  });
  for (let i = 0; i <= 5; i++) {
    const x = MARGIN.left + (PLOT_W * i) / 5;
    svg.text(x, MARGIN.top + PLOT_H + 16, ((xMax * i) / 5).toFixed(0),
             { anchor: "middle", size: 10 });
  }
  const marks: Array<[string, number, string]> = [
    ["mean", mean(lats), "#b55451"],
    ["p99.9", percentile(lats, 99.9), "#5ea45e"],
  ];
  marks.forEach(([label, v, color], k) => {
    const x = MARGIN.left + (v / xMax) * PLOT_W;
    svg.line(x, MARGIN.top, x, MARGIN.top + PLOT_H, color, 1.4, "5,3");
    svg.text(x + 4, MARGIN.top + 14 + 14 * k,
             `${label} = ${v.toFixed(0)} ns`, { size: 11, fill: color });
  });
  return svg.render();
}

/** Slowdown versus checker count, one bar per count. */
export function scalabilityBars(paths: string[]): string {
  const table = loadCsv(paths[0], "sweep");
  const counts = numeric(table, "n_littles");
  const slowdowns = numeric(table, "slowdown");
  const workload = table.manifest.workload ?? "workload";
  const svg = new Svg(`Slowdown vs little-core count: ${workload}`);
  svg.axes("little cores", "slowdown");
  const yMax = niceMax(Math.max(...slowdowns));
  svg.yTicks(yMax, (v) => v.toFixed(2));
  const n = counts.length;
  const slot = PLOT_W / n;
  counts.forEach((c, i) => {
    const h = (slowdowns[i] / yMax) * PLOT_H;
    const x = MARGIN.left + i * slot + slot * 0.2;
    svg.rect(x, MARGIN.top + PLOT_H - h, slot * 0.6, h, PALETTE[0]);
    svg.text(MARGIN.left + i * slot + slot / 2, MARGIN.top + PLOT_H + 16,
             String(c), { anchor: "middle", size: 11 });
    svg.text(MARGIN.left + i * slot + slot / 2,
             MARGIN.top + PLOT_H - h - 6, slowdowns[i].toFixed(3),
             { anchor: "middle", size: 10 });
  });
  return svg.render();
}

const STALL_REASONS = ["FabricBackpressure", "CheckerStarvation",
                       "StatusExtraction"];

/** Stacked stall-cycle decomposition, one bar per input stalls.csv. */
export function stallDecomposition(paths: string[]): string {
  const tables = paths.map((p) => loadCsv(p, "stalls"));
  const labels = tables.map((t, i) => t.manifest.workload ?? `run ${i}`);
  const byReason = tables.map((t) => {
    const m: Record<string, number> = {};
    for (const row of t.rows) m[row.reason] = Number(row.cycles);
    for (const r of STALL_REASONS) {
      if (!(r in m)) throw new SchemaError(`missing stall reason '${r}'`);
    }
    return m;
  });
  const totals = byReason.map((m) =>
    STALL_REASONS.reduce((a, r) => a + m[r], 0));
  const svg = new Svg("Backpressure decomposition (stall cycles)");
  svg.axes("workload", "stall cycles");
  const yMax = niceMax(Math.max(...totals, 1));
  svg.yTicks(yMax, (v) => v.toFixed(0));
  const slot = PLOT_W / tables.length;
  byReason.forEach((m, i) => {
    let y = MARGIN.top + PLOT_H;
    STALL_REASONS.forEach((reason, k) => {
      const h = (m[reason] / yMax) * PLOT_H;
      y -= h;
      svg.rect(MARGIN.left + i * slot + slot * 0.2, y, slot * 0.6, h,
               PALETTE[k]);
    });
    svg.text(MARGIN.left + i * slot + slot / 2, MARGIN.top + PLOT_H + 16,
             labels[i], { anchor: "middle", size: 10, rotate: 0 });
  });
  STALL_REASONS.forEach((reason, k) => {
    const x = MARGIN.left + 8;
    const y = MARGIN.top + 10 + 16 * k;
    svg.rect(x, y - 9, 10, 10, PALETTE[k]);
    svg.text(x + 16, y, reason, { size: 11 });
  });
  return svg.render();
}

/** Performance-per-area comparison across result.csv rows, grouped by
 * workload with one bar per configuration (n_littles labels the config). */
export function perfArea(paths: string[]): string {
  const tables = paths.map((p) => loadCsv(p, "result"));
  const rows = tables.flatMap((t) => t.rows);
  const workloads = [...new Set(rows.map((r) => r.workload))];
  const configs = [...new Set(rows.map((r) => `${r.n_littles} littles`))];
  if (configs.length > PALETTE.length) {
    throw new SchemaError(`too many configurations: ${configs.length}`);
  }
  const value = (w: string, c: string): number => {
    const row = rows.find(
      (r) => r.workload === w && `${r.n_littles} littles` === c);
    return row ? Number(row.perf_per_area) : 0;
  };
  const svg = new Svg("Checker performance per area");
  svg.axes("workload", "perf / area (1/mm²)");
  const yMax = niceMax(Math.max(...rows.map((r) => Number(r.perf_per_area))));
  svg.yTicks(yMax, (v) => v.toFixed(2));
  const slot = PLOT_W / workloads.length;
  const bw = (slot * 0.72) / configs.length;
  workloads.forEach((w, i) => {
    configs.forEach((c, k) => {
      const v = value(w, c);
      const h = (v / yMax) * PLOT_H;
      svg.rect(MARGIN.left + i * slot + slot * 0.14 + k * bw,
               MARGIN.top + PLOT_H - h, bw - 1, h, PALETTE[k]);
    });
    svg.text(MARGIN.left + i * slot + slot / 2, MARGIN.top + PLOT_H + 24,
             w, { anchor: "middle", size: 9, rotate: -18 });
  });
  configs.forEach((c, k) => {
    const x = MARGIN.left + PLOT_W - 110;
    const y = MARGIN.top + 10 + 16 * k;
    svg.rect(x, y - 9, 10, 10, PALETTE[k]);
    svg.text(x + 16, y, c, { size: 11 });
  });
  return svg.render();
}

export const FIGURES: Record<string, (paths: string[]) => string> = {
  "latency-density": latencyDensity,
  "scalability-bars": scalabilityBars,
  "stall-decomposition": stallDecomposition,
  "perf-area": perfArea,
};
