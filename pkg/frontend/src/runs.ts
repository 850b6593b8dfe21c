/** Loading and grouping of run-directory artifacts.
 *
 * A run directory is the output of one `nlmcmc run` invocation and holds
 * manifest.json plus trace.csv / final_samples.csv (and summary.json for
 * metric experiments). Everything here is read-only.
 */

import { readFileSync } from "fs";
import path from "path";

import { CsvTable, columnIndex, numericColumn, parseCsv } from "./csv.js";

export interface Manifest {
  label: string;
  status: string;
  seeds: number[];
  config: Record<string, unknown>;
  [key: string]: unknown;
}

export interface TracePoint {
  step: number;
  seed: number;
  mmd2: number;
}

export interface RunData {
  dir: string;
  manifest: Manifest;
  trace: TracePoint[];
}

export function loadManifest(dir: string): Manifest {
  const text = readFileSync(path.join(dir, "manifest.json"), "utf-8");
  return JSON.parse(text) as Manifest;
}

export function loadTrace(dir: string): TracePoint[] {
  const table = parseCsv(readFileSync(path.join(dir, "trace.csv"), "utf-8"));
  const steps = numericColumn(table, "step");
  const seeds = numericColumn(table, "seed");
  const mmd2 = numericColumn(table, "mmd2");
  return steps.map((step, i) => ({ step, seed: seeds[i], mmd2: mmd2[i] }));
}

export function loadRun(dir: string): RunData {
  return { dir, manifest: loadManifest(dir), trace: loadTrace(dir) };
}

export interface SampleCloud {
  /** one row per particle, one inner array per coordinate column x0..x{d-1} */
  coords: number[][];
  dim: number;
}

export function loadFinalSamples(dir: string, seed?: number): SampleCloud {
  const table: CsvTable = parseCsv(
    readFileSync(path.join(dir, "final_samples.csv"), "utf-8"),
  );
  const coordNames = table.header.filter((name) => /^x\d+$/.test(name));
  const dim = coordNames.length;
  const seedIdx = columnIndex(table, "seed");
  const idxs = coordNames.map((name) => columnIndex(table, name));
  const rows = table.rows.filter(
    (row) => seed === undefined || Number(row[seedIdx]) === seed,
  );
  return { coords: rows.map((row) => idxs.map((i) => Number(row[i]))), dim };
}

export interface PocPoint {
  N: number;
  bias_tv: number;
  std_err: number;
}

export interface PocSummary {
  points: PocPoint[];
  slope: number | null;
}

export function loadPocSummary(dir: string): PocSummary {
  const file = path.join(dir, "summary.json");
  let text: string;
  try {
    text = readFileSync(file, "utf-8");
  } catch {
    throw new Error(`missing summary.json in ${dir}`);
  }
  const payload = JSON.parse(text) as PocSummary;
  if (!payload.points || payload.points.length === 0) {
    throw new Error(`summary.json in ${dir} has an empty point list`);
  }
  return payload;
}

/** Per-step aggregation over seeds: median and population standard deviation. */
export interface StepBand {
  step: number;
  median: number;
  lo: number;
  hi: number;
}

function median(values: number[]): number {
  const sorted = [...values].sort((a, b) => a - b);
  const mid = Math.floor(sorted.length / 2);
  return sorted.length % 2 === 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
}

function stddev(values: number[]): number {
  const mean = values.reduce((a, b) => a + b, 0) / values.length;
  const sq = values.reduce((a, b) => a + (b - mean) ** 2, 0) / values.length;
  return Math.sqrt(sq);
}

export function seedBands(trace: TracePoint[]): StepBand[] {
  const bySeedStep = new Map<number, number[]>();
  for (const point of trace) {
    if (!Number.isFinite(point.mmd2)) continue;
    const bucket = bySeedStep.get(point.step) ?? [];
    bucket.push(point.mmd2);
    bySeedStep.set(point.step, bucket);
  }
  const steps = [...bySeedStep.keys()].sort((a, b) => a - b);
  return steps.map((step) => {
    const values = bySeedStep.get(step)!;
    const mid = median(values);
    const sd = stddev(values);
    return { step, median: mid, lo: mid - sd, hi: mid + sd };
  });
}
