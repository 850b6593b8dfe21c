/** Discrepancy-versus-step curves: one line per run, median over seeds with
 * a +-1 standard deviation band. */

import { RunData, StepBand, loadRun, seedBands } from "./runs.js";
import { PALETTE, drawLegend, makeFrame } from "./svg.js";

export interface MmdCurveOptions {
  width?: number;
  height?: number;
  logY?: boolean;
  title?: string;
}

export function renderMmdCurves(runs: RunData[], opts: MmdCurveOptions = {}): string {
  if (runs.length === 0) {
    throw new Error("need at least one run directory");
  }
  const width = opts.width ?? 640;
  const height = opts.height ?? 420;

  const bands = runs.map((run) => {
    const b = seedBands(run.trace);
    if (b.length === 0) {
      throw new Error(`run ${run.dir} has no finite mmd2 values`);
    }
    return b;
  });

  const grids = bands.map((b) => b.map((p) => p.step).join(","));
  if (new Set(grids).size > 1) {
    throw new Error("runs do not share a step grid");
  }

  const steps = bands[0].map((p) => p.step);
  const values = bands.flat();
  let lo = Math.min(...values.map((p) => p.lo));
  let hi = Math.max(...values.map((p) => p.hi));
  if (opts.logY) {
    const positive = values.map((p) => p.median).filter((v) => v > 0);
    lo = Math.min(...positive) / 2;
    hi = Math.max(...values.map((p) => p.hi), lo * 10);
  } else {
    lo = Math.min(lo, 0);
  }

  const frame = makeFrame(
    width,
    height,
    [Math.min(...steps), Math.max(...steps)],
    [lo, hi],
    {
      title: opts.title ?? "Squared MMD over steps (median, +-1 sd over seeds)",
      xLabel: "step",
      yLabel: "MMD^2",
      logY: opts.logY,
    },
  );

  const clamp = (v: number) => (opts.logY ? Math.max(v, lo) : v);
  runs.forEach((run, i) => {
    const color = PALETTE[i % PALETTE.length];
    const band: StepBand[] = bands[i];
    const upper = band.map((p): [number, number] => [frame.x.apply(p.step), frame.y.apply(clamp(p.hi))]);
    const lower = band
      .slice()
      .reverse()
      .map((p): [number, number] => [frame.x.apply(p.step), frame.y.apply(clamp(p.lo))]);
    frame.scene.polygon([...upper, ...lower], color, 0.18);
    frame.scene.polyline(
      band.map((p) => [frame.x.apply(p.step), frame.y.apply(clamp(p.median))]),
      color,
      2,
    );
  });
  drawLegend(
    frame,
    runs.map((run, i) => ({
      label: run.manifest.label || run.dir,
      color: PALETTE[i % PALETTE.length],
    })),
    width,
  );
  return frame.scene.render();
}

export function plotMmdCurves(runDirs: string[], opts: MmdCurveOptions = {}): string {
  return renderMmdCurves(runDirs.map(loadRun), opts);
}
