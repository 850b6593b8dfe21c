/** Log-log bias-versus-N scatter with error bars, fitted slope and a
 * reference line of slope -1. */

import { PocSummary, loadPocSummary } from "./runs.js";
import { drawLegend, makeFrame } from "./svg.js";

export interface PocSlopeOptions {
  width?: number;
  height?: number;
  title?: string;
}

export function renderPocSlope(summary: PocSummary, opts: PocSlopeOptions = {}): string {
  const width = opts.width ?? 560;
  const height = opts.height ?? 420;
  const points = summary.points;
  if (points.length === 0) {
    throw new Error("empty point list");
  }

  const ns = points.map((p) => p.N);
  const biases = points.map((p) => p.bias_tv);
  const frame = makeFrame(
    width,
    height,
    [Math.min(...ns) / 1.5, Math.max(...ns) * 1.5],
    [Math.min(...biases) / 2.5, Math.max(...biases) * 2.5],
    {
      title: opts.title ?? "single-particle TV bias vs N",
      xLabel: "particles N",
      yLabel: "TV bias",
      logX: true,
      logY: true,
    },
  );

  // reference line of slope -1 through the first point
  const [n0, b0] = [ns[0], biases[0]];
  const nEnd = Math.max(...ns) * 1.5;
  frame.scene.polyline(
    [
      [frame.x.apply(n0 / 1.5), frame.y.apply((b0 * 1.5 * n0) / n0)],
      [frame.x.apply(nEnd), frame.y.apply((b0 * n0) / nEnd)],
    ],
    "#999",
    1,
    'stroke-dasharray="5,4"',
  );

  for (const p of points) {
    const px = frame.x.apply(p.N);
    frame.scene.line(
      px,
      frame.y.apply(Math.max(p.bias_tv - p.std_err, 1e-300)),
      px,
      frame.y.apply(p.bias_tv + p.std_err),
      "#4361ee",
      'stroke-width="1.2"',
    );
    frame.scene.circle(px, frame.y.apply(p.bias_tv), 3.2, "#4361ee");
  }

  const entries = [{ label: "slope -1 reference", color: "#999" }];
  if (summary.slope !== null && points.length >= 2) {
    // fitted line through the log-log centroid
    const cx = ns.reduce((a, b) => a + Math.log(b), 0) / ns.length;
    const cy = biases.reduce((a, b) => a + Math.log(b), 0) / biases.length;
    const line = [Math.min(...ns) / 1.5, nEnd].map((n): [number, number] => {
      const logBias = cy + summary.slope! * (Math.log(n) - cx);
      return [frame.x.apply(n), frame.y.apply(Math.exp(logBias))];
    });
    frame.scene.polyline(line, "#e63946", 1.5);
    entries.push({ label: `fitted slope ${summary.slope.toFixed(2)}`, color: "#e63946" });
  }
  drawLegend(frame, entries, width);
  return frame.scene.render();
}

export function plotPocSlope(runDir: string, opts: PocSlopeOptions = {}): string {
  return renderPocSlope(loadPocSummary(runDir), opts);
}
