/** Square 2-d histogram of a final particle ensemble. */

import { loadFinalSamples, loadManifest } from "./runs.js";
import { SvgScene } from "./svg.js";

export interface Hist2dOptions {
  bins?: number;
  /** symmetric axis range [-range, range]; inferred from the data if absent */
  range?: number;
  seed?: number;
  sizePx?: number;
  title?: string;
}

export function renderHist2d(
  coords: number[][],
  dim: number,
  opts: Hist2dOptions = {},
): string {
  if (dim !== 2) {
    throw new Error(`hist2d needs 2 coordinate columns, found ${dim}`);
  }
  const bins = opts.bins ?? 48;
  const size = opts.sizePx ?? 420;
  const margin = { top: 40, side: 20, bottom: 28 };
  const range =
    opts.range ?? Math.max(...coords.flat().map(Math.abs), 1e-12) * 1.05;

  const counts = new Array(bins * bins).fill(0) as number[];
  for (const [cx, cy] of coords) {
    const ix = Math.floor(((cx + range) / (2 * range)) * bins);
    const iy = Math.floor(((cy + range) / (2 * range)) * bins);
    if (ix >= 0 && ix < bins && iy >= 0 && iy < bins) {
      counts[iy * bins + ix] += 1;
    }
  }
  const peak = Math.max(...counts, 1);

  const scene = new SvgScene(size + 2 * margin.side, size + margin.top + margin.bottom);
  scene.text(
    (size + 2 * margin.side) / 2,
    margin.top - 16,
    opts.title ?? "final ensemble",
    'text-anchor="middle" class="title"',
  );
  const cell = size / bins;
  for (let iy = 0; iy < bins; iy++) {
    for (let ix = 0; ix < bins; ix++) {
      const count = counts[iy * bins + ix];
      if (count === 0) continue;
      // dark-to-bright monochrome ramp; SVG y grows downward
      const level = Math.round(255 * Math.sqrt(count / peak));
      const fill = `rgb(${level},${Math.round(level * 0.7)},${255 - level})`;
      scene.rect(
        margin.side + ix * cell,
        margin.top + (bins - 1 - iy) * cell,
        cell + 0.5,
        cell + 0.5,
        fill,
      );
    }
  }
  scene.rect(margin.side, margin.top, size, size, "none", 'stroke="#333"');
  scene.text(margin.side, size + margin.top + 16, `[-${fmt(range)}, ${fmt(range)}]^2`);
  return scene.render();
}

function fmt(v: number): string {
  return String(Number(v.toPrecision(3)));
}

export function plotHist2d(runDir: string, opts: Hist2dOptions = {}): string {
  const cloud = loadFinalSamples(runDir, opts.seed);
  const manifest = loadManifest(runDir);
  return renderHist2d(cloud.coords, cloud.dim, {
    title: `${manifest.label || runDir} final ensemble`,
    ...opts,
  });
}
