/** Hand-rolled SVG scene building: scales, axes, shapes. No DOM required. */

export interface Margin {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export const DEFAULT_MARGIN: Margin = { top: 42, right: 24, bottom: 48, left: 64 };

export const PALETTE = ["#4361ee", "#e63946", "#2d6a4f", "#f3722c", "#7209b7", "#118ab2"];

export class LinearScale {
  constructor(
    readonly d0: number,
    readonly d1: number,
    readonly r0: number,
    readonly r1: number,
    readonly log: boolean = false,
  ) {}

  private t(v: number): number {
    return this.log ? Math.log10(v) : v;
  }

  apply(v: number): number {
    const lo = this.t(this.d0);
    const hi = this.t(this.d1);
    const frac = hi === lo ? 0.5 : (this.t(v) - lo) / (hi - lo);
    return this.r0 + frac * (this.r1 - this.r0);
  }

  ticks(count = 6): number[] {
    if (this.log) {
      const lo = Math.ceil(Math.log10(this.d0));
      const hi = Math.floor(Math.log10(this.d1));
      const out: number[] = [];
      for (let e = lo; e <= hi; e++) out.push(10 ** e);
      return out.length >= 2 ? out : [this.d0, this.d1];
    }
    const span = this.d1 - this.d0;
    if (span <= 0) return [this.d0];
    const raw = span / count;
    const mag = 10 ** Math.floor(Math.log10(raw));
    const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= count) ?? mag * 10;
    const start = Math.ceil(this.d0 / step) * step;
    const out: number[] = [];
    for (let v = start; v <= this.d1 + 1e-12 * span; v += step) out.push(v);
    return out;
  }
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function fmtTick(v: number): string {
  if (v === 0) return "0";
  const abs = Math.abs(v);
  if (abs >= 1e4 || abs < 1e-3) return v.toExponential(0);
  return String(Number(v.toPrecision(4)));
}

/** Accumulates SVG elements and serializes the document deterministically. */
export class SvgScene {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {}

  raw(element: string): void {
    this.parts.push(element);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, extra = ""): void {
    this.raw(
      `<line x1="${r2(x1)}" y1="${r2(y1)}" x2="${r2(x2)}" y2="${r2(y2)}" stroke="${stroke}" ${extra}/>`,
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 1.5, extra = ""): void {
    const path = points.map(([x, y]) => `${r2(x)},${r2(y)}`).join(" ");
    this.raw(
      `<polyline points="${path}" fill="none" stroke="${stroke}" stroke-width="${width}" ${extra}/>`,
    );
  }

  polygon(points: Array<[number, number]>, fill: string, opacity = 0.25): void {
    const path = points.map(([x, y]) => `${r2(x)},${r2(y)}`).join(" ");
    this.raw(`<polygon points="${path}" fill="${fill}" opacity="${opacity}" stroke="none"/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string, extra = ""): void {
    this.raw(
      `<rect x="${r2(x)}" y="${r2(y)}" width="${r2(w)}" height="${r2(h)}" fill="${fill}" ${extra}/>`,
    );
  }

  circle(cx: number, cy: number, radius: number, fill: string): void {
    this.raw(`<circle cx="${r2(cx)}" cy="${r2(cy)}" r="${radius}" fill="${fill}"/>`);
  }

  text(x: number, y: number, content: string, extra = ""): void {
    this.raw(`<text x="${r2(x)}" y="${r2(y)}" ${extra}>${esc(content)}</text>`);
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">`,
      `<style>text{font-family:Helvetica,Arial,sans-serif;font-size:11px;fill:#333}.title{font-size:14px;font-weight:bold}</style>`,
      `<rect x="0" y="0" width="${this.width}" height="${this.height}" fill="white"/>`,
      ...this.parts,
      "</svg>",
      "",
    ].join("\n");
  }
}

function r2(v: number): string {
  return (Math.round(v * 100) / 100).toString();
}

export interface Frame {
  scene: SvgScene;
  x: LinearScale;
  y: LinearScale;
}

/** Axes, tick labels, grid and title for a standard plot frame. */
export function makeFrame(
  width: number,
  height: number,
  xDomain: [number, number],
  yDomain: [number, number],
  opts: { title: string; xLabel: string; yLabel: string; logX?: boolean; logY?: boolean },
  margin: Margin = DEFAULT_MARGIN,
): Frame {
  const scene = new SvgScene(width, height);
  const x = new LinearScale(xDomain[0], xDomain[1], margin.left, width - margin.right, opts.logX);
  const y = new LinearScale(yDomain[0], yDomain[1], height - margin.bottom, margin.top, opts.logY);

  scene.text(width / 2, margin.top - 18, opts.title, 'text-anchor="middle" class="title"');
  for (const tick of x.ticks()) {
    const px = x.apply(tick);
    scene.line(px, height - margin.bottom, px, margin.top, "#eee");
    scene.line(px, height - margin.bottom, px, height - margin.bottom + 4, "#333");
    scene.text(px, height - margin.bottom + 16, fmtTick(tick), 'text-anchor="middle"');
  }
  for (const tick of y.ticks()) {
    const py = y.apply(tick);
    scene.line(margin.left, py, width - margin.right, py, "#eee");
    scene.line(margin.left - 4, py, margin.left, py, "#333");
    scene.text(margin.left - 7, py + 3, fmtTick(tick), 'text-anchor="end"');
  }
  scene.line(margin.left, height - margin.bottom, width - margin.right, height - margin.bottom, "#333");
  scene.line(margin.left, height - margin.bottom, margin.left, margin.top, "#333");
  scene.text(width / 2, height - 12, opts.xLabel, 'text-anchor="middle"');
  scene.text(
    14,
    height / 2,
    opts.yLabel,
    `text-anchor="middle" transform="rotate(-90 14 ${height / 2})"`,
  );
  return { scene, x, y };
}

export function drawLegend(
  frame: Frame,
  entries: Array<{ label: string; color: string }>,
  width: number,
): void {
  entries.forEach((entry, i) => {
    const y = DEFAULT_MARGIN.top + 6 + i * 16;
    const x = width - DEFAULT_MARGIN.right - 150;
    frame.scene.line(x, y, x + 18, y, entry.color, 'stroke-width="2.5"');
    frame.scene.text(x + 24, y + 4, entry.label);
  });
}
