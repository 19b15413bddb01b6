import { Series } from "./aggregate.js";

const WIDTH = 720;
const HEIGHT = 480;
const MARGIN = { top: 30, right: 130, bottom: 50, left: 70 };

const COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

interface Scale {
  (v: number): number;
}

function linearScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const span = hi - lo || 1;
  return (v) => outLo + ((v - lo) / span) * (outHi - outLo);
}

function extent(series: Series[], pick: (p: { x: number; lo: number; hi: number }) => number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const s of series) {
    for (const p of s.points) {
      for (const v of pick(p)) {
        if (v < lo) lo = v;
        if (v > hi) hi = v;
      }
    }
  }
  if (!Number.isFinite(lo)) throw new Error("no data to plot");
  return [lo, hi];
}

function fmt(v: number): string {
  return Number.isInteger(v) ? String(v) : v.toPrecision(4);
}

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  logY?: boolean;
  bands?: boolean;
}

/** Multi-series line chart with optional confidence bands; returns SVG text. */
export function lineChart(series: Series[], opts: ChartOptions): string {
  if (series.length === 0 || series.every((s) => s.points.length === 0)) {
    throw new Error("no data to plot");
  }
  const toY = (v: number) => (opts.logY ? Math.log10(Math.max(v, 1e-12)) : v);
  const [x0, x1] = extent(series, (p) => [p.x]);
  const [y0, y1] = extent(series, (p) =>
    opts.bands ? [toY(p.lo), toY(p.hi)] : [toY(p.lo)],
  );
  const sx = linearScale(x0, x1, MARGIN.left, WIDTH - MARGIN.right);
  const sy = linearScale(y0, y1, HEIGHT - MARGIN.bottom, MARGIN.top);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" font-family="sans-serif" font-size="12">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    `<text x="${WIDTH / 2}" y="18" text-anchor="middle" font-size="14">${opts.title}</text>`,
    `<text x="${WIDTH / 2}" y="${HEIGHT - 10}" text-anchor="middle">${opts.xLabel}</text>`,
    `<text x="16" y="${HEIGHT / 2}" text-anchor="middle" transform="rotate(-90 16 ${HEIGHT / 2})">${opts.yLabel}</text>`,
  );
  // axes with 5 ticks each
  for (let i = 0; i <= 4; i++) {
    const xv = x0 + ((x1 - x0) * i) / 4;
    const yv = y0 + ((y1 - y0) * i) / 4;
    const px = sx(xv);
    const py = sy(yv);
    parts.push(
      `<line x1="${px}" y1="${HEIGHT - MARGIN.bottom}" x2="${px}" y2="${MARGIN.top}" stroke="#eee"/>`,
      `<text x="${px}" y="${HEIGHT - MARGIN.bottom + 16}" text-anchor="middle">${fmt(xv)}</text>`,
      `<line x1="${MARGIN.left}" y1="${py}" x2="${WIDTH - MARGIN.right}" y2="${py}" stroke="#eee"/>`,
      `<text x="${MARGIN.left - 6}" y="${py + 4}" text-anchor="end">${fmt(
        opts.logY ? 10 ** yv : yv,
      )}</text>`,
    );
  }
  series.forEach((s, i) => {
    const color = COLORS[i % COLORS.length];
    if (opts.bands && s.points.some((p) => p.hi > p.lo)) {
      const upper = s.points.map((p) => `${sx(p.x)},${sy(toY(p.hi))}`);
      const lower = [...s.points].reverse().map((p) => `${sx(p.x)},${sy(toY(p.lo))}`);
      parts.push(
        `<polygon points="${[...upper, ...lower].join(" ")}" fill="${color}" opacity="0.15"/>`,
      );
    }
    const line = s.points.map((p) => `${sx(p.x)},${sy(toY(p.mean))}`).join(" ");
    parts.push(
      `<polyline points="${line}" fill="none" stroke="${color}" stroke-width="1.5"/>`,
    );
    const ly = MARGIN.top + 16 * i;
    parts.push(
      `<line x1="${WIDTH - MARGIN.right + 8}" y1="${ly}" x2="${WIDTH - MARGIN.right + 28}" y2="${ly}" stroke="${color}" stroke-width="1.5"/>`,
      `<text x="${WIDTH - MARGIN.right + 34}" y="${ly + 4}">${s.label}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n");
}

/** Bar chart for windowed fractions (contraction family). */
export function barChart(series: Series, opts: ChartOptions): string {
  if (series.points.length === 0) throw new Error("no data to plot");
  const [x0, x1] = extent([series], (p) => [p.x]);
  const sy = linearScale(0, 1, HEIGHT - MARGIN.bottom, MARGIN.top);
  const sx = linearScale(x0, x1, MARGIN.left, WIDTH - MARGIN.right);
  const bw = Math.max(
    4,
    ((WIDTH - MARGIN.left - MARGIN.right) / series.points.length) * 0.8,
  );
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" font-family="sans-serif" font-size="12">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    `<text x="${WIDTH / 2}" y="18" text-anchor="middle" font-size="14">${opts.title}</text>`,
    `<text x="${WIDTH / 2}" y="${HEIGHT - 10}" text-anchor="middle">${opts.xLabel}</text>`,
    `<text x="16" y="${HEIGHT / 2}" text-anchor="middle" transform="rotate(-90 16 ${HEIGHT / 2})">${opts.yLabel}</text>`,
  );
  for (let i = 0; i <= 4; i++) {
    const frac = i / 4;
    const py = sy(frac);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${py}" x2="${WIDTH - MARGIN.right}" y2="${py}" stroke="#eee"/>`,
      `<text x="${MARGIN.left - 6}" y="${py + 4}" text-anchor="end">${frac}</text>`,
    );
  }
  for (const p of series.points) {
    const px = sx(p.x) - bw / 2;
    const py = sy(p.mean);
    parts.push(
      `<rect x="${px}" y="${py}" width="${bw}" height="${HEIGHT - MARGIN.bottom - py}" fill="${COLORS[0]}"/>`,
      `<text x="${px + bw / 2}" y="${HEIGHT - MARGIN.bottom + 16}" text-anchor="middle">${p.x}</text>`,
    );
  }
  parts.push("</svg>");
  return parts.join("\n");
}
