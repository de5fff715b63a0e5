/**
 * Minimal deterministic SVG line charts: one line per series, a translucent
 * band of mean +- ci95 around it, fixed palette, y axis defaulting to
 * [0, 1.1] (the normalized metric can exceed one early but settles below).
 */

import type { Series } from "./aggregate.js";

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  yDomain?: [number, number];
  width?: number;
  height?: number;
}

export const DEFAULT_Y_DOMAIN: [number, number] = [0, 1.1];

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#e377c2", "#7f7f7f"];

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

function ticks(lo: number, hi: number, count: number): number[] {
  const out: number[] = [];
  for (let i = 0; i <= count; i++) out.push(lo + ((hi - lo) * i) / count);
  return out;
}

const fmt = (v: number) =>
  Math.abs(v) >= 1000 ? v.toFixed(0) : parseFloat(v.toPrecision(4)).toString();

export function renderChart(series: Series[], opts: ChartOptions): string {
  if (series.length === 0) throw new Error("no series to render");
  const width = opts.width ?? 640;
  const height = opts.height ?? 420;
  const m = { top: 40, right: 24, bottom: 48, left: 56 };
  const iw = width - m.left - m.right;
  const ih = height - m.top - m.bottom;

  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  let xLo = Math.min(...xs);
  let xHi = Math.max(...xs);
  if (xLo === xHi) {
    xLo -= 0.5;
    xHi += 0.5;
  }
  const [yLo, yHi] = opts.yDomain ?? DEFAULT_Y_DOMAIN;

  const px = (x: number) => m.left + ((x - xLo) / (xHi - xLo)) * iw;
  const py = (y: number) =>
    m.top + ih - ((Math.min(Math.max(y, yLo), yHi) - yLo) / (yHi - yLo)) * ih;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    `<text x="${width / 2}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">${esc(opts.title)}</text>`,
  );

  for (const tv of ticks(yLo, yHi, 5)) {
    const y = py(tv);
    parts.push(
      `<line x1="${m.left}" y1="${y}" x2="${m.left + iw}" y2="${y}" stroke="#dddddd" stroke-width="1"/>`,
      `<text x="${m.left - 8}" y="${y + 4}" text-anchor="end" font-family="sans-serif" font-size="11">${fmt(tv)}</text>`,
    );
  }
  for (const tv of ticks(xLo, xHi, Math.min(6, Math.max(1, xs.length - 1)))) {
    const x = px(tv);
    parts.push(
      `<line x1="${x}" y1="${m.top + ih}" x2="${x}" y2="${m.top + ih + 5}" stroke="#333333"/>`,
      `<text x="${x}" y="${m.top + ih + 20}" text-anchor="middle" font-family="sans-serif" font-size="11">${fmt(tv)}</text>`,
    );
  }
  parts.push(
    `<rect x="${m.left}" y="${m.top}" width="${iw}" height="${ih}" fill="none" stroke="#333333"/>`,
    `<text x="${m.left + iw / 2}" y="${height - 10}" text-anchor="middle" font-family="sans-serif" font-size="13">${esc(opts.xLabel)}</text>`,
    `<text x="16" y="${m.top + ih / 2}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 16 ${m.top + ih / 2})">${esc(opts.yLabel)}</text>`,
  );

  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const pts = s.points;
    if (pts.length === 0) return;
    if (pts.some((p) => p.ci95 > 0)) {
      const upper = pts.map((p) => `${px(p.x)},${py(p.mean + p.ci95)}`);
      const lower = [...pts].reverse().map((p) => `${px(p.x)},${py(p.mean - p.ci95)}`);
      parts.push(
        `<polygon points="${upper.join(" ")} ${lower.join(" ")}" fill="${color}" opacity="0.15"/>`,
      );
    }
    const line = pts.map((p) => `${px(p.x)},${py(p.mean)}`).join(" ");
    const dash = s.flat ? ` stroke-dasharray="6 3"` : "";
    parts.push(
      `<polyline points="${line}" fill="none" stroke="${color}" stroke-width="2"${dash}/>`,
    );
    for (const p of pts) {
      parts.push(`<circle cx="${px(p.x)}" cy="${py(p.mean)}" r="2.5" fill="${color}"/>`);
    }
  });

  // legend: stacked entries, top-left inside the plot area
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const y = m.top + 14 + i * 16;
    parts.push(
      `<line x1="${m.left + 10}" y1="${y - 4}" x2="${m.left + 34}" y2="${y - 4}" stroke="${color}" stroke-width="2"/>`,
      `<text x="${m.left + 40}" y="${y}" font-family="sans-serif" font-size="12">${esc(s.label)}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n");
}
