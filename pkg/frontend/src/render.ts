import { mkdirSync, writeFileSync } from "fs";
import path from "path";

import { Resvg } from "@resvg/resvg-js";

import { aggregate } from "./aggregate.js";
import { parseResultsCsv } from "./csv.js";
import type { PanelSpec } from "./panels.js";
import { renderChart } from "./svg.js";

export interface RenderResult {
  svgPath: string;
  pngPath: string;
  seriesCount: number;
}

/** Render one panel from a results directory into SVG and PNG files. */
export function renderPanel(spec: PanelSpec, csvDir: string,
                            outDir: string): RenderResult {
  const rows = parseResultsCsv(path.join(csvDir, spec.csv));
  const series = aggregate(rows, spec.xColumn, spec.groupColumn);
  const svg = renderChart(series, {
    title: spec.title,
    xLabel: spec.xLabel,
    yLabel: "normalized average reward",
    yDomain: spec.yDomain,
  });
  mkdirSync(outDir, { recursive: true });
  const svgPath = path.join(outDir, `${spec.output}.svg`);
  const pngPath = path.join(outDir, `${spec.output}.png`);
  writeFileSync(svgPath, svg);
  const png = new Resvg(svg, { fitTo: { mode: "width", value: 960 } }).render();
  writeFileSync(pngPath, png.asPng());
  return { svgPath, pngPath, seriesCount: series.length };
}
