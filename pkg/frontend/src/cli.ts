/**
 * Panel renderer CLI.
 *
 * Usage:
 *   node dist/cli.js --csv-dir results --out-dir figures [--panel fig2b]
 *
 * Without --panel, renders every built-in panel whose CSV exists in the
 * results directory and reports the ones skipped.
 */

import { existsSync } from "fs";
import path from "path";

import { PANELS, panelByName } from "./panels.js";
import { renderPanel } from "./render.js";

function parseArgs(argv: string[]) {
  const opts: { csvDir: string; outDir: string; panel?: string } = {
    csvDir: "results",
    outDir: "figures",
  };
  for (let i = 0; i < argv.length; i++) {
    switch (argv[i]) {
      case "--csv-dir": opts.csvDir = argv[++i]; break;
      case "--out-dir": opts.outDir = argv[++i]; break;
      case "--panel": opts.panel = argv[++i]; break;
      default:
        throw new Error(`unknown argument ${argv[i]}`);
    }
  }
  return opts;
}

function main() {
  const opts = parseArgs(process.argv.slice(2));
  const panels = opts.panel ? [panelByName(opts.panel)] : PANELS;
  let rendered = 0;
  for (const panel of panels) {
    const csvPath = path.join(opts.csvDir, panel.csv);
    if (!existsSync(csvPath)) {
      if (opts.panel) throw new Error(`missing CSV ${csvPath}`);
      console.log(`skip ${panel.name}: no ${csvPath}`);
      continue;
    }
    const res = renderPanel(panel, opts.csvDir, opts.outDir);
    console.log(`${panel.name}: ${res.svgPath} + ${res.pngPath} ` +
                `(${res.seriesCount} series)`);
    rendered++;
  }
  if (rendered === 0) {
    throw new Error("nothing rendered");
  }
}

main();
