/**
 * The nine built-in panels: normalized final reward against the budget
 * fraction, the number of arms, or the planning horizon, for random-arm and
 * counterexample scenarios.  Each panel names its source CSV (as written by
 * the experiment harness), its axes, and its output basename.
 */

export interface PanelSpec {
  name: string;
  csv: string; // file name under the results directory
  xColumn: "alpha" | "N" | "tau";
  groupColumn: "policy";
  title: string;
  xLabel: string;
  output: string; // basename, .svg/.png appended
  yDomain?: [number, number];
}

export const PANELS: PanelSpec[] = [
  {
    name: "fig1a", csv: "fig1a.csv", xColumn: "alpha", groupColumn: "policy",
    title: "Random arms: influence of the budget fraction",
    xLabel: "budget fraction", output: "fig1a",
  },
  {
    name: "fig1b", csv: "fig1b.csv", xColumn: "N", groupColumn: "policy",
    title: "Random arms: influence of the number of arms",
    xLabel: "number of arms", output: "fig1b",
  },
  {
    name: "fig1c", csv: "fig1c.csv", xColumn: "tau", groupColumn: "policy",
    title: "Random arms: influence of the planning horizon",
    xLabel: "planning horizon", output: "fig1c",
  },
  {
    name: "fig2a", csv: "fig2a.csv", xColumn: "N", groupColumn: "policy",
    title: "Eight-state counterexample: influence of the number of arms",
    xLabel: "number of arms", output: "fig2a",
  },
  {
    name: "fig2b", csv: "fig2b.csv", xColumn: "N", groupColumn: "policy",
    title: "Three-state counterexample: influence of the number of arms",
    xLabel: "number of arms", output: "fig2b",
  },
  {
    name: "fig2c", csv: "fig2c.csv", xColumn: "N", groupColumn: "policy",
    title: "Mixed counterexample: influence of the number of arms",
    xLabel: "number of arms", output: "fig2c",
  },
  {
    name: "fig3a", csv: "fig3a.csv", xColumn: "tau", groupColumn: "policy",
    title: "Eight-state counterexample: influence of the planning horizon",
    xLabel: "planning horizon", output: "fig3a",
  },
  {
    name: "fig3b", csv: "fig3b.csv", xColumn: "tau", groupColumn: "policy",
    title: "Three-state counterexample: influence of the planning horizon",
    xLabel: "planning horizon", output: "fig3b",
  },
  {
    name: "fig3c", csv: "fig3c.csv", xColumn: "tau", groupColumn: "policy",
    title: "Mixed counterexample: influence of the planning horizon",
    xLabel: "planning horizon", output: "fig3c",
  },
];

export function panelByName(name: string): PanelSpec {
  const panel = PANELS.find((p) => p.name === name);
  if (!panel) {
    throw new Error(
      `unknown panel ${name}; available: ${PANELS.map((p) => p.name).join(", ")}`,
    );
  }
  return panel;
}
