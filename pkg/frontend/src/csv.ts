/**
 * Reader for the simulation results CSV.
 *
 * Schema (one row per recorded step):
 *   scenario,policy,N,alpha,tau,seed,t,avg_reward,normalized_reward
 * The tau column is blank for policies that do not take a planning horizon.
 * Fields never contain commas or quotes, so a plain split is exact.
 */

import { readFileSync } from "fs";

export interface ResultRow {
  scenario: string;
  policy: string;
  N: number;
  alpha: number;
  tau: number | null;
  seed: number;
  t: number;
  avg_reward: number;
  normalized_reward: number;
}

export const REQUIRED_COLUMNS = [
  "scenario", "policy", "N", "alpha", "tau", "seed", "t",
  "avg_reward", "normalized_reward",
] as const;

export function parseResultsCsv(path: string): ResultRow[] {
  const text = readFileSync(path, "utf8");
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new Error(`empty CSV: ${path}`);
  }
  const header = lines[0].split(",");
  const missing = REQUIRED_COLUMNS.filter((c) => !header.includes(c));
  if (missing.length > 0) {
    throw new Error(`missing columns in ${path}: ${missing.join(", ")}`);
  }
  if (lines.length === 1) {
    throw new Error(`no data rows in ${path}`);
  }
  const idx = Object.fromEntries(header.map((h, i) => [h, i]));
  const rows: ResultRow[] = [];
  for (const line of lines.slice(1)) {
    const f = line.split(",");
    rows.push({
      scenario: f[idx.scenario],
      policy: f[idx.policy],
      N: Number(f[idx.N]),
      alpha: Number(f[idx.alpha]),
      tau: f[idx.tau] === "" ? null : Number(f[idx.tau]),
      seed: Number(f[idx.seed]),
      t: Number(f[idx.t]),
      avg_reward: Number(f[idx.avg_reward]),
      normalized_reward: Number(f[idx.normalized_reward]),
    });
  }
  return rows;
}
