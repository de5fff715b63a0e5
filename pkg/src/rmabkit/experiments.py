"""Experiment harness: scenario grids over (N, alpha, tau, policy, seed).

A scenario names an instance source and the sweep lists; running one
produces a results CSV (schema in :mod:`rmabkit.simulator`) plus a summary
JSON with per-cell means and confidence intervals.  Initial states are
shared across policies within a replicate so curves are comparable, and
every stream is derived from the master seed, so identical specs give
byte-identical CSVs regardless of worker count.

Built-in scenarios (one per study panel) ship as TOML files next to this
module; tau-independent policies are simulated once per (N, alpha) and
emitted with a blank tau column.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import fixed_point, model, policies, simulator

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), "scenarios")
TAU_POLICIES = ("lp-update",)


@dataclass
class ExperimentSpec:
    name: str
    source: dict  # {"kind": "random"|"counterexample"|"file", ...}
    n_list: list
    alpha_list: list = field(default_factory=lambda: [None])  # None -> native
    tau_list: list = field(default_factory=lambda: [4])
    policy_list: list = field(default_factory=lambda: ["lp-update", "lp-priority"])
    T: int = 1000
    replicates: int = 20
    budget_mode: str = "exactly"
    rounding: str = "water-filling"
    master_seed: int = 2024
    stride: int = 1

    @classmethod
    def from_toml(cls, path):
        with open(path, "rb") as f:
            doc = tomllib.load(f)
        return cls(
            name=doc["name"],
            source=dict(doc["source"]),
            n_list=list(doc["N"]),
            alpha_list=list(doc.get("alpha", [None])),
            tau_list=list(doc.get("tau", [4])),
            policy_list=list(doc.get("policies", ["lp-update", "lp-priority"])),
            T=int(doc.get("T", 1000)),
            replicates=int(doc.get("replicates", 20)),
            budget_mode=doc.get("budget_mode", "exactly"),
            rounding=doc.get("rounding", "water-filling"),
            master_seed=int(doc.get("seed", 2024)),
            stride=int(doc.get("stride", 1)),
        )


def list_scenarios():
    if not os.path.isdir(SCENARIO_DIR):
        return []
    return sorted(
        os.path.splitext(f)[0] for f in os.listdir(SCENARIO_DIR) if f.endswith(".toml")
    )


def load_scenario(name) -> ExperimentSpec:
    path = os.path.join(SCENARIO_DIR, f"{name}.toml")
    if not os.path.exists(path):
        raise FileNotFoundError(f"unknown scenario {name!r}; "
                                f"available: {', '.join(list_scenarios())}")
    return ExperimentSpec.from_toml(path)


def build_instance(spec: ExperimentSpec, N, alpha):
    src = spec.source
    if src["kind"] == "random":
        inst = model.random_instance(
            seed=(int(src.get("seed", 0)), N), N=N,
            alpha=alpha if alpha is not None else 0.3,
            budget_mode=spec.budget_mode,
        )
    elif src["kind"] == "counterexample":
        inst = model.counterexample_instance(src["which"], N, spec.budget_mode)
        if alpha is not None:
            inst = model.Instance(arms=inst.arms, alpha=alpha,
                                  budget_mode=spec.budget_mode)
    elif src["kind"] == "file":
        inst = model.load_instance(src["path"])
        if alpha is not None:
            inst = model.Instance(arms=inst.arms, alpha=alpha,
                                  budget_mode=spec.budget_mode)
    else:
        raise ValueError(f"unknown source kind {src['kind']!r}")
    return inst


def _cell_key(spec, N_idx, alpha_idx, tau, policy):
    # seed-sequence entropy must be nonnegative ints; encode tau=None as 0
    return (spec.master_seed, N_idx, alpha_idx, 0 if tau is None else tau + 1,
            spec.policy_list.index(policy))


def _run_cell(spec: ExperimentSpec, N_idx, alpha_idx, tau, policy_name):
    """Simulate all replicates of one grid cell; returns rows + summary."""
    N = spec.n_list[N_idx]
    alpha = spec.alpha_list[alpha_idx]
    t0 = time.perf_counter()
    inst = build_instance(spec, N, alpha)
    fp = fixed_point.solve_fixed_point(inst)
    table = fixed_point.priority_index_table(inst, fp)

    def fresh_policy():
        return policies.make_policy(
            policy_name, inst, fixed_point=fp, index_table=table,
            tau=tau if tau is not None else 1, rounding_mode=spec.rounding,
        )

    # the reassignment baseline carries its service order across steps, so
    # each replicate gets its own copy; stateless policies are shared
    policy = fresh_policy()
    key = _cell_key(spec, N_idx, alpha_idx, tau, policy_name)
    records = []
    for rep in range(spec.replicates):
        if policy_name == "id-reassign" and rep > 0:
            policy = fresh_policy()
        init_rng = np.random.default_rng(
            np.random.SeedSequence((spec.master_seed, N_idx, alpha_idx, rep))
        )
        init = simulator.random_initial_state(inst, init_rng)
        records.append(
            simulator.run(inst, policy, spec.T, seed=key, replicate=rep,
                          initial_state=init)
        )
    metric = simulator.normalized_metric(records, fp.gain)
    elapsed = time.perf_counter() - t0
    return {
        "config": {"N": N, "alpha": inst.alpha, "tau": tau, "policy": policy.label},
        "g_star": fp.gain,
        "mean": metric.final_mean,
        "ci95": metric.final_ci95,
        "runtime_s": round(elapsed, 3),
        "rewards": [rec.rewards for rec in records],
        "label": policy.label,
        "N": N,
        "alpha": inst.alpha,
        "tau": tau,
    }


def iter_cells(spec: ExperimentSpec):
    for n_idx in range(len(spec.n_list)):
        for a_idx in range(len(spec.alpha_list)):
            for policy in spec.policy_list:
                if policy in TAU_POLICIES:
                    for tau in spec.tau_list:
                        yield (n_idx, a_idx, tau, policy)
                else:
                    yield (n_idx, a_idx, None, policy)


def run_experiment(spec: ExperimentSpec, out_dir, workers=1):
    """Run every cell; writes <name>.csv and <name>_summary.json in out_dir.
    Per-cell failures are recorded in the summary and do not stop the run."""
    os.makedirs(out_dir, exist_ok=True)
    cells = list(iter_cells(spec))
    results = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_cell, spec, *cell) for cell in cells]
            for cell, fut in zip(cells, futures):
                try:
                    results.append(fut.result())
                except Exception as exc:  # noqa: BLE001 - recorded per cell
                    results.append({"config": {"cell": cell}, "error": str(exc)})
    else:
        for cell in cells:
            try:
                results.append(_run_cell(spec, *cell))
            except Exception as exc:  # noqa: BLE001 - recorded per cell
                results.append({"config": {"cell": cell}, "error": str(exc)})

    csv_path = os.path.join(out_dir, f"{spec.name}.csv")
    f, writer = simulator.open_results_csv(csv_path)
    with f:
        for res in results:
            if "error" in res:
                continue
            for rep, rewards in enumerate(res["rewards"]):
                simulator.write_rows(
                    writer, spec.name, res["label"], res["N"], res["alpha"],
                    res["tau"], rep, rewards, res["g_star"], stride=spec.stride,
                )

    summary = {
        "scenario": spec.name,
        "cells": [
            {k: res[k] for k in ("config", "mean", "ci95", "runtime_s", "g_star")}
            if "error" not in res
            else {"config": res["config"], "error": res["error"]}
            for res in results
        ],
    }
    summary_path = os.path.join(out_dir, f"{spec.name}_summary.json")
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=1)
    return csv_path, summary_path
