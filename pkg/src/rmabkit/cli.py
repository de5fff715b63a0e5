"""Command-line entry point.

Subcommands: solve-fixed-point, plan, simulate, analyze, experiment,
list-scenarios.  Instances are given either as a JSON file path or as a
shorthand spec: ``random:SEED:N[:alpha]``, ``hong:N``, ``yan:N``,
``mixed:N``.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import analysis, experiments, fixed_point, horizon_plan, model, \
    policies, simulator, wmdp


def parse_instance_arg(spec, budget_mode="at-most"):
    if spec.endswith(".json"):
        return model.load_instance(spec)
    parts = spec.split(":")
    if parts[0] == "random":
        seed, n = int(parts[1]), int(parts[2])
        alpha = float(parts[3]) if len(parts) > 3 else 0.3
        return model.random_instance(seed=seed, N=n, alpha=alpha,
                                     budget_mode=budget_mode)
    if parts[0] in ("hong", "yan", "mixed"):
        return model.counterexample_instance(parts[0], int(parts[1]), budget_mode)
    raise SystemExit(f"cannot parse instance spec {spec!r}")


def _fp_to_dict(fp):
    return {
        "gain": fp.gain,
        "lambda_rel": fp.lambda_rel,
        "mu": [m.tolist() for m in fp.mu],
        "y_star": None if fp.y_star is None else [y.tolist() for y in fp.y_star],
        "method": fp.method,
    }


def cmd_solve_fixed_point(args):
    inst = parse_instance_arg(args.instance, args.budget_mode)
    fp = fixed_point.solve_fixed_point(inst)
    print(f"gain        {fp.gain:.10g}")
    print(f"lambda_rel  {fp.lambda_rel:.10g}")
    print(f"mu_inf      {fp.mu_inf():.10g}")
    if args.out:
        with open(args.out, "w") as f:
            json.dump(_fp_to_dict(fp), f, indent=1)
        print(f"wrote {args.out}")


def _parse_state(state_arg, inst, fp):
    if state_arg == "stationary":
        return fp.stationary_distribution()
    raw = json.loads(state_arg)
    if raw and isinstance(raw[0], (int, float)) and all(
        isinstance(v, int) or float(v).is_integer() for v in raw
    ):
        return model.one_hot(np.asarray(raw, dtype=int), inst)
    return [np.asarray(v, dtype=float) for v in raw]


def cmd_plan(args):
    inst = parse_instance_arg(args.instance, args.budget_mode)
    fp = fixed_point.solve_fixed_point(inst)
    x = _parse_state(args.state, inst, fp)
    plan = horizon_plan.plan(inst, x, args.tau, fp.mu, args.budget_mode)
    print(f"V_tau       {plan.value:.10g}")
    print("lambda_t    " + " ".join(f"{v:.6g}" for v in plan.lambdas))
    if args.out:
        doc = {
            "tau": plan.tau,
            "value": plan.value,
            "lambdas": plan.lambdas.tolist(),
            "flows": [f.tolist() for f in plan.flows],
            "terminal": [t.tolist() for t in plan.terminal],
        }
        with open(args.out, "w") as f:
            json.dump(doc, f, indent=1)
        print(f"wrote {args.out}")


def cmd_simulate(args):
    inst = parse_instance_arg(args.instance, args.budget_mode)
    fp = fixed_point.solve_fixed_point(inst)
    table = fixed_point.priority_index_table(inst, fp)
    records = []
    for rep in range(args.replicates):
        policy = policies.make_policy(args.policy, inst, fixed_point=fp,
                                      index_table=table, tau=args.tau,
                                      rounding_mode=args.rounding)
        records.append(simulator.run(inst, policy, args.T, seed=args.seed,
                                     replicate=rep))
    metric = simulator.normalized_metric(records, fp.gain)
    print(f"gain              {fp.gain:.10g}")
    print(f"normalized final  {metric.final_mean:.6g} +- {metric.final_ci95:.6g}")
    if args.out:
        f, writer = simulator.open_results_csv(args.out)
        with f:
            for rep, rec in enumerate(records):
                simulator.write_rows(writer, "simulate", rec.policy_label,
                                     inst.num_arms, inst.alpha,
                                     args.tau if args.policy == "lp-update" else None,
                                     rep, rec.rewards, fp.gain, stride=args.stride)
        print(f"wrote {args.out}")


def cmd_analyze(args):
    inst = parse_instance_arg(args.instance, args.budget_mode)
    out = {}
    if args.rho_k:
        rep = analysis.ergodicity_report(inst, k_max=args.rho_k)
        out["rho"] = {str(k): v for k, v in rep.rho.items()}
        out["rho_swapped"] = {str(k): v for k, v in rep.swapped.items()}
        out["k_star"] = rep.k_star
        if rep.k_star is not None:
            k = rep.k_star
            out["mu_bound"] = analysis.mu_bound(k, rep.rho[k], inst.alpha)
    if args.jensen is not None:
        fp = fixed_point.solve_fixed_point(inst)
        x = model.uniform_distribution(inst)
        est, ci = analysis.jensen_gap(inst, fp, x, args.jensen,
                                      args.jensen_samples, args.seed)
        out["jensen_gap"] = {"t": args.jensen, "estimate": est, "ci95": ci}
    if args.theorem_bound:
        eps, tau, k = args.theorem_bound
        rho, _, _ = analysis.ergodicity_coefficient(inst, int(k))
        if rho <= 0:
            out["theorem_bound"] = {"error": f"rho_{int(k)} = 0"}
        else:
            fp = fixed_point.solve_fixed_point(inst)
            tb = analysis.theorem_bound(eps, int(tau), int(k), rho, fp.mu_inf(),
                                        inst.num_arms, inst.alpha)
            out["theorem_bound"] = {
                "eps": tb.eps, "tau": tb.tau, "k": tb.k, "rho_k": tb.rho_k,
                "mu_inf": tb.mu_inf, "fluctuation_term": tb.fluctuation_term,
                "rounding_term": tb.rounding_term, "total": tb.total,
            }
    if args.brute_force:
        out["v_opt"] = analysis.brute_force_optimal(inst)
        fp = fixed_point.solve_fixed_point(inst)
        out["gain"] = fp.gain
    text = json.dumps(out, indent=1)
    print(text)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)


def cmd_experiment(args):
    spec = experiments.load_scenario(args.scenario)
    if args.replicates is not None:
        spec.replicates = args.replicates
    if args.T is not None:
        spec.T = args.T
    if args.seed is not None:
        spec.master_seed = args.seed
    if args.N:
        spec.n_list = [int(v) for v in args.N.split(",")]
    if args.stride is not None:
        spec.stride = args.stride
    csv_path, summary_path = experiments.run_experiment(spec, args.out,
                                                        workers=args.workers)
    print(f"wrote {csv_path}")
    print(f"wrote {summary_path}")


def cmd_list_scenarios(args):
    for name in experiments.list_scenarios():
        print(name)


def build_parser():
    p = argparse.ArgumentParser(prog="rmabkit")
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--budget-mode", choices=["at-most", "exactly"],
                   default="at-most")
    p.add_argument("--rounding", choices=["randomized", "water-filling"],
                   default="randomized")
    p.add_argument("--out", default=None)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve-fixed-point")
    sp.add_argument("--instance", required=True)
    sp.set_defaults(fn=cmd_solve_fixed_point)

    sp = sub.add_parser("plan")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--state", required=True,
                    help='JSON joint state / distributions, or "stationary"')
    sp.add_argument("--tau", type=int, required=True)
    sp.set_defaults(fn=cmd_plan)

    sp = sub.add_parser("simulate")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--policy", default="lp-update",
                    choices=["lp-update", "lp-priority", "id-reassign", "random"])
    sp.add_argument("--tau", type=int, default=4)
    sp.add_argument("--T", type=int, default=1000)
    sp.add_argument("--replicates", type=int, default=20)
    sp.add_argument("--stride", type=int, default=1)
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("analyze")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--rho-k", type=int, default=0,
                    help="report rho_k for k = 1..K")
    sp.add_argument("--jensen", type=int, default=None, metavar="T")
    sp.add_argument("--jensen-samples", type=int, default=64)
    sp.add_argument("--theorem-bound", type=float, nargs=3, default=None,
                    metavar=("EPS", "TAU", "K"))
    sp.add_argument("--brute-force", action="store_true")
    sp.set_defaults(fn=cmd_analyze)

    sp = sub.add_parser("experiment")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--replicates", type=int, default=None)
    sp.add_argument("--T", type=int, default=None)
    sp.add_argument("--N", default=None, help="comma-separated override")
    sp.add_argument("--stride", type=int, default=None)
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(fn=cmd_experiment)

    sp = sub.add_parser("list-scenarios")
    sp.set_defaults(fn=cmd_list_scenarios)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    # experiment output defaults to a directory, the rest to stdout-only
    if args.command == "experiment" and args.out is None:
        args.out = "results"
    return args.fn(args) or 0


if __name__ == "__main__":
    sys.exit(main())
