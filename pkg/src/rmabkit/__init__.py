"""Toolkit for heterogeneous restless bandits and weakly coupled MDPs:
stationary relaxations, receding-horizon planning, policy simulation, and
diagnostics for the associated performance bounds."""

from . import analysis, fixed_point, horizon_plan, lp_core, model, policies, \
    rounding, simulator, wmdp

__all__ = [
    "analysis", "fixed_point", "horizon_plan", "lp_core", "model",
    "policies", "rounding", "simulator", "wmdp",
]
