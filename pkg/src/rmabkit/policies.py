"""Policies mapping joint states to budget-feasible joint actions.

Every policy is an immutable object whose ``decide(state, rng)`` is
reentrant; randomness comes only from the caller's generator, so identical
seeds reproduce identical trajectories.

* ``lp_update_policy``: re-plans the tau-horizon fluid problem from the
  current one-hot state at every step and rounds the first step's pull
  probabilities (stateless model-predictive loop; an opt-in cache keyed by
  the joint state short-circuits repeat visits).
* ``lp_priority_policy``: static index order from the fixed point.  In
  at-most mode only nonnegative-index arms are pulled; in exactly mode the
  budget is always filled.
* ``id_reassignment_policy``: best-effort reimplementation of the
  arm-priority baseline: arms request their single-arm fixed-point action in
  a persistent service order, and budget-starved arms are promoted to the
  front of the order.  Heuristic, excluded from quantitative acceptance.
* ``random_feasible_policy``: uniform random budget-sized pull set.
"""

from __future__ import annotations

import numpy as np

from . import rounding
from .fixed_point import FixedPoint, PriorityIndexTable
from .horizon_plan import HorizonPlanner
from .model import Instance, one_hot


class Policy:
    def __init__(self, label, decide_fn):
        self.label = label
        self._decide = decide_fn

    def decide(self, joint_state, rng) -> np.ndarray:
        return self._decide(joint_state, rng)


def lp_update_policy(instance: Instance, fixed_point: FixedPoint, tau: int,
                     rounding_mode="randomized", budget_mode=None,
                     cache_plans=False) -> Policy:
    if tau < 1:
        raise ValueError("tau must be >= 1")
    mode = budget_mode or instance.budget_mode
    planner = HorizonPlanner(instance, tau, fixed_point.mu, mode)
    max_pulls = instance.max_pulls()
    cap = instance.budget_units() if mode == "at-most" else float(max_pulls)
    cache = {} if cache_plans else None

    def decide(joint_state, rng):
        key = tuple(int(s) for s in joint_state)
        profile = cache.get(key) if cache is not None else None
        if profile is None:
            profile = planner.plan_profile(joint_state)
            if cache is not None:
                cache[key] = profile
        if rounding_mode == "water-filling":
            return rounding.round_water_filling(profile, float(max_pulls), rng)
        return rounding.round_budgeted(profile, cap, rng)

    return Policy(f"lp-update-{tau}", decide)


def lp_priority_policy(instance: Instance, index_table: PriorityIndexTable,
                       budget_mode=None) -> Policy:
    mode = budget_mode or instance.budget_mode
    max_pulls = instance.max_pulls()

    def decide(joint_state, rng):
        scores = np.array(
            [index_table.score(n, s) for n, s in enumerate(joint_state)]
        )
        order = np.lexsort((np.arange(len(scores)), -scores))
        A = np.zeros(len(scores), dtype=int)
        taken = 0
        for n in order:
            if taken >= max_pulls:
                break
            if mode == "at-most" and scores[n] < 0.0:
                break
            A[n] = 1
            taken += 1
        return A

    return Policy("lp-priority", decide)


def id_reassignment_policy(instance: Instance, fixed_point: FixedPoint) -> Policy:
    x_star = fixed_point.stationary_distribution()
    pull_prob = []
    for y, x in zip(fixed_point.y_star, x_star):
        p = np.zeros_like(x)
        mask = x > 1e-12
        p[mask] = np.clip(y[1][mask] / x[mask], 0.0, 1.0)
        pull_prob.append(p)
    max_pulls = instance.max_pulls()
    exactly = instance.budget_mode == "exactly"
    # service order is deliberately mutable shared state: the reassignment
    # IS the policy; concurrent trajectories need separate policy objects
    order = list(range(instance.num_arms))

    def decide(joint_state, rng):
        A = np.zeros(instance.num_arms, dtype=int)
        wants = [rng.random() < pull_prob[n][joint_state[n]] for n in range(len(A))]
        starved = []
        budget = max_pulls
        for n in order:
            if wants[n] and budget > 0:
                A[n] = 1
                budget -= 1
            elif wants[n]:
                starved.append(n)
        if exactly and budget > 0:
            for n in order:
                if budget == 0:
                    break
                if A[n] == 0:
                    A[n] = 1
                    budget -= 1
        if starved:
            rest = [n for n in order if n not in starved]
            order[:] = starved + rest
        return A

    return Policy("id-reassign", decide)


def random_feasible_policy(instance: Instance) -> Policy:
    max_pulls = instance.max_pulls()

    def decide(joint_state, rng):
        A = np.zeros(instance.num_arms, dtype=int)
        if max_pulls > 0:
            A[rng.choice(instance.num_arms, size=max_pulls, replace=False)] = 1
        return A

    return Policy("random", decide)


def make_policy(name, instance, fixed_point=None, index_table=None, tau=4,
                rounding_mode="randomized") -> Policy:
    """Policy factory used by the CLI; name in
    {lp-update, lp-priority, id-reassign, random}."""
    if name == "lp-update":
        return lp_update_policy(instance, fixed_point, tau, rounding_mode)
    if name == "lp-priority":
        return lp_priority_policy(instance, index_table)
    if name == "id-reassign":
        return id_reassignment_policy(instance, fixed_point)
    if name == "random":
        return random_feasible_policy(instance)
    raise ValueError(f"unknown policy {name!r}")
