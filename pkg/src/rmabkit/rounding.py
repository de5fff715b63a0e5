"""Rounding of fractional activation profiles into feasible joint actions.

``round_budgeted`` uses systematic (low-variance) sampling: one uniform draw
places the points {U, U+1, ...} on the cumulative profile, activating the
arms whose segment catches a point.  Marginals are exact and the number of
activations is the floor or ceiling of the profile mass; a final truncation
enforces the hard integer cap, which costs at most the fractional part of
the budget in aggregate marginal error.

``round_water_filling`` is the deterministic comparison variant: descending
profile order, count-based fill, one randomized boundary arm when the budget
is fractional.

``round_wmdp`` handles multi-action arms: each arm samples independently
from its shrunk conditional action distribution, with the leftover mass on
the always-feasible action; a cost-greedy demotion restores feasibility on
the rare overshoot.
"""

from __future__ import annotations

import numpy as np

PROFILE_TOL = 1e-9


def activation_profile(flow_plan, joint_state) -> np.ndarray:
    """Per-arm pull probability at the current state from a plan's first step."""
    return flow_plan.activation_profile(joint_state)


def _check_profile(p, budget_cap):
    p = np.asarray(p, dtype=float)
    if np.any(p < -PROFILE_TOL) or np.any(p > 1.0 + PROFILE_TOL):
        raise ValueError("profile entries must lie in [0, 1]")
    if p.sum() > budget_cap + PROFILE_TOL:
        raise ValueError(f"profile mass {p.sum():.6g} exceeds budget {budget_cap:.6g}")
    return np.clip(p, 0.0, 1.0)


def round_budgeted(profile, budget_cap, rng) -> np.ndarray:
    """Dependent rounding with exact marginals and hard cardinality cap.

    Returns a 0/1 vector A with sum(A) in {floor(sum p), ceil(sum p)} and
    sum(A) <= floor(budget_cap).
    """
    p = _check_profile(profile, budget_cap)
    n = len(p)
    hard_cap = int(np.floor(budget_cap + PROFILE_TOL))
    order = rng.permutation(n)
    cum = np.concatenate([[0.0], np.cumsum(p[order])])
    total = cum[-1]
    u = rng.random()
    points = u + np.arange(int(np.ceil(total - u + 1e-12)))
    points = points[points < total - 1e-12]
    idx = np.searchsorted(cum, points, side="right") - 1
    A = np.zeros(n, dtype=int)
    A[order[idx]] = 1
    if A.sum() > hard_cap:
        # drop the owner of the last sampled point (identity varies with the
        # permutation, spreading the truncation deficit across arms)
        A[order[idx[-1]]] = 0
    return A


def round_water_filling(profile, budget, rng) -> np.ndarray:
    """Deterministic top-probability fill; the single boundary arm is
    activated with the fractional part of the budget.  Ties in the profile
    break toward the lower arm id."""
    p = _check_profile(profile, budget + 1.0)  # mass may exceed an integer budget
    n = len(p)
    k = int(np.floor(budget + PROFILE_TOL))
    frac = budget - k
    if frac < PROFILE_TOL:
        frac = 0.0
    order = np.lexsort((np.arange(n), -p))
    A = np.zeros(n, dtype=int)
    active = [i for i in order if p[i] > PROFILE_TOL][:k]
    A[active] = 1
    if frac > 0.0 and len(active) == k and k < n:
        rest = [i for i in order if p[i] > PROFILE_TOL and A[i] == 0]
        if rest and rng.random() < frac:
            A[rest[0]] = 1
    return A


def round_wmdp(per_arm_distributions, eps, a_star, rng, costs=None,
               states=None, budgets=None) -> np.ndarray:
    """Sample one action per arm from the eps-shrunk conditional
    distributions, independently across arms; leftover mass plays ``a_star``.

    When ``costs``/``states``/``budgets`` are given, infeasible joint draws
    are repaired by demoting arms to ``a_star`` in descending relative-cost
    order.  Raises if no always-feasible action is available.
    """
    if a_star is None:
        raise ValueError("no always-feasible action available")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    actions = np.empty(len(per_arm_distributions), dtype=int)
    for n, q in enumerate(per_arm_distributions):
        q = np.asarray(q, dtype=float)
        w = np.clip(q - eps, 0.0, None)
        residual = 1.0 - w.sum()
        if residual < 0.0:  # numerical crumbs only: q sums to one
            w = w / w.sum()
            residual = 0.0
        w[a_star] += residual
        actions[n] = rng.choice(len(w), p=w / w.sum())

    if costs is None:
        return actions
    return repair_to_feasible(actions, costs, states, budgets, a_star)


def repair_to_feasible(actions, costs, states, budgets, a_star) -> np.ndarray:
    """Demote arms to a_star, most relatively costly first, until every
    budget row holds."""
    actions = actions.copy()
    budgets = np.asarray(budgets, dtype=float)
    N = len(actions)

    def totals():
        t = np.zeros(len(budgets))
        for n in range(N):
            t += costs[n][:, states[n], actions[n]]
        return t

    cap = N * budgets
    t = totals()
    if np.all(t <= cap + 1e-9):
        return actions
    pressure = [
        (-(costs[n][:, states[n], actions[n]] / budgets).sum(), n)
        for n in range(N)
        if actions[n] != a_star
    ]
    pressure.sort()
    for _, n in pressure:
        t -= costs[n][:, states[n], actions[n]]
        actions[n] = a_star
        t += costs[n][:, states[n], a_star]
        if np.all(t <= cap + 1e-9):
            return actions
    if np.all(t <= cap + 1e-9):
        return actions
    raise ValueError("even the all-fallback action is infeasible here")
