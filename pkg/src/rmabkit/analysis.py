"""Checkable quantities behind the performance guarantees.

* ``ergodicity_coefficient``: worst-case k-step coupling overlap between any
  action sequence and the all-passive sequence, exact by enumeration.  The
  definition is asymmetric in which start state receives the action
  sequence, so the swapped variant is computed alongside (enumerating all
  ordered start pairs makes the two coincide; both are reported).
* ``mu_bound`` / ``theorem_bound``: the closed-form multiplier bound and the
  explicit optimality-gap expression assembled from (k, rho_k, |mu|, N).
* ``jensen_gap``: Monte-Carlo estimate of the concavity gap between the
  planning value at a product distribution and its sampled one-hot states.
* ``brute_force_optimal``: relative value iteration on the exact joint MDP,
  for tiny instances only; independent of the LP stack by construction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .horizon_plan import HorizonPlanner
from .model import Instance, check_product_distribution

K_CAP = 8
JOINT_STATE_CAP = 4096
JOINT_ACTION_CAP = 1_000_000


@dataclass
class ErgodicityWitness:
    arm: int
    s: int
    s_prime: int
    actions: tuple


@dataclass
class ErgodicityReport:
    rho: dict  # k -> value
    k_star: int | None  # smallest k with rho_k > 0
    witnesses: dict  # k -> ErgodicityWitness
    swapped: dict  # k -> value of the role-swapped variant


def _sequence_kernels(P, k):
    """All k-step kernels indexed by action sequence, plus the all-passive one."""
    kernels = {(): np.eye(P[0].shape[0])}
    for step in range(k):
        nxt = {}
        for seq, K in kernels.items():
            if len(seq) == step:
                for a in range(len(P)):
                    nxt[seq + (a,)] = K @ P[a]
        kernels.update(nxt)
    return {seq: K for seq, K in kernels.items() if len(seq) == k}


def _coefficient_for_arm(P, k, passive_action=0):
    kernels = _sequence_kernels(P, k)
    base = kernels[(passive_action,) * k]
    best = np.inf
    witness = None
    swapped_best = np.inf
    for seq, K in kernels.items():
        # overlap[i, j] = sum_s min(K[i, s], base[j, s])
        overlap = np.minimum(K[:, None, :], base[None, :, :]).sum(axis=2)
        idx = np.unravel_index(np.argmin(overlap), overlap.shape)
        if overlap[idx] < best:
            best = float(overlap[idx])
            witness = (int(idx[0]), int(idx[1]), seq)
        swapped = np.minimum(base[:, None, :], K[None, :, :]).sum(axis=2)
        swapped_best = min(swapped_best, float(swapped.min()))
    return best, witness, swapped_best


def ergodicity_coefficient(instance: Instance, k: int, force=False):
    """Exact rho_k plus its minimizing witness.  Cost grows as 2^k; k beyond
    the cap needs force=True."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > K_CAP and not force:
        raise ValueError(f"k={k} beyond cap {K_CAP}; pass force=True")
    best = np.inf
    witness = None
    swapped_best = np.inf
    for n, arm in enumerate(instance.arms):
        val, wit, swapped = _coefficient_for_arm(list(arm.kernels), k)
        if val < best:
            best = val
            witness = ErgodicityWitness(arm=n, s=wit[0], s_prime=wit[1],
                                        actions=wit[2])
        swapped_best = min(swapped_best, swapped)
    return float(best), witness, float(swapped_best)


def recompute_from_witness(instance: Instance, k, witness: ErgodicityWitness) -> float:
    arm = instance.arms[witness.arm]
    K = np.eye(arm.num_states)
    base = np.eye(arm.num_states)
    for a in witness.actions:
        K = K @ arm.kernels[a]
    for _ in range(k):
        base = base @ arm.kernels[0]
    return float(np.minimum(K[witness.s], base[witness.s_prime]).sum())


def ergodicity_report(instance: Instance, k_max=4) -> ErgodicityReport:
    rho, witnesses, swapped = {}, {}, {}
    k_star = None
    for k in range(1, k_max + 1):
        val, wit, sw = ergodicity_coefficient(instance, k)
        rho[k] = val
        witnesses[k] = wit
        swapped[k] = sw
        if k_star is None and val > 0.0:
            k_star = k
    return ErgodicityReport(rho=rho, k_star=k_star, witnesses=witnesses,
                            swapped=swapped)


def mu_bound(k, rho_k, alpha) -> float:
    """Closed-form sup-norm bound on the stationary multipliers."""
    if rho_k <= 0:
        raise ValueError("requires rho_k > 0")
    ratio = k / rho_k
    return ratio * (1.0 + alpha * ratio)


@dataclass
class TheoremBound:
    eps: float
    tau: int
    k: int
    rho_k: float
    mu_inf: float
    N: int
    alpha: float
    fluctuation_term: float
    rounding_term: float
    total: float


def theorem_bound(eps, tau, k, rho_k, mu_inf, N, alpha) -> TheoremBound:
    """Explicit optimality-gap bound: eps plus the sampled-fluctuation term
    plus the fractional-budget rounding term."""
    if min(eps, tau, k, rho_k, N) <= 0:
        raise ValueError("inputs must be positive")
    ratio = k / rho_k
    fluct = tau * ((1.0 + ratio) * ratio + 2.0 * mu_inf + 1.0) * np.sqrt(
        np.log(N * tau * tau) / N
    )
    frac = alpha * N - np.floor(alpha * N + 1e-9)
    round_term = (2.0 * mu_inf + 1.0 + tau) * frac / N
    return TheoremBound(eps=eps, tau=tau, k=k, rho_k=rho_k, mu_inf=mu_inf,
                        N=N, alpha=alpha, fluctuation_term=float(fluct),
                        rounding_term=float(round_term),
                        total=float(eps + fluct + round_term))


def sample_joint_states(x, count, rng):
    """Componentwise categorical samples from a product distribution."""
    draws = np.empty((count, len(x)), dtype=int)
    for n, xn in enumerate(x):
        xn = np.asarray(xn, dtype=float)
        draws[:, n] = rng.choice(len(xn), size=count, p=xn / xn.sum())
    return draws


def jensen_gap(instance: Instance, fixed_point, x, t, samples, seed):
    """Estimate V_t(x) - E[V_t(X)] with X sampled componentwise from x.

    Returns (estimate, ci95).  The gap is exactly zero at t=0 (the terminal
    value is linear) and for one-hot x (degenerate sampling); both cases
    short-circuit without solving.

    Uses the tangent plane at x (the occupancy-row duals, a supergradient of
    the concave value) as a zero-mean control variate; each sample term
    V(x) + <nu, X - x> - V(X) is then nonnegative up to solver tolerance, so
    the estimator resolves gaps far below the raw value fluctuations.
    """
    if t < 0 or samples < 2:
        raise ValueError("t >= 0 and samples >= 2 required")
    check_product_distribution(x, instance)
    if t == 0:
        return 0.0, 0.0
    if all(np.isclose(np.asarray(v, float).max(), 1.0) for v in x):
        return 0.0, 0.0
    planner = HorizonPlanner(instance, t, fixed_point.mu, "at-most")
    base = planner.plan(x)
    nu = base.x_duals
    N = instance.num_arms
    rng = np.random.default_rng(seed)
    draws = sample_joint_states(x, samples, rng)
    terms = np.empty(samples)
    cache = {}
    for m in range(samples):
        key = tuple(draws[m])
        if key not in cache:
            one_hot_x = [np.eye(S)[s] for s, S in zip(key, instance.state_sizes)]
            cache[key] = planner.plan(one_hot_x).value
        tangent = base.value + sum(
            float(nu[n][draws[m, n]] - nu[n] @ np.asarray(x[n], float))
            for n in range(N)
        ) / N
        terms[m] = tangent - cache[key]
    from scipy import stats

    half = stats.t.ppf(0.975, samples - 1) * terms.std(ddof=1) / np.sqrt(samples)
    return float(terms.mean()), float(half)


# ---------------------------------------------------------------------------
# exact optimum for tiny instances


def _feasible_actions(N, max_pulls):
    acts = [a for a in itertools.product((0, 1), repeat=N) if sum(a) <= max_pulls]
    if len(acts) > JOINT_ACTION_CAP:
        raise ValueError("feasible-action count beyond cap")
    return acts


def brute_force_optimal(instance: Instance, span_tol=1e-9, max_iter=500_000) -> float:
    """Optimal long-run average reward of the exact joint MDP.

    Relative value iteration on half-lazy kernels (for aperiodicity) over
    the product state space and all budget-feasible joint actions.
    Deliberately avoids the LP machinery so it can serve as an oracle.
    """
    sizes = instance.state_sizes
    n_joint = int(np.prod(sizes))
    if n_joint > JOINT_STATE_CAP:
        raise ValueError(f"joint state space {n_joint} beyond cap {JOINT_STATE_CAP}")
    N = instance.num_arms
    actions = _feasible_actions(N, instance.max_pulls())

    # joint kernel per action via chained Kronecker products
    P_joint = []
    r_joint = []
    states = list(itertools.product(*[range(S) for S in sizes]))
    for a_vec in actions:
        P = np.ones((1, 1))
        for n, arm in enumerate(instance.arms):
            P = np.kron(P, arm.kernels[a_vec[n]])
        P_joint.append(0.5 * (np.eye(n_joint) + P))
        r = np.array([
            sum(instance.arms[n].rewards[a_vec[n]][s[n]] for n in range(N)) / N
            for s in states
        ])
        r_joint.append(r)

    v = np.zeros(n_joint)
    for _ in range(max_iter):
        q = np.stack([r_joint[i] + P_joint[i] @ v for i in range(len(actions))])
        tv = q.max(axis=0)
        d = tv - v
        if d.max() - d.min() <= span_tol:
            return float(0.5 * (d.max() + d.min()))
        v = tv - tv[0]
    raise ValueError("joint value iteration did not converge (multichain optimum?)")
