"""Weakly coupled MDPs: multi-action arms tied by linear cost budgets.

The two-action pull-budget problem embeds here with a single cost row that
charges one unit per pull; the embedding is cross-checked against the native
path in the test suite.  Planning mirrors the two-action module (stationary
LP, tau-horizon LP with terminal multipliers) with per-constraint budget
rows, and the policy loop rounds each arm independently from its shrunk
conditional action distribution, falling back to the always-feasible action
on the rare budget overshoot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import lp_core, rounding

STATIONARITY_TOL = 1e-8


@dataclass(frozen=True)
class WmdpArm:
    id: int
    kernels: np.ndarray  # (A, S, S)
    rewards: np.ndarray  # (A, S)

    @property
    def num_states(self) -> int:
        return self.kernels.shape[1]

    @property
    def num_actions(self) -> int:
        return self.kernels.shape[0]


@dataclass(frozen=True)
class WmdpInstance:
    arms: tuple
    costs: tuple  # per arm (E, S, A), entries in [0, cost_bound]
    budgets: np.ndarray  # (E,) positive
    cost_bound: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        object.__setattr__(self, "costs", tuple(np.asarray(c, float) for c in self.costs))
        object.__setattr__(self, "budgets", np.asarray(self.budgets, float))
        E = len(self.budgets)
        if np.any(self.budgets <= 0):
            raise ValueError("budgets must be positive")
        for n, (arm, c) in enumerate(zip(self.arms, self.costs)):
            if c.shape != (E, arm.num_states, arm.num_actions):
                raise ValueError(f"arm {n}: cost tensor shape {c.shape}")
            if c.min() < 0 or c.max() > self.cost_bound + 1e-12:
                raise ValueError(f"arm {n}: costs outside [0, {self.cost_bound}]")

    @property
    def num_arms(self) -> int:
        return len(self.arms)

    @property
    def num_constraints(self) -> int:
        return len(self.budgets)

    @property
    def state_sizes(self):
        return tuple(a.num_states for a in self.arms)


def embed_rmab(instance) -> WmdpInstance:
    """View a two-action pull-budget instance as a WMDP with one cost row."""
    arms = tuple(
        WmdpArm(id=a.id, kernels=a.kernels, rewards=a.rewards)
        for a in instance.arms
    )
    costs = tuple(
        np.stack([np.tile([0.0, 1.0], (a.num_states, 1))])
        for a in instance.arms
    )
    return WmdpInstance(arms=arms, costs=costs,
                        budgets=np.array([instance.alpha]), cost_bound=1.0)


def find_feasible_action(wmdp_instance: WmdpInstance):
    """An action whose cost is pointwise minimal in every row, or None.

    Pointwise minimality is sufficient for the swap property that the
    fallback relies on; ties resolve to the lowest action id.
    """
    A = wmdp_instance.arms[0].num_actions
    for a in range(A):
        ok = True
        for c in wmdp_instance.costs:
            if np.any(c[:, :, a] > c.min(axis=2) + 1e-12):
                ok = False
                break
        if ok:
            return a
    return None


def wmdp_ergodicity(wmdp_instance: WmdpInstance, a_star: int, k: int,
                    force=False):
    """Worst-case k-step coupling overlap against the a_star-repeating chain,
    minimized over arms, ordered start pairs, and action sequences."""
    if k < 1:
        raise ValueError("k must be >= 1")
    A = wmdp_instance.arms[0].num_actions
    if A ** k > 2 ** 14 and not force:
        raise ValueError("sequence enumeration beyond cap; pass force=True")
    from .analysis import _sequence_kernels

    best = np.inf
    for arm in wmdp_instance.arms:
        kernels = _sequence_kernels(list(arm.kernels), k)
        base = kernels[(a_star,) * k]
        for K in kernels.values():
            overlap = np.minimum(K[:, None, :], base[None, :, :]).sum(axis=2)
            best = min(best, float(overlap.min()))
    return float(best)


@dataclass
class WmdpFixedPoint:
    gain: float
    y_star: list  # per arm (A, S)
    mu: list  # per arm (S,), global min == 0
    cost_duals: np.ndarray  # (E,)

    def mu_inf(self) -> float:
        return max(float(np.max(m)) for m in self.mu)


def _blocks(instance: WmdpInstance):
    offs, off = [], 0
    for arm in instance.arms:
        offs.append(off)
        off += arm.num_actions * arm.num_states
    return offs, off


def wmdp_fixed_point(wmdp_instance: WmdpInstance) -> WmdpFixedPoint:
    inst = wmdp_instance
    N = inst.num_arms
    E = inst.num_constraints
    offs, nvar = _blocks(inst)

    c = np.zeros(nvar)
    rows, cols, vals, b_eq = [], [], [], []
    row = 0
    for n, arm in enumerate(inst.arms):
        S, A = arm.num_states, arm.num_actions
        off = offs[n]
        for a in range(A):
            c[off + a * S:off + (a + 1) * S] = arm.rewards[a]
        for j in range(A * S):
            rows.append(row)
            cols.append(off + j)
            vals.append(1.0)
        b_eq.append(1.0)
        row += 1
        for a in range(A):
            block = np.eye(S) - arm.kernels[a].T
            rr, cc = np.nonzero(block)
            rows.extend((row + rr).tolist())
            cols.extend((off + a * S + cc).tolist())
            vals.extend(block[rr, cc].tolist())
        b_eq.extend([0.0] * S)
        row += S
    A_eq = sp.csr_matrix((vals, (rows, cols)), shape=(row, nvar))

    cost_rows = np.zeros((E, nvar))
    for n, arm in enumerate(inst.arms):
        S, A = arm.num_states, arm.num_actions
        for e in range(E):
            for a in range(A):
                cost_rows[e, offs[n] + a * S:offs[n] + (a + 1) * S] = inst.costs[n][e, :, a]
    sol = lp_core.solve(lp_core.LpProblem(
        c=c, A_eq=A_eq, b_eq=np.array(b_eq),
        A_ineq=sp.csr_matrix(cost_rows), b_ineq=N * inst.budgets,
    ))
    if sol.status != "optimal":
        raise lp_core.LpError(f"stationary WMDP LP returned {sol.status}")

    y_star, mu_raw = [], []
    row = 0
    for n, arm in enumerate(inst.arms):
        S, A = arm.num_states, arm.num_actions
        y = np.clip(sol.x[offs[n]:offs[n] + A * S], 0.0, None).reshape(A, S)
        if abs(y.sum() - 1.0) > STATIONARITY_TOL:
            raise lp_core.LpError(f"arm {n}: measure sums to {y.sum()}")
        y_star.append(y)
        mu_raw.append(sol.duals_eq[row + 1:row + 1 + S].copy())
        row += 1 + S
    shift = min(float(m.min()) for m in mu_raw)
    return WmdpFixedPoint(gain=sol.value / N, y_star=y_star,
                          mu=[m - shift for m in mu_raw],
                          cost_duals=sol.duals_ineq.copy())


class WmdpPlanner:
    """tau-horizon fluid LP over multi-action flows with per-step cost rows."""

    def __init__(self, wmdp_instance: WmdpInstance, tau: int, mu):
        if tau < 0:
            raise ValueError("tau must be >= 0")
        self.instance = wmdp_instance
        self.tau = tau
        self.mu = [np.asarray(m, float) for m in mu]
        if tau > 0:
            self._build()

    def _build(self):
        inst, tau = self.instance, self.tau
        E = inst.num_constraints
        offs, per_t = _blocks(inst)

        def off(t, n, a=0):
            return t * per_t + offs[n] + a * inst.arms[n].num_states

        nvar = tau * per_t
        c = np.zeros(nvar)
        for t in range(tau):
            for n, arm in enumerate(inst.arms):
                S = arm.num_states
                for a in range(arm.num_actions):
                    c[off(t, n, a):off(t, n, a) + S] += arm.rewards[a]
        for n, arm in enumerate(inst.arms):
            S = arm.num_states
            for a in range(arm.num_actions):
                c[off(tau - 1, n, a):off(tau - 1, n, a) + S] += arm.kernels[a] @ self.mu[n]

        rows, cols, vals = [], [], []
        row = 0
        for n, arm in enumerate(inst.arms):
            S = arm.num_states
            for s in range(S):
                for a in range(arm.num_actions):
                    rows.append(row)
                    cols.append(off(0, n, a) + s)
                    vals.append(1.0)
                row += 1
        self._n_x_rows = row
        for t in range(tau - 1):
            for n, arm in enumerate(inst.arms):
                S = arm.num_states
                for a in range(arm.num_actions):
                    for s in range(S):
                        rows.append(row + s)
                        cols.append(off(t + 1, n, a) + s)
                        vals.append(1.0)
                    Pt = arm.kernels[a].T
                    rr, cc = np.nonzero(Pt)
                    rows.extend((row + rr).tolist())
                    cols.extend((off(t, n, a) + cc).tolist())
                    vals.extend((-Pt[rr, cc]).tolist())
                row += S
        self._A_eq = sp.csr_matrix((vals, (rows, cols)), shape=(row, nvar))
        self._b_eq_tail = np.zeros(row - self._n_x_rows)

        cost_rows = np.zeros((tau * E, nvar))
        for t in range(tau):
            for e in range(E):
                for n, arm in enumerate(inst.arms):
                    S = arm.num_states
                    for a in range(arm.num_actions):
                        cost_rows[t * E + e, off(t, n, a):off(t, n, a) + S] = \
                            inst.costs[n][e, :, a]
        self._A_ineq = sp.csr_matrix(cost_rows)
        self._b_ineq = np.tile(inst.num_arms * inst.budgets, tau)
        self._c = c
        self._off = off
        self._nvar = nvar

    def plan(self, x):
        inst, tau = self.instance, self.tau
        N = inst.num_arms
        if tau == 0:
            value = sum(float(m @ np.asarray(v, float))
                        for m, v in zip(self.mu, x)) / N
            return {"tau": 0, "flows": [], "value": value,
                    "cost_duals": np.zeros((0, inst.num_constraints))}
        b_eq = np.concatenate([np.concatenate([np.asarray(v, float) for v in x]),
                               self._b_eq_tail])
        sol = lp_core.solve(lp_core.LpProblem(
            c=self._c, A_eq=self._A_eq, b_eq=b_eq,
            A_ineq=self._A_ineq, b_ineq=self._b_ineq,
        ))
        if sol.status != "optimal":
            raise lp_core.LpError(f"WMDP planning LP returned {sol.status}")
        off = self._off
        flows = []
        for n, arm in enumerate(inst.arms):
            S, A = arm.num_states, arm.num_actions
            f = np.empty((tau, A, S))
            for t in range(tau):
                for a in range(A):
                    f[t, a] = sol.x[off(t, n, a):off(t, n, a) + S]
            flows.append(np.clip(f, 0.0, None))
        duals = sol.duals_ineq.reshape(tau, inst.num_constraints)
        return {"tau": tau, "flows": flows, "value": sol.value / N,
                "cost_duals": duals}


def wmdp_plan(wmdp_instance: WmdpInstance, x, tau: int, mu):
    return WmdpPlanner(wmdp_instance, tau, mu).plan(x)


def default_shrinkage(N, tau) -> float:
    return float(np.sqrt(np.log(N * tau * tau) / (2.0 * N)))


def lp_update_policy_wmdp(wmdp_instance: WmdpInstance, tau: int, eps=None,
                          fixed_point=None):
    """Re-planning policy with eps-shrunk independent rounding and the
    always-feasible fallback; construction fails without such an action."""
    from .policies import Policy

    inst = wmdp_instance
    a_star = find_feasible_action(inst)
    if a_star is None:
        raise ValueError("no always-feasible action: policy unavailable")
    if fixed_point is None:
        fixed_point = wmdp_fixed_point(inst)
    if eps is None:
        eps = default_shrinkage(inst.num_arms, tau)
    planner = WmdpPlanner(inst, tau, fixed_point.mu)
    sizes = inst.state_sizes

    def decide(joint_state, rng):
        x = [np.eye(S)[int(s)] for s, S in zip(joint_state, sizes)]
        out = planner.plan(x)
        dists = []
        for n in range(inst.num_arms):
            q = out["flows"][n][0, :, int(joint_state[n])]
            total = q.sum()
            dists.append(q / total if total > 1e-12 else
                         np.eye(inst.arms[n].num_actions)[a_star])
        return rounding.round_wmdp(dists, eps, a_star, rng, costs=inst.costs,
                                   states=[int(s) for s in joint_state],
                                   budgets=inst.budgets)

    return Policy(f"lp-update-wmdp-{tau}", decide)
