"""Finite-horizon fluid planning and the dissipativity quantities built on it.

The tau-step planning problem optimizes fractional per-arm state-action
flows from an initial product distribution, with the per-step pull budget
enforced in expectation and a terminal reward given by the stationary
multipliers.  It is solved as one flat LP over all steps (equivalent to the
dynamic program by the usual argument, and it exposes every per-step budget
price in a single solve).  The LP structure depends only on
(instance, tau, mu, budget_mode); re-planning from a new state just swaps
the first-step occupancy rows, which is what makes per-step re-planning
affordable inside simulations.

Also here: an independent per-arm backward-induction evaluator for the
price-relaxed problem (weak/strong duality checks), the rotated stage cost
whose nonnegativity expresses dissipativity, the accumulated surrogate cost,
horizon selection by cost increments, and the bias (transient-value) limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import lp_core
from .fixed_point import FixedPoint
from .model import Instance, check_product_distribution

FLOW_TOL = 1e-8
CS_TOL = 1e-7


@dataclass
class FlowPlan:
    tau: int
    flows: list  # per arm array (tau, 2, S); empty list when tau == 0
    terminal: list  # per arm (S,) occupancy at time tau
    value: float
    lambdas: np.ndarray  # (tau,) per-step budget prices
    x: list
    budget_mode: str
    # duals of the first-step occupancy rows: a supergradient of the
    # (concave) value in the initial distribution, in per-arm units
    x_duals: list = None

    def activation_profile(self, joint_state) -> np.ndarray:
        """Marginal pull probability per arm at its current state, read off
        the first step of the plan.  Assumes the plan was built from the
        one-hot encoding of ``joint_state``."""
        p = np.empty(len(self.flows))
        for n, (flows, s) in enumerate(zip(self.flows, joint_state)):
            mass = flows[0, 0, s] + flows[0, 1, s]
            p[n] = flows[0, 1, s] / mass if mass > 1e-12 else 0.0
        return np.clip(p, 0.0, 1.0)


class HorizonPlanner:
    """Reusable tau-horizon LP for one (instance, mu, budget_mode) triple.

    Arms sharing identical (kernels, rewards, terminal) are exchangeable in
    the fluid problem, so the LP carries one flow block per distinct model
    with the group's total occupancy on the first-step rows; this is an
    exact reformulation (any solution symmetrizes within a group without
    changing feasibility or value).  Per-arm flows are recovered by running
    each arm's own occupancy through the group's time-varying conditional
    policy, which reproduces the group flows in aggregate.  Replicated-arm
    instances plan at the cost of their distinct-model count.
    """

    def __init__(self, instance: Instance, tau: int, mu, budget_mode=None):
        if tau < 0:
            raise ValueError("tau must be >= 0")
        self.instance = instance
        self.tau = tau
        self.mu = [np.asarray(m, dtype=float) for m in mu]
        self.mode = budget_mode or instance.budget_mode
        self._group()
        if self.tau > 0:
            self._build()

    def _group(self):
        groups = {}
        self.group_of = np.empty(self.instance.num_arms, dtype=int)
        self.members = []
        self.group_arms = []
        for n, arm in enumerate(self.instance.arms):
            key = (arm.kernels.tobytes(), arm.rewards.tobytes(),
                   self.mu[n].tobytes())
            if key not in groups:
                groups[key] = len(self.members)
                self.members.append([])
                self.group_arms.append((arm, self.mu[n]))
            g = groups[key]
            self.group_of[n] = g
            self.members[g].append(n)

    def _build(self):
        inst, tau = self.instance, self.tau
        M = len(self.group_arms)
        sizes = [arm.num_states for arm, _ in self.group_arms]
        per_t = 2 * sum(sizes)
        nvar = tau * per_t
        g_off = np.concatenate([[0], np.cumsum([2 * S for S in sizes])])

        def off(t, g, a=0):
            return t * per_t + g_off[g] + a * sizes[g]

        c = np.zeros(nvar)
        for t in range(tau):
            for g, (arm, _) in enumerate(self.group_arms):
                S = sizes[g]
                c[off(t, g, 0):off(t, g, 0) + S] += arm.rewards[0]
                c[off(t, g, 1):off(t, g, 1) + S] += arm.rewards[1]
        # fold the terminal reward into the last step: mu . (next occupancy)
        for g, (arm, mu) in enumerate(self.group_arms):
            S = sizes[g]
            for a in range(2):
                c[off(tau - 1, g, a):off(tau - 1, g, a) + S] += arm.kernels[a] @ mu

        rows, cols, vals = [], [], []
        row = 0
        # first-step occupancy rows (rhs swapped per plan call)
        for g in range(M):
            S = sizes[g]
            for s in range(S):
                for a in range(2):
                    rows.append(row)
                    cols.append(off(0, g, a) + s)
                    vals.append(1.0)
                row += 1
        self._n_x_rows = row
        # flow conservation between consecutive steps
        for t in range(tau - 1):
            for g, (arm, _) in enumerate(self.group_arms):
                S = sizes[g]
                for a in range(2):
                    for s in range(S):
                        rows.append(row + s)
                        cols.append(off(t + 1, g, a) + s)
                        vals.append(1.0)
                    Pt = arm.kernels[a].T
                    rr, cc = np.nonzero(Pt)
                    rows.extend((row + rr).tolist())
                    cols.extend((off(t, g, a) + cc).tolist())
                    vals.extend((-Pt[rr, cc]).tolist())
                row += S

        budget = np.zeros((tau, nvar))
        for t in range(tau):
            for g in range(M):
                S = sizes[g]
                budget[t, off(t, g, 1):off(t, g, 1) + S] = 1.0

        if self.mode == "exactly":
            rhs = float(inst.max_pulls())
            A_eq = sp.vstack(
                [sp.csr_matrix((vals, (rows, cols)), shape=(row, nvar)),
                 sp.csr_matrix(budget)],
                format="csr",
            )
            self._A_eq = A_eq
            self._b_eq_tail = np.concatenate(
                [np.zeros(row - self._n_x_rows), np.full(tau, rhs)]
            )
            self._A_ineq = None
            self._b_ineq = None
            self._budget_rhs = rhs
        else:
            self._A_eq = sp.csr_matrix((vals, (rows, cols)), shape=(row, nvar))
            self._b_eq_tail = np.zeros(row - self._n_x_rows)
            self._A_ineq = sp.csr_matrix(budget)
            self._b_ineq = np.full(tau, inst.budget_units())
            self._budget_rhs = inst.budget_units()
        self._c = c
        self._off = off
        self._sizes = sizes
        self._nvar = nvar

    def plan(self, x) -> FlowPlan:
        inst, tau = self.instance, self.tau
        N = inst.num_arms
        check_product_distribution(x, inst)
        if tau == 0:
            value = sum(float(m @ v) for m, v in zip(self.mu, x)) / N
            return FlowPlan(tau=0, flows=[], terminal=[np.asarray(v, float) for v in x],
                            value=value, lambdas=np.zeros(0), x=list(x),
                            budget_mode=self.mode)

        group_x = [np.zeros(S) for S in self._sizes]
        for n, g in enumerate(self.group_of):
            group_x[g] += np.asarray(x[n], dtype=float)
        b_eq = np.concatenate([np.concatenate(group_x), self._b_eq_tail])
        sol = lp_core.solve(
            lp_core.LpProblem(c=self._c, A_eq=self._A_eq, b_eq=b_eq,
                              A_ineq=self._A_ineq, b_ineq=self._b_ineq)
        )
        if sol.status != "optimal":
            raise lp_core.LpError(f"planning LP returned {sol.status}")

        off, sizes = self._off, self._sizes
        gflows = []
        for g in range(len(self.group_arms)):
            S = sizes[g]
            f = np.empty((tau, 2, S))
            for t in range(tau):
                for a in range(2):
                    f[t, a] = sol.x[off(t, g, a):off(t, g, a) + S]
            if f.min() < -1e-9:
                raise lp_core.LpError(f"flow drift {f.min():.2e} below tolerance")
            gflows.append(np.clip(f, 0.0, None))
        flows = self._split_flows(x, gflows)
        terminal = [
            flows[n][tau - 1, 0] @ inst.arms[n].kernels[0]
            + flows[n][tau - 1, 1] @ inst.arms[n].kernels[1]
            for n in range(N)
        ]
        if self.mode == "exactly":
            lambdas = sol.duals_eq[-tau:].copy()
        else:
            lambdas = sol.duals_ineq.copy()

        bounds = np.split(sol.duals_eq[:self._n_x_rows],
                          np.cumsum(sizes)[:-1])
        x_duals = [bounds[g] for g in self.group_of]

        plan = FlowPlan(tau=tau, flows=flows, terminal=terminal,
                        value=sol.value / N, lambdas=lambdas, x=list(x),
                        budget_mode=self.mode, x_duals=x_duals)
        self._check(plan)
        return plan

    def plan_profile(self, joint_state) -> np.ndarray:
        """First-step pull probability per arm for a one-hot start, without
        materializing per-arm flows (the simulation hot path)."""
        if self.tau == 0:
            raise ValueError("profiles need at least one planning step")
        group_x = [np.zeros(S) for S in self._sizes]
        for n, g in enumerate(self.group_of):
            group_x[g][joint_state[n]] += 1.0
        b_eq = np.concatenate([np.concatenate(group_x), self._b_eq_tail])
        sol = lp_core.solve(
            lp_core.LpProblem(c=self._c, A_eq=self._A_eq, b_eq=b_eq,
                              A_ineq=self._A_ineq, b_ineq=self._b_ineq)
        )
        if sol.status != "optimal":
            raise lp_core.LpError(f"planning LP returned {sol.status}")
        off = self._off
        p = np.empty(self.instance.num_arms)
        for n, g in enumerate(self.group_of):
            s = int(joint_state[n])
            y0 = sol.x[off(0, g, 0) + s]
            y1 = sol.x[off(0, g, 1) + s]
            p[n] = y1 / (y0 + y1) if y0 + y1 > 1e-12 else 0.0
        return np.clip(p, 0.0, 1.0)

    def _split_flows(self, x, gflows):
        """Per-arm flows from group flows via the conditional policy split."""
        tau = self.tau
        # pull probability per (group, t, state); occupancy-zero states are
        # never visited by any member, the fill value there is irrelevant
        cond = []
        for g, gf in enumerate(gflows):
            occ = gf[:, 0, :] + gf[:, 1, :]
            with np.errstate(invalid="ignore", divide="ignore"):
                p = np.where(occ > 0.0, gf[:, 1, :] / np.maximum(occ, 1e-300), 0.0)
            cond.append(np.clip(p, 0.0, 1.0))
        flows = []
        for n, arm in enumerate(self.instance.arms):
            g = self.group_of[n]
            if len(self.members[g]) == 1:
                flows.append(gflows[g])
                continue
            xn = np.asarray(x[n], dtype=float)
            f = np.empty((tau, 2, arm.num_states))
            for t in range(tau):
                pull = cond[g][t] * xn
                f[t, 1] = pull
                f[t, 0] = xn - pull
                xn = f[t, 0] @ arm.kernels[0] + f[t, 1] @ arm.kernels[1]
            flows.append(f)
        return flows

    def _check(self, plan: FlowPlan):
        inst, tau = self.instance, self.tau
        N = inst.num_arms
        for n, arm in enumerate(inst.arms):
            f = plan.flows[n]
            r0 = np.abs(f[0, 0] + f[0, 1] - plan.x[n]).max()
            if r0 > FLOW_TOL:
                raise lp_core.LpError(f"initial occupancy residual {r0:.2e}")
            for t in range(tau - 1):
                nxt = f[t, 0] @ arm.kernels[0] + f[t, 1] @ arm.kernels[1]
                rr = np.abs(f[t + 1, 0] + f[t + 1, 1] - nxt).max()
                if rr > FLOW_TOL:
                    raise lp_core.LpError(f"flow conservation residual {rr:.2e}")
        pulls = np.array(
            [sum(float(plan.flows[n][t, 1].sum()) for n in range(N)) for t in range(tau)]
        )
        if self.mode == "exactly":
            if np.abs(pulls - self._budget_rhs).max() > FLOW_TOL * N:
                raise lp_core.LpError("exact budget violated in plan")
        else:
            if pulls.max() > self._budget_rhs + FLOW_TOL * N:
                raise lp_core.LpError("budget violated in plan")
            cs = np.abs(plan.lambdas * (inst.alpha - pulls / N)).max(initial=0.0)
            if cs > CS_TOL:
                raise lp_core.LpError(f"budget complementary slackness {cs:.2e}")
            if plan.lambdas.min(initial=0.0) < -1e-10:
                raise lp_core.LpError("negative budget price")
        mu_inf = max(float(np.max(m)) for m in self.mu) if self.mu else 0.0
        if plan.value > tau + mu_inf + 1e-6:
            raise lp_core.LpError("plan value exceeds reward+terminal bound")


def plan(instance: Instance, x, tau: int, mu, budget_mode=None) -> FlowPlan:
    """One-shot convenience wrapper around HorizonPlanner."""
    return HorizonPlanner(instance, tau, mu, budget_mode).plan(x)


# ---------------------------------------------------------------------------
# price-relaxed evaluation (per-arm backward induction)


def arm_horizon_values(arm, tau, terminal, lam_seq=None) -> np.ndarray:
    """Value-to-go vectors of one arm's tau-step problem with per-step pull
    prices; returns w[j] = values with j steps remaining, w[0] = terminal."""
    lam_seq = np.zeros(tau) if lam_seq is None else np.asarray(lam_seq, float)
    w = np.empty((tau + 1, arm.num_states))
    w[0] = terminal
    for j in range(1, tau + 1):
        lam = lam_seq[tau - j]
        q0 = arm.rewards[0] + arm.kernels[0] @ w[j - 1]
        q1 = arm.rewards[1] - lam + arm.kernels[1] @ w[j - 1]
        w[j] = np.maximum(q0, q1)
    return w


def relaxed_value(instance: Instance, x, tau: int, mu, lam_seq) -> float:
    """Value of the budget-relaxed problem at the given price sequence.

    Upper-bounds the planning value for every nonnegative price sequence and
    matches it at the optimal prices.
    """
    lam_seq = np.asarray(lam_seq, dtype=float)
    if lam_seq.shape != (tau,):
        raise ValueError("price sequence length must equal tau")
    if np.any(lam_seq < 0):
        raise ValueError("prices must be nonnegative")
    N = instance.num_arms
    total = 0.0
    for arm, m, xn in zip(instance.arms, mu, x):
        w = arm_horizon_values(arm, tau, m, lam_seq)
        total += float(np.asarray(xn) @ w[tau])
    return instance.alpha * float(lam_seq.sum()) + total / N


# ---------------------------------------------------------------------------
# dissipativity quantities


def rotated_cost(instance: Instance, fixed_point: FixedPoint, x, u) -> float:
    """Stage cost rotated by the storage <mu, .>; nonnegative on the budget
    polytope and zero at the stationary point."""
    N = instance.num_arms
    check_product_distribution(x, instance)
    pull_mass = 0.0
    for n, (xn, un) in enumerate(zip(x, u)):
        un = np.asarray(un, dtype=float)
        xn = np.asarray(xn, dtype=float)
        if np.any(un < -1e-9) or np.any(un > xn + 1e-9):
            raise ValueError(f"arm {n}: control not within the occupancy")
        pull_mass += float(un.sum())
    if pull_mass > instance.budget_units() + 1e-9 * N:
        raise ValueError("control violates the pull budget")

    reward = 0.0
    storage_drop = 0.0
    for arm, m, xn, un in zip(instance.arms, fixed_point.mu, x, u):
        xn = np.asarray(xn, float)
        un = np.asarray(un, float)
        reward += float(arm.rewards[0] @ xn + (arm.rewards[1] - arm.rewards[0]) @ un)
        nxt = xn @ arm.kernels[0] + un @ (arm.kernels[1] - arm.kernels[0])
        storage_drop += float(m @ (xn - nxt))
    return fixed_point.gain - reward / N + storage_drop / N


def surrogate_cost(instance: Instance, fixed_point: FixedPoint, x, tau: int,
                   budget_mode=None, planner=None) -> float:
    """Accumulated rotated cost of the tau-step plan:
    <mu, x> + tau * gain - V_tau(x).  Nonnegative and nondecreasing in tau."""
    if tau == 0:
        return 0.0
    if planner is None:
        planner = HorizonPlanner(instance, tau, fixed_point.mu, budget_mode)
    value = planner.plan(x).value
    storage = sum(float(m @ np.asarray(v, float))
                  for m, v in zip(fixed_point.mu, x)) / instance.num_arms
    return storage + tau * fixed_point.gain - value


def select_horizon(instance: Instance, fixed_point: FixedPoint, x, eps: float,
                   tau_max: int, budget_mode=None):
    """Smallest tau whose surrogate-cost increment falls at or below eps;
    returns (tau, converged)."""
    if eps <= 0 or tau_max < 1:
        raise ValueError("eps must be positive and tau_max >= 1")
    prev = 0.0
    for tau in range(1, tau_max + 1):
        cost = surrogate_cost(instance, fixed_point, x, tau, budget_mode)
        if abs(cost - prev) <= eps:
            return tau, True
        prev = cost
    return tau_max, False


def bias_estimate(instance: Instance, fixed_point: FixedPoint, x, tol: float,
                  t_start=4, t_cap=4096):
    """Transient-value limit lim_T (T * gain - V_T(x)), estimated by horizon
    doubling until successive estimates differ at most tol.

    Returns (estimate, horizon, converged).  Non-convergence at the cap
    suggests the mixing premise fails for this instance.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    T = t_start
    est = T * fixed_point.gain - plan(instance, x, T, fixed_point.mu).value
    while T * 2 <= t_cap:
        T *= 2
        nxt = T * fixed_point.gain - plan(instance, x, T, fixed_point.mu).value
        if abs(nxt - est) <= tol:
            return nxt, T, True
        est = nxt
    return est, T, False
