"""Stationary (infinite-horizon) relaxation of the pull-budget problem.

The relaxation optimizes one state-action measure per arm subject to
stationarity under the mixed kernel, with the pull budget enforced only on
average.  Its value (the gain) upper-bounds the long-run reward of every
feasible policy and normalizes all simulation metrics.  The dual multipliers
of the stationarity rows, shifted so their global minimum is zero, serve as
the terminal reward of the finite-horizon planner and as the storage
function for the dissipativity diagnostics.

Two independent solution paths are provided: the direct LP, and a scalar
dual search that prices each pull and evaluates arms separately by
average-reward value iteration.  They are cross-checked in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import lp_core
from .model import Instance

STATIONARITY_TOL = 1e-8


class FixedPointError(Exception):
    pass


@dataclass
class FixedPoint:
    gain: float
    y_star: list | None  # per arm (2, S) state-action measure, None for the dual path
    mu: list  # per arm (S,) multipliers, global min == 0
    lambda_rel: float
    method: str = "lp"
    lambda_unique_hint: bool | None = None
    fallback: bool = False

    def mu_inf(self) -> float:
        return max(float(np.max(m)) for m in self.mu)

    def stationary_distribution(self):
        """x* per arm: marginal of y* over actions."""
        if self.y_star is None:
            raise FixedPointError("no measure available on the dual path")
        return [y.sum(axis=0) for y in self.y_star]

    def stationary_control(self):
        """u* per arm: the pull component of y*."""
        if self.y_star is None:
            raise FixedPointError("no measure available on the dual path")
        return [y[1].copy() for y in self.y_star]


def _arm_blocks(instance: Instance):
    """Variable offsets: arm n occupies [off, off + 2S) laid out y0 then y1."""
    offs = []
    off = 0
    for S in instance.state_sizes:
        offs.append(off)
        off += 2 * S
    return offs, off


def solve_fixed_point(instance: Instance) -> FixedPoint:
    """Solve the stationary relaxation directly as one LP.

    Always uses the at-most budget inequality: the relaxation is the
    canonical upper bound regardless of the instance's simulation-time
    budget mode.
    """
    N = instance.num_arms
    offs, nvar = _arm_blocks(instance)

    c = np.zeros(nvar)
    rows_eq, cols_eq, vals_eq = [], [], []
    b_eq = []
    row = 0
    for n, arm in enumerate(instance.arms):
        S = arm.num_states
        off = offs[n]
        c[off:off + S] = arm.rewards[0]
        c[off + S:off + 2 * S] = arm.rewards[1]
        # measure normalization
        for j in range(2 * S):
            rows_eq.append(row)
            cols_eq.append(off + j)
            vals_eq.append(1.0)
        b_eq.append(1.0)
        row += 1
        # stationarity: (I - P0^T) y0 + (I - P1^T) y1 = 0
        for a in range(2):
            block = np.eye(S) - arm.kernels[a].T
            rr, cc = np.nonzero(block)
            rows_eq.extend((row + rr).tolist())
            cols_eq.extend((off + a * S + cc).tolist())
            vals_eq.extend(block[rr, cc].tolist())
        b_eq.extend([0.0] * S)
        row += S

    A_eq = sp.csr_matrix((vals_eq, (rows_eq, cols_eq)), shape=(row, nvar))
    pull_row = np.zeros(nvar)
    for n, arm in enumerate(instance.arms):
        S = arm.num_states
        pull_row[offs[n] + S:offs[n] + 2 * S] = 1.0
    A_ineq = sp.csr_matrix(pull_row[None, :])
    b_ineq = np.array([instance.budget_units()])

    sol = lp_core.solve(
        lp_core.LpProblem(c=c, A_eq=A_eq, b_eq=np.array(b_eq),
                          A_ineq=A_ineq, b_ineq=b_ineq)
    )
    if sol.status != "optimal":
        raise FixedPointError(f"relaxation LP returned {sol.status}")

    y_star = []
    mu_raw = []
    row = 0
    for n, arm in enumerate(instance.arms):
        S = arm.num_states
        off = offs[n]
        y = np.clip(sol.x[off:off + 2 * S], 0.0, None).reshape(2, S)
        if abs(y.sum() - 1.0) > STATIONARITY_TOL:
            raise FixedPointError(f"arm {n}: measure sums to {y.sum()}")
        flow = y[0] + y[1] - (y[0] @ arm.kernels[0] + y[1] @ arm.kernels[1])
        if np.abs(flow).max() > STATIONARITY_TOL:
            raise FixedPointError(f"arm {n}: stationarity residual {np.abs(flow).max()}")
        y_star.append(y)
        mu_raw.append(sol.duals_eq[row + 1:row + 1 + S].copy())
        row += 1 + S

    pull = sum(float(y[1].sum()) for y in y_star)
    if pull > instance.budget_units() + STATIONARITY_TOL * N:
        raise FixedPointError("budget violated at the fixed point")

    shift = min(float(m.min()) for m in mu_raw)
    mu = [m - shift for m in mu_raw]
    return FixedPoint(
        gain=sol.value / N,
        y_star=y_star,
        mu=mu,
        lambda_rel=float(sol.duals_ineq[0]),
        method="lp",
    )


# ---------------------------------------------------------------------------
# dual path: scalar pull price + per-arm average-reward evaluation


def arm_gain(arm, lam, span_tol=1e-10, max_iter=200_000):
    """Optimal average reward of one arm when each pull costs ``lam``.

    Damped value iteration on the half-lazy kernels (which preserves average
    rewards while forcing aperiodicity).  The per-state gain vector is the
    limit of value differences; the returned scalar is its maximum, which is
    what the stationary-measure relaxation attains.  The span stop handles
    the common unichain case; a difference-stabilization stop covers arms
    whose optimal chain is multichain.
    """
    S = arm.num_states
    eye = np.eye(S)
    # half-lazy kernels keep every policy's stationary distribution (hence
    # its average reward) while forcing aperiodicity
    P = [0.5 * (eye + arm.kernels[a]) for a in range(2)]
    r = [arm.rewards[0], arm.rewards[1] - lam]
    v = np.zeros(S)
    d_prev = None
    for _ in range(max_iter):
        q0 = r[0] + P[0] @ v
        q1 = r[1] + P[1] @ v
        tv = np.maximum(q0, q1)
        d = tv - v
        span = float(d.max() - d.min())
        if span <= span_tol:
            return float(d.max()), v - v[0]
        if d_prev is not None and float(np.abs(d - d_prev).max()) <= span_tol * 1e-2:
            return float(d.max()), v - v[0]
        d_prev = d
        v = tv - tv[0]
    raise FixedPointError("per-arm value iteration did not converge")


def _dual_value(instance, lam):
    total = 0.0
    for arm in instance.arms:
        g, _ = arm_gain(arm, lam)
        total += g
    return instance.alpha * lam + total / instance.num_arms


def solve_fixed_point_decomposed(instance: Instance, tol=1e-8,
                                 lambda_upper=None) -> FixedPoint:
    """Evaluate the relaxation via its scalar dual: a price per pull.

    The dual function is convex piecewise-linear; a golden-section bracket
    search locates its minimum.  When ``lambda_upper`` is supplied (the price
    bound from the ergodicity constants) the search runs on [0, lambda_upper];
    otherwise the bracket grows geometrically from [0, 1].  Falls back to the
    direct LP if no bracket is found.
    """
    d0 = _dual_value(instance, 0.0)
    hi = 1.0 if lambda_upper is None else float(lambda_upper)
    expansions = 0
    while _dual_value(instance, hi) <= _dual_value(instance, hi * (1 - 1e-6)):
        hi *= 2.0
        expansions += 1
        if expansions > 40:
            fp = solve_fixed_point(instance)
            fp.fallback = True
            return fp

    lo = 0.0
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c_pt = b - invphi * (b - a)
    d_pt = a + invphi * (b - a)
    fc, fd = _dual_value(instance, c_pt), _dual_value(instance, d_pt)
    best = min((d0, 0.0), (fc, c_pt), (fd, d_pt))
    for _ in range(200):
        if b - a < 1e-11 * max(1.0, hi):
            break
        if fc <= fd:
            b, d_pt, fd = d_pt, c_pt, fc
            c_pt = b - invphi * (b - a)
            fc = _dual_value(instance, c_pt)
            best = min(best, (fc, c_pt))
        else:
            a, c_pt, fc = c_pt, d_pt, fd
            d_pt = a + invphi * (b - a)
            fd = _dual_value(instance, d_pt)
            best = min(best, (fd, d_pt))

    gain, lam = best
    delta = 1e-3
    left = (_dual_value(instance, max(lam - delta, 0.0)) - gain) / delta
    right = (_dual_value(instance, lam + delta) - gain) / delta
    fp = FixedPoint(
        gain=gain,
        y_star=None,
        mu=_mu_from_bias(instance, lam),
        lambda_rel=float(lam),
        method="decomposed",
    )
    fp.lambda_unique_hint = bool(left > 1e-5 and right > 1e-5 and lam > delta)
    return fp


def _mu_from_bias(instance, lam):
    """Best-effort multipliers from the per-arm bias vectors at price lam."""
    biases = []
    for arm in instance.arms:
        _, h = arm_gain(arm, lam)
        biases.append(h)
    shift = min(float(h.min()) for h in biases)
    return [h - shift for h in biases]


# ---------------------------------------------------------------------------
# priority index


@dataclass
class PriorityIndexTable:
    omega: list  # per arm (S,) index values
    q_pull: list  # per arm (S,) action-1 価 values
    q_rest: list
    lambda_rel: float

    def score(self, n, s) -> float:
        return float(self.omega[n][s])


def priority_index_table(instance: Instance, fixed_point: FixedPoint) -> PriorityIndexTable:
    """Static index per (arm, state): advantage of pulling now at the
    stationary price, using the fixed point's multipliers as continuation
    values.  Adding a per-arm constant to the multipliers shifts both action
    values equally, so the ordering is unaffected.
    """
    omega, q_pull, q_rest = [], [], []
    lam = fixed_point.lambda_rel
    for arm, mu in zip(instance.arms, fixed_point.mu):
        q0 = arm.rewards[0] + arm.kernels[0] @ mu
        q1 = arm.rewards[1] - lam + arm.kernels[1] @ mu
        q_rest.append(q0)
        q_pull.append(q1)
        omega.append(q1 - q0)
    return PriorityIndexTable(omega=omega, q_pull=q_pull, q_rest=q_rest,
                              lambda_rel=lam)
