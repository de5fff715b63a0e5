"""Generic LP layer shared by all planning code.

Problems are stated in maximize form with equality rows, ``<=`` rows, and
variable lower bounds (zero by default).  Solutions carry optimal primal
vectors together with the dual multiplier of every row; all downstream
multiplier extraction (state multipliers, budget prices) goes through here.

The numerical engine is HiGHS dual simplex via scipy, which is deterministic
for a fixed problem and certifies duals from its terminal basis.  Feasibility
and strong-duality residuals are checked on every optimal return.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

FEAS_TOL = 1e-8
GAP_TOL = 1e-7
DUAL_SIGN_TOL = 1e-10


class LpError(Exception):
    """Raised on numerical failure (not plain infeasible/unbounded)."""


@dataclass
class LpProblem:
    """max c.x  s.t.  A_eq x = b_eq,  A_ineq x <= b_ineq,  x >= lb."""

    c: np.ndarray
    A_eq: object = None  # ndarray or scipy sparse
    b_eq: np.ndarray = None
    A_ineq: object = None
    b_ineq: np.ndarray = None
    lb: np.ndarray = None  # default zeros

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.shape[0]
        if not np.all(np.isfinite(self.c)):
            raise ValueError("non-finite objective")
        for name in ("A_eq", "A_ineq"):
            A = getattr(self, name)
            if A is not None and not sp.issparse(A):
                setattr(self, name, np.asarray(A, dtype=float))
        if self.b_eq is not None:
            self.b_eq = np.asarray(self.b_eq, dtype=float)
        if self.b_ineq is not None:
            self.b_ineq = np.asarray(self.b_ineq, dtype=float)
        if self.lb is None:
            self.lb = np.zeros(n)
        else:
            self.lb = np.asarray(self.lb, dtype=float)
        if self.A_eq is not None and self.A_eq.shape != (len(self.b_eq), n):
            raise ValueError("A_eq shape mismatch")
        if self.A_ineq is not None and self.A_ineq.shape != (len(self.b_ineq), n):
            raise ValueError("A_ineq shape mismatch")


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded
    x: np.ndarray = None
    value: float = None
    duals_eq: np.ndarray = field(default=None)
    duals_ineq: np.ndarray = field(default=None)
    duals_lb: np.ndarray = field(default=None)
    cs_residual: float = 0.0  # max ineq dual*slack
    feas_residual: float = 0.0
    duality_gap: float = 0.0


def solve(problem: LpProblem) -> LpSolution:
    """Solve the LP, returning primal and duals in maximize-sense signs.

    Inequality duals are >= 0 (shadow price of relaxing b_ineq); the duality
    gap |c.x - duals.rhs - reduced.lb| and the complementary-slackness
    residual are recorded and asserted against module tolerances.
    """
    res = linprog(
        c=-problem.c,
        A_ub=problem.A_ineq,
        b_ub=problem.b_ineq,
        A_eq=problem.A_eq,
        b_eq=problem.b_eq,
        bounds=np.stack([problem.lb, np.full_like(problem.lb, np.inf)], axis=1),
        method="highs-ds",
    )
    if res.status == 2:
        return LpSolution(status="infeasible")
    if res.status == 3:
        return LpSolution(status="unbounded")
    if res.status != 0:
        raise LpError(f"solver failure: {res.message}")

    x = np.asarray(res.x)
    value = float(problem.c @ x)
    duals_eq = -np.asarray(res.eqlin.marginals) if problem.A_eq is not None else None
    duals_ineq = (
        -np.asarray(res.ineqlin.marginals) if problem.A_ineq is not None else None
    )
    duals_lb = -np.asarray(res.lower.marginals)

    feas = 0.0
    cs = 0.0
    dual_rhs = float(duals_lb @ problem.lb)
    if problem.A_eq is not None:
        feas = max(feas, float(np.abs(problem.A_eq @ x - problem.b_eq).max(initial=0.0)))
        dual_rhs += float(duals_eq @ problem.b_eq)
    if problem.A_ineq is not None:
        slack = problem.b_ineq - problem.A_ineq @ x
        feas = max(feas, float(np.maximum(-slack, 0.0).max(initial=0.0)))
        if np.any(duals_ineq < -DUAL_SIGN_TOL):
            raise LpError("negative inequality dual from solver")
        cs = float(
            np.abs(duals_ineq * slack).max(initial=0.0)
        )
        dual_rhs += float(duals_ineq @ problem.b_ineq)
    feas = max(feas, float(np.maximum(problem.lb - x, 0.0).max(initial=0.0)))
    gap = abs(value - dual_rhs)

    if feas > FEAS_TOL:
        raise LpError(f"primal feasibility residual {feas:.2e}")
    if gap > GAP_TOL * (1.0 + abs(value)):
        raise LpError(f"duality gap {gap:.2e} at value {value:.6g}")

    return LpSolution(
        status="optimal",
        x=x,
        value=value,
        duals_eq=duals_eq,
        duals_ineq=duals_ineq,
        duals_lb=duals_lb,
        cs_residual=cs,
        feas_residual=feas,
        duality_gap=gap,
    )
