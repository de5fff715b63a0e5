import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_lp
from rmabkit import lp_core


def test_single_variable_cap():
    sol = lp_core.solve(lp_core.LpProblem(c=[1.0], A_ineq=[[1.0]], b_ineq=[3.0]))
    assert sol.status == "optimal"
    assert sol.x[0] == pytest.approx(3.0, abs=1e-9)
    assert sol.duals_ineq[0] == pytest.approx(1.0, abs=1e-9)


def test_equality_dual():
    sol = lp_core.solve(
        lp_core.LpProblem(c=[1.0, 1.0], A_eq=[[1.0, 1.0]], b_eq=[1.0])
    )
    assert sol.value == pytest.approx(1.0, abs=1e-9)
    assert sol.duals_eq[0] == pytest.approx(1.0, abs=1e-9)


def test_infeasible_status():
    sol = lp_core.solve(
        lp_core.LpProblem(c=[1.0], A_eq=[[1.0]], b_eq=[-2.0])
    )
    assert sol.status == "infeasible"


def test_unbounded_status():
    sol = lp_core.solve(lp_core.LpProblem(c=[1.0]))
    assert sol.status == "unbounded"


def test_nonzero_lower_bounds_in_duality_accounting():
    sol = lp_core.solve(
        lp_core.LpProblem(c=[-1.0], A_ineq=[[1.0]], b_ineq=[5.0], lb=[2.0])
    )
    assert sol.x[0] == pytest.approx(2.0, abs=1e-9)
    assert sol.duality_gap <= 1e-7 * (1 + abs(sol.value))


def test_deterministic_support():
    rng = np.random.default_rng(4)
    prob = random_lp(rng)
    a = lp_core.solve(prob)
    b = lp_core.solve(prob)
    np.testing.assert_array_equal(a.x, b.x)
    assert a.value == b.value


def test_random_lp_battery_invariants():
    rng = np.random.default_rng(99)
    solved = 0
    for _ in range(60):
        sol = lp_core.solve(random_lp(rng))
        if sol.status != "optimal":
            continue
        solved += 1
        assert sol.feas_residual <= lp_core.FEAS_TOL
        assert sol.duality_gap <= lp_core.GAP_TOL * (1 + abs(sol.value))
        assert sol.cs_residual <= 1e-7
        assert np.all(sol.duals_ineq >= -1e-10)
    assert solved >= 50


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_duality_gap_property(seed):
    sol = lp_core.solve(random_lp(np.random.default_rng(seed)))
    if sol.status == "optimal":
        assert sol.duality_gap <= 1e-7 * (1 + abs(sol.value))


def test_shape_validation():
    with pytest.raises(ValueError):
        lp_core.LpProblem(c=[1.0, 2.0], A_eq=[[1.0]], b_eq=[1.0])
    with pytest.raises(ValueError):
        lp_core.LpProblem(c=[np.inf])
