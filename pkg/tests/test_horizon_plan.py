import numpy as np
import pytest

from rmabkit import fixed_point, horizon_plan, model


@pytest.fixture(scope="module")
def small_instance():
    return model.random_instance(seed=21, N=3, alpha=0.4, max_states=5)


@pytest.fixture(scope="module")
def small_fp(small_instance):
    return fixed_point.solve_fixed_point(small_instance)


def test_tau_zero_is_terminal_value(small_instance, small_fp):
    x = model.uniform_distribution(small_instance)
    plan = horizon_plan.plan(small_instance, x, 0, small_fp.mu)
    expected = sum(float(m @ v) for m, v in zip(small_fp.mu, x)) / 3
    assert plan.value == expected
    assert plan.flows == [] and len(plan.lambdas) == 0


def test_full_budget_single_arm_equals_backward_induction(yan_arm, yan_fp):
    inst = model.Instance(arms=yan_arm.arms, alpha=1.0)
    x = model.uniform_distribution(inst)
    for tau in (1, 3, 5):
        plan = horizon_plan.plan(inst, x, tau, yan_fp.mu)
        w = horizon_plan.arm_horizon_values(inst.arms[0], tau, yan_fp.mu[0])
        assert plan.value == pytest.approx(float(x[0] @ w[tau]), abs=1e-8)


def test_value_concavity_in_initial_state(small_instance, small_fp):
    rng = np.random.default_rng(3)
    planner = horizon_plan.HorizonPlanner(small_instance, 3, small_fp.mu)
    for _ in range(5):
        x1 = [rng.dirichlet(np.ones(S)) for S in small_instance.state_sizes]
        x2 = [rng.dirichlet(np.ones(S)) for S in small_instance.state_sizes]
        mid = [0.5 * a + 0.5 * b for a, b in zip(x1, x2)]
        v1 = planner.plan(x1).value
        v2 = planner.plan(x2).value
        vm = planner.plan(mid).value
        assert vm >= 0.5 * v1 + 0.5 * v2 - 1e-8


def test_flow_plan_invariants(small_instance, small_fp):
    x = model.uniform_distribution(small_instance)
    plan = horizon_plan.plan(small_instance, x, 4, small_fp.mu)
    for n, arm in enumerate(small_instance.arms):
        f = plan.flows[n]
        np.testing.assert_allclose(f[0, 0] + f[0, 1], x[n], atol=1e-8)
        for t in range(3):
            nxt = f[t, 0] @ arm.kernels[0] + f[t, 1] @ arm.kernels[1]
            np.testing.assert_allclose(f[t + 1, 0] + f[t + 1, 1], nxt, atol=1e-8)
        assert f.min() >= 0.0
    pulls = [sum(plan.flows[n][t, 1].sum() for n in range(3)) for t in range(4)]
    assert max(pulls) / 3 <= small_instance.alpha + 1e-8
    for lam, pull in zip(plan.lambdas, pulls):
        assert lam >= -1e-10
        assert abs(lam * (small_instance.alpha - pull / 3)) <= 1e-7


def test_relaxed_value_weak_duality(small_instance, small_fp):
    rng = np.random.default_rng(8)
    x = model.uniform_distribution(small_instance)
    tau = 3
    v = horizon_plan.plan(small_instance, x, tau, small_fp.mu).value
    for _ in range(10):
        lam = rng.uniform(0.0, 1.5, size=tau)
        relaxed = horizon_plan.relaxed_value(small_instance, x, tau, small_fp.mu, lam)
        assert relaxed >= v - 1e-9


def test_relaxed_value_strong_duality_at_optimal_prices(small_instance, small_fp):
    x = model.uniform_distribution(small_instance)
    tau = 4
    plan = horizon_plan.plan(small_instance, x, tau, small_fp.mu)
    relaxed = horizon_plan.relaxed_value(small_instance, x, tau, small_fp.mu,
                                         plan.lambdas)
    assert relaxed == pytest.approx(plan.value, abs=1e-6)


def test_relaxed_value_exact_when_budget_slack(yan_arm, yan_fp):
    inst = model.Instance(arms=yan_arm.arms, alpha=1.0)
    x = model.uniform_distribution(inst)
    v = horizon_plan.plan(inst, x, 3, yan_fp.mu).value
    relaxed = horizon_plan.relaxed_value(inst, x, 3, yan_fp.mu, np.zeros(3))
    assert relaxed == pytest.approx(v, abs=1e-9)


def test_perturbed_prices_stay_above_plan_value(small_instance, small_fp):
    x = model.uniform_distribution(small_instance)
    plan = horizon_plan.plan(small_instance, x, 3, small_fp.mu)
    bumped = plan.lambdas + 0.1
    relaxed = horizon_plan.relaxed_value(small_instance, x, 3, small_fp.mu, bumped)
    assert relaxed >= plan.value - 1e-9


def test_rotated_cost_zero_at_fixed_point(small_instance, small_fp):
    xs = small_fp.stationary_distribution()
    us = small_fp.stationary_control()
    assert abs(horizon_plan.rotated_cost(small_instance, small_fp, xs, us)) <= 1e-8


def test_rotated_cost_nonnegative_at_passive_control(small_instance, small_fp):
    xs = small_fp.stationary_distribution()
    zeros = [np.zeros_like(u) for u in small_fp.stationary_control()]
    assert horizon_plan.rotated_cost(small_instance, small_fp, xs, zeros) >= -1e-8


def test_rotated_cost_random_sweep(small_instance, small_fp):
    rng = np.random.default_rng(17)
    worst = np.inf
    for _ in range(200):
        x = [rng.dirichlet(np.ones(S)) for S in small_instance.state_sizes]
        u = [xv * rng.uniform(0.0, 1.0, size=len(xv)) for xv in x]
        total = sum(v.sum() for v in u)
        cap = small_instance.budget_units()
        if total > cap:
            u = [v * (cap / total) for v in u]
        worst = min(worst, horizon_plan.rotated_cost(small_instance, small_fp, x, u))
    assert worst >= -1e-8


def test_rotated_cost_rejects_infeasible_control(small_instance, small_fp):
    x = model.uniform_distribution(small_instance)
    with pytest.raises(ValueError):
        horizon_plan.rotated_cost(small_instance, small_fp, x,
                                  [v + 1.0 for v in x])


def test_surrogate_cost_zero_horizon(small_instance, small_fp):
    x = model.uniform_distribution(small_instance)
    assert horizon_plan.surrogate_cost(small_instance, small_fp, x, 0) == 0.0


def test_surrogate_cost_zero_at_stationary_point(small_instance, small_fp):
    xs = small_fp.stationary_distribution()
    for tau in range(1, 6):
        cost = horizon_plan.surrogate_cost(small_instance, small_fp, xs, tau)
        assert abs(cost) <= 1e-8


def test_surrogate_cost_nondecreasing(small_instance, small_fp):
    rng = np.random.default_rng(2)
    for _ in range(3):
        x = [rng.dirichlet(np.ones(S)) for S in small_instance.state_sizes]
        costs = [horizon_plan.surrogate_cost(small_instance, small_fp, x, t)
                 for t in range(1, 8)]
        assert all(b >= a - 1e-8 for a, b in zip(costs, costs[1:]))
        assert all(c >= -1e-8 for c in costs)


def test_select_horizon_at_stationary_point(small_instance, small_fp):
    xs = small_fp.stationary_distribution()
    tau, converged = horizon_plan.select_horizon(small_instance, small_fp, xs,
                                                 1e-6, 10)
    assert tau == 1 and converged


def test_select_horizon_huge_eps(small_instance, small_fp):
    x = model.uniform_distribution(small_instance)
    tau, converged = horizon_plan.select_horizon(small_instance, small_fp, x,
                                                 small_fp.gain + 1.0, 10)
    assert tau == 1 and converged


def test_select_horizon_yan_regression(yan_arm, yan_fp):
    x = model.uniform_distribution(yan_arm)
    tau, converged = horizon_plan.select_horizon(yan_arm, yan_fp, x, 1e-3, 20)
    assert converged
    assert tau == 1  # frozen: the single-arm fluid problem settles immediately


def test_bias_estimate_at_stationary_point(small_instance, small_fp):
    # the transient-value limit at the stationary point is minus the storage
    xs = small_fp.stationary_distribution()
    est, _, converged = horizon_plan.bias_estimate(small_instance, small_fp, xs,
                                                   1e-6)
    storage = sum(float(m @ v) for m, v in zip(small_fp.mu, xs)) / 3
    assert converged
    assert est == pytest.approx(-storage, abs=1e-6)


def test_bias_estimate_convex_and_lipschitz(yan_arm, yan_fp):
    from rmabkit import analysis

    rho_1, _, _ = analysis.ergodicity_coefficient(yan_arm, 1)
    lip = yan_fp.mu_inf() + (1 + 1 / rho_1) * (1 / rho_1)
    rng = np.random.default_rng(5)
    tol = 1e-6
    for _ in range(3):
        x1 = [rng.dirichlet(np.ones(3))]
        x2 = [rng.dirichlet(np.ones(3))]
        h1, _, _ = horizon_plan.bias_estimate(yan_arm, yan_fp, x1, tol)
        h2, _, _ = horizon_plan.bias_estimate(yan_arm, yan_fp, x2, tol)
        diff = np.abs(x1[0] - x2[0]).sum()
        assert abs(h1 - h2) <= lip * diff + 2 * tol
        mid = [0.5 * x1[0] + 0.5 * x2[0]]
        hm, _, _ = horizon_plan.bias_estimate(yan_arm, yan_fp, mid, tol)
        assert hm <= 0.5 * h1 + 0.5 * h2 + 2 * tol


def test_value_lipschitz_one_arm_perturbation(small_instance, small_fp):
    from rmabkit import analysis

    rho_1, _, _ = analysis.ergodicity_coefficient(small_instance, 1)
    assert rho_1 > 0
    rng = np.random.default_rng(31)
    t = 4
    planner = horizon_plan.HorizonPlanner(small_instance, t, small_fp.mu)
    geo = sum((1 - rho_1) ** (l - 1) for l in range(1, t + 1))
    lip = (small_fp.mu_inf() + (1 + 1 / rho_1) * geo) / small_instance.num_arms
    for _ in range(10):
        x = [rng.dirichlet(np.ones(S)) for S in small_instance.state_sizes]
        xt = [v.copy() for v in x]
        i = int(rng.integers(len(xt)))
        xt[i] = rng.dirichlet(np.ones(len(xt[i])))
        v1 = planner.plan(x).value
        v2 = planner.plan(xt).value
        assert v1 - v2 <= lip * np.abs(x[i] - xt[i]).sum() + 1e-6


def test_plan_value_upper_bound_asserted(small_instance, small_fp):
    x = model.uniform_distribution(small_instance)
    plan = horizon_plan.plan(small_instance, x, 5, small_fp.mu)
    assert plan.value <= 5 + small_fp.mu_inf() + 1e-6


def test_exactly_mode_budget_rows(small_instance, small_fp):
    x = model.uniform_distribution(small_instance)
    plan = horizon_plan.plan(small_instance, x, 3, small_fp.mu,
                             budget_mode="exactly")
    target = small_instance.max_pulls()
    for t in range(3):
        pull = sum(plan.flows[n][t, 1].sum() for n in range(3))
        assert pull == pytest.approx(target, abs=1e-7)
