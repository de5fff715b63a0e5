import numpy as np
import pytest

from conftest import single_state_instance
from rmabkit import analysis, fixed_point, model


def uniform_two_state():
    P = np.full((2, 2, 2), 0.5)
    return model.make_instance([(P, np.zeros((2, 2)))], alpha=0.5)


def identity_two_state():
    P = np.stack([np.eye(2), np.eye(2)])
    return model.make_instance([(P, np.zeros((2, 2)))], alpha=0.5)


def test_rho_one_for_uniform_kernels():
    rho, _, swapped = analysis.ergodicity_coefficient(uniform_two_state(), 1)
    assert rho == pytest.approx(1.0)
    assert swapped == pytest.approx(1.0)


def test_rho_zero_for_identity_kernels():
    inst = identity_two_state()
    for k in (1, 2, 3):
        rho, _, _ = analysis.ergodicity_coefficient(inst, k)
        assert rho == 0.0


def test_rho_witness_reproduces_value():
    inst = model.random_instance(seed=5, N=3, max_states=4)
    for k in (1, 2):
        rho, wit, _ = analysis.ergodicity_coefficient(inst, k)
        assert analysis.recompute_from_witness(inst, k, wit) == rho


def test_rho_cross_check_direct_products():
    # independent recomputation by explicit k-step matrix products
    inst = model.random_instance(seed=8, N=2, max_states=3)
    k = 3
    rho, _, _ = analysis.ergodicity_coefficient(inst, k)
    best = np.inf
    for arm in inst.arms:
        base = np.linalg.matrix_power(arm.kernels[0], k)
        for bits in range(2 ** k):
            seq = [(bits >> i) & 1 for i in range(k)]
            K = np.eye(arm.num_states)
            for a in seq:
                K = K @ arm.kernels[a]
            for s in range(arm.num_states):
                for sp in range(arm.num_states):
                    best = min(best, np.minimum(K[s], base[sp]).sum())
    assert rho == pytest.approx(best, abs=1e-15)


def test_hong_has_no_positive_coefficient():
    # frozen scan: under pulls the chain cannot re-enter the bottom state,
    # while the passive comparison chain started there never leaves it
    inst = model.counterexample_instance("hong", 1)
    rep = analysis.ergodicity_report(inst, k_max=6)
    assert rep.k_star is None
    assert all(v == 0.0 for v in rep.rho.values())


def test_yan_coefficient_regression():
    inst = model.counterexample_instance("yan", 1)
    rho, wit, swapped = analysis.ergodicity_coefficient(inst, 1)
    assert rho == pytest.approx(0.14414414414414414, abs=1e-15)
    assert (wit.s, wit.s_prime, wit.actions) == (1, 0, (1,))
    # enumerating ordered start pairs makes the role swap a relabeling
    assert swapped == rho


def test_symmetric_swap_always_equal():
    for seed in range(4):
        inst = model.random_instance(seed=seed, N=2, max_states=4)
        rho, _, swapped = analysis.ergodicity_coefficient(inst, 2)
        assert swapped == pytest.approx(rho, abs=1e-15)


def test_k_cap_requires_force():
    inst = uniform_two_state()
    with pytest.raises(ValueError):
        analysis.ergodicity_coefficient(inst, 9)
    rho, _, _ = analysis.ergodicity_coefficient(inst, 9, force=True)
    assert rho == pytest.approx(1.0)


def test_mu_bound_plug_ins():
    assert analysis.mu_bound(1, 1.0, 1.0) == pytest.approx(2.0)
    assert analysis.mu_bound(2, 0.5, 0.5) == pytest.approx(12.0)
    with pytest.raises(ValueError):
        analysis.mu_bound(1, 0.0, 0.5)


def test_mu_bound_holds_on_random_corpus():
    for seed in range(6):
        inst = model.random_instance(seed=seed, N=4, alpha=0.4, max_states=5)
        rho, _, _ = analysis.ergodicity_coefficient(inst, 1)
        if rho <= 0:
            continue
        fp = fixed_point.solve_fixed_point(inst)
        assert fp.mu_inf() <= analysis.mu_bound(1, rho, inst.alpha)


def test_theorem_bound_integral_budget_drops_rounding_term():
    tb = analysis.theorem_bound(0.1, 4, 1, 0.5, 2.0, 10, 0.5)
    assert tb.rounding_term == 0.0
    tb2 = analysis.theorem_bound(0.1, 4, 1, 0.5, 2.0, 10, 0.45)
    assert tb2.rounding_term > 0.0


def test_theorem_bound_quarter_N_scaling():
    N = 64
    tau = 4
    a = analysis.theorem_bound(0.1, tau, 1, 0.5, 2.0, N, 0.5)
    b = analysis.theorem_bound(0.1, tau, 1, 0.5, 2.0, 4 * N, 0.5)
    ratio = b.fluctuation_term / a.fluctuation_term
    lo = 0.5
    hi = 0.5 * np.sqrt(np.log(4 * N * tau ** 2) / np.log(N * tau ** 2))
    assert lo < ratio < hi + 1e-12


def test_theorem_bound_monotone_in_N_at_integral_budget():
    vals = [
        analysis.theorem_bound(0.05, 5, 1, 0.4, 1.5, N, 0.5).total
        for N in (16, 64, 256, 1024)
    ]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_jensen_gap_zero_cases(yan_arm, yan_fp):
    est, ci = analysis.jensen_gap(yan_arm, yan_fp, [np.array([0.2, 0.3, 0.5])],
                                  t=0, samples=8, seed=0)
    assert est == 0.0 and ci == 0.0
    one_hot = [np.array([0.0, 1.0, 0.0])]
    est, ci = analysis.jensen_gap(yan_arm, yan_fp, one_hot, t=3, samples=8, seed=0)
    assert est == 0.0


def test_jensen_gap_nonnegative_up_to_noise():
    inst = model.random_instance(seed=14, N=4, alpha=0.4, max_states=4)
    fp = fixed_point.solve_fixed_point(inst)
    x = model.uniform_distribution(inst)
    for t in (1, 2):
        est, ci = analysis.jensen_gap(inst, fp, x, t=t, samples=40, seed=5)
        assert est >= -3 * ci


def test_brute_force_trivial_instance():
    inst = single_state_instance(alpha=1.0)
    v = analysis.brute_force_optimal(inst)
    fp = fixed_point.solve_fixed_point(inst)
    assert v == pytest.approx(1.0, abs=1e-8)
    assert v <= fp.gain + 1e-8


def test_brute_force_upper_bounded_by_gain():
    P = np.array([[[0.7, 0.3], [0.2, 0.8]], [[0.4, 0.6], [0.9, 0.1]]])
    r = np.array([[0.1, 0.8], [0.6, 0.2]])
    inst = model.make_instance([(P, r), (P, r)], alpha=0.5)
    v_opt = analysis.brute_force_optimal(inst)
    fp = fixed_point.solve_fixed_point(inst)
    assert v_opt <= fp.gain + 1e-8


def test_brute_force_size_cap():
    inst = model.random_instance(seed=0, N=5, min_states=8, max_states=10)
    with pytest.raises(ValueError, match="beyond cap"):
        analysis.brute_force_optimal(inst)


def test_lp_update_reward_between_brute_force_and_gain():
    from rmabkit import policies, simulator

    P = np.array([[[0.7, 0.3], [0.2, 0.8]], [[0.4, 0.6], [0.9, 0.1]]])
    r = np.array([[0.1, 0.8], [0.6, 0.2]])
    inst = model.make_instance([(P, r), (P, r)], alpha=0.5)
    v_opt = analysis.brute_force_optimal(inst)
    fp = fixed_point.solve_fixed_point(inst)
    pol = policies.lp_update_policy(inst, fp, tau=6)
    recs = [simulator.run(inst, pol, T=3000, seed=s) for s in range(4)]
    finals = [r.rewards.mean() for r in recs]
    mean = np.mean(finals)
    ci = 3 * np.std(finals, ddof=1) / np.sqrt(len(finals))
    assert mean <= fp.gain + ci
    # small-N slack: the guarantee's constants dominate at N=2, so the
    # meaningful check is the ordering against the relaxation value
    assert mean >= v_opt - 0.1 - ci
