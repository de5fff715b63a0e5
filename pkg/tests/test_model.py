import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from rmabkit import model


def two_arm_instance():
    P = np.array([[[0.5, 0.5], [0.2, 0.8]], [[1.0, 0.0], [0.3, 0.7]]])
    r = np.array([[0.1, 0.2], [0.3, 0.4]])
    return model.make_instance([(P, r), (P, r)], alpha=0.5)


def test_validate_well_formed_instance_is_clean():
    rep = model.validate(two_arm_instance())
    assert rep.ok and rep.violations == []


def test_validate_flags_substochastic_row():
    inst = two_arm_instance()
    bad = np.array(inst.arms[0].kernels)
    bad[1, 1] = [0.2, 0.7]  # sums to 0.9
    arms = (
        model.ArmModel(id=0, kernels=bad, rewards=inst.arms[0].rewards),
    ) + inst.arms[1:]
    rep = model.validate(model.Instance(arms=arms, alpha=0.5))
    assert any("row-stochasticity arm 0 action 1 row 1" in v for v in rep.violations)


def test_reward_rescale_noted_not_violation():
    P = np.ones((2, 1, 1))
    inst = model.make_instance([(P, np.array([[0.0], [1.5]]))], alpha=1.0)
    rep = model.validate(inst)
    assert rep.ok
    assert any("rescaled" in n for n in rep.notes)
    assert inst.reward_scale == 1.5
    # stored rewards back in [0, 1]
    assert inst.arms[0].rewards.max() == 1.0


def test_rewards_already_in_unit_interval_untouched():
    inst = two_arm_instance()
    assert inst.reward_scale == 1.0 and inst.reward_offset == 0.0
    assert inst.arms[0].rewards[0, 0] == 0.1


def test_one_hot_basic():
    inst = two_arm_instance()
    x = model.one_hot([1, 0], inst)
    assert np.array_equal(x[0], [0.0, 1.0])
    assert np.array_equal(x[1], [1.0, 0.0])


def test_one_hot_three_state():
    arm = (np.ones((2, 3, 3)) / 3.0, np.zeros((2, 3)))
    inst = model.make_instance([arm], alpha=1.0)
    assert np.array_equal(model.one_hot([1], inst)[0], [0, 1, 0])


def test_one_hot_rejects_out_of_range():
    inst = two_arm_instance()
    with pytest.raises(ValueError):
        model.one_hot([2, 0], inst)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_one_hot_round_trip(seed):
    rng = np.random.default_rng(seed)
    inst = model.random_instance(seed=seed, N=int(rng.integers(1, 5)), max_states=6)
    state = np.array([rng.integers(arm.num_states) for arm in inst.arms])
    x = model.one_hot(state, inst)
    recovered = np.array([int(np.argmax(v)) for v in x])
    assert np.array_equal(recovered, state)
    for v in x:
        assert v.sum() == 1.0 and set(np.unique(v)) <= {0.0, 1.0}


def test_random_instance_deterministic():
    a = model.random_instance(seed=7, N=3)
    b = model.random_instance(seed=7, N=3)
    assert a.state_sizes == b.state_sizes
    for arm_a, arm_b in zip(a.arms, b.arms):
        np.testing.assert_array_equal(arm_a.kernels, arm_b.kernels)
        np.testing.assert_array_equal(arm_a.rewards, arm_b.rewards)


def test_random_instance_rows_stochastic_and_valid():
    inst = model.random_instance(seed=11, N=20)
    assert model.validate(inst).ok
    for arm in inst.arms:
        np.testing.assert_allclose(arm.kernels.sum(axis=2), 1.0, atol=1e-12)


def test_random_instance_state_sizes_uniform():
    # 1000 sampled arms; chi-square uniformity on {1..10} at the 1% level
    sizes = [
        arm.num_states
        for arm in model.random_instance(seed=123, N=1000).arms
    ]
    counts = np.bincount(sizes, minlength=11)[1:]
    _, p = stats.chisquare(counts)
    assert p > 0.01


def test_random_instance_min_states_option():
    inst = model.random_instance(seed=5, N=50, min_states=2)
    assert min(inst.state_sizes) >= 2


def test_counterexample_hong_matrices():
    arm, alpha = model.counterexample_hong()
    assert alpha == 0.5
    assert arm.num_states == 8
    P0, P1 = arm.kernels
    assert P0[0, 0] == 1.0
    assert P0[7, 0] == 0.1 and P0[7, 7] == 0.9
    assert P1[0, 0] == 0.9 and P1[0, 1] == 0.1
    assert P1[4, 3] == 0.46 and P1[7, 6] == 0.43
    np.testing.assert_allclose(P0.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(P1.sum(axis=1), 1.0, atol=1e-12)
    assert arm.rewards[0][7] == 0.1
    assert arm.rewards[0][:7].sum() == 0.0 and arm.rewards[1].sum() == 0.0


def test_counterexample_yan_matrices():
    arm, alpha = model.counterexample_yan()
    assert alpha == 0.4
    assert arm.num_states == 3
    # rows renormalized from the printed roundings
    np.testing.assert_allclose(arm.kernels.sum(axis=2), 1.0, atol=1e-15)
    np.testing.assert_allclose(
        arm.kernels[1][1], np.array([0.568, 0.411, 0.020]) / 0.999, atol=1e-15
    )
    assert arm.rewards[1][0] == 0.374
    assert arm.rewards[0].sum() == 0.0


def test_mixed_counterexample_split():
    inst = model.mixed_counterexample(10)
    assert inst.alpha == 0.4
    sizes = inst.state_sizes
    assert sizes.count(8) == 5 and sizes.count(3) == 5
    odd = model.mixed_counterexample(7)
    assert odd.state_sizes.count(8) == 4 and odd.state_sizes.count(3) == 3
    assert model.validate(odd).ok


def test_generators_always_validate():
    for inst in [
        model.random_instance(seed=3, N=4),
        model.counterexample_instance("hong", 4),
        model.counterexample_instance("yan", 5),
        model.mixed_counterexample(6),
    ]:
        assert model.validate(inst).ok


def test_max_pulls_floor_guard():
    inst = model.random_instance(seed=0, N=10, alpha=0.3)
    assert inst.max_pulls() == 3  # 0.3 * 10 is 2.999... in binary


def test_instance_json_round_trip(tmp_path):
    inst = model.random_instance(seed=9, N=3)
    path = tmp_path / "inst.json"
    model.save_instance(inst, path)
    loaded = model.load_instance(path)
    assert loaded.alpha == inst.alpha
    for a, b in zip(inst.arms, loaded.arms):
        np.testing.assert_allclose(a.kernels, b.kernels, atol=1e-12)
        np.testing.assert_allclose(a.rewards, b.rewards, atol=1e-12)


def test_loader_rejects_dimension_mismatch(tmp_path):
    doc = {
        "alpha": 0.5,
        "arms": [{
            "states": 3,
            "P0": [[1.0, 0.0], [0.0, 1.0]],
            "P1": [[1.0, 0.0], [0.0, 1.0]],
            "r0": [0.0, 0.0],
            "r1": [1.0, 1.0],
        }],
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError, match="disagree"):
        model.load_instance(path)
