"""Stochastic execution of the joint arm system and the normalized metric.

Arms transition independently given the joint action; the per-step reward is
the across-arm mean.  Each trajectory owns one generator derived from
(master seed, replicate index), and the policy draw precedes the transition
draws in a fixed order, so replicate results are identical regardless of
scheduling.  The reported metric is the running time-average reward divided
by the relaxation gain; it may exceed one early on but is capped by one in
the long run up to noise.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .model import Instance


@dataclass
class TrajectoryRecord:
    seed: object
    states: np.ndarray  # (T+1, N) visited joint states
    actions: np.ndarray  # (T, N)
    rewards: np.ndarray  # (T,) per-step mean reward
    policy_label: str = ""


@dataclass
class MetricSeries:
    t: np.ndarray  # times 1..T
    mean: np.ndarray  # across-seed mean of the normalized running average
    ci95: np.ndarray  # half-widths
    per_seed_final: np.ndarray
    final_mean: float
    final_ci95: float


def trajectory_rng(master_seed, replicate) -> np.random.Generator:
    entropy = tuple(master_seed) if isinstance(master_seed, tuple) else (master_seed,)
    return np.random.default_rng(np.random.SeedSequence(entropy + (replicate,)))


def random_initial_state(instance: Instance, rng) -> np.ndarray:
    return np.array([rng.integers(arm.num_states) for arm in instance.arms])


def step(instance: Instance, state, action, rng):
    """One joint transition; returns (next_state, mean reward)."""
    action = np.asarray(action, dtype=int)
    if action.sum() > instance.max_pulls():
        raise ValueError("action exceeds the pull budget")
    nxt = np.empty(instance.num_arms, dtype=int)
    reward = 0.0
    for n, arm in enumerate(instance.arms):
        s, a = int(state[n]), int(action[n])
        reward += arm.rewards[a][s]
        nxt[n] = rng.choice(arm.num_states, p=arm.kernels[a][s])
    return nxt, reward / instance.num_arms


def run(instance: Instance, policy, T: int, seed, replicate=0,
        initial_state=None) -> TrajectoryRecord:
    """Seeded rollout of ``policy`` for T steps."""
    if T < 1:
        raise ValueError("T must be >= 1")
    rng = trajectory_rng(seed, replicate)
    if initial_state is None:
        state = random_initial_state(instance, rng)
    else:
        state = np.asarray(initial_state, dtype=int)
    N = instance.num_arms
    states = np.empty((T + 1, N), dtype=int)
    actions = np.empty((T, N), dtype=int)
    rewards = np.empty(T)
    states[0] = state
    for t in range(T):
        A = policy.decide(states[t], rng)
        states[t + 1], rewards[t] = step(instance, states[t], A, rng)
        actions[t] = A
    return TrajectoryRecord(seed=(seed, replicate), states=states,
                            actions=actions, rewards=rewards,
                            policy_label=policy.label)


def normalized_metric(records, g_star: float) -> MetricSeries:
    """Running average reward over g_star, averaged across seeds with a
    Student-t 95% interval."""
    if g_star <= 0:
        raise ValueError("gain must be positive; report raw rewards instead")
    series = []
    for rec in records:
        T = len(rec.rewards)
        t = np.arange(1, T + 1)
        series.append(np.cumsum(rec.rewards) / (t * g_star))
    M = np.stack(series)  # (seeds, T)
    mean = M.mean(axis=0)
    n = M.shape[0]
    if n > 1:
        from scipy import stats

        half = stats.t.ppf(0.975, n - 1) * M.std(axis=0, ddof=1) / np.sqrt(n)
    else:
        half = np.zeros(M.shape[1])
    return MetricSeries(
        t=np.arange(1, M.shape[1] + 1),
        mean=mean,
        ci95=half,
        per_seed_final=M[:, -1].copy(),
        final_mean=float(mean[-1]),
        final_ci95=float(half[-1]),
    )


CSV_COLUMNS = ["scenario", "policy", "N", "alpha", "tau", "seed", "t",
               "avg_reward", "normalized_reward"]


def write_rows(writer, scenario, policy_label, N, alpha, tau, seed,
               rewards, g_star, stride=1):
    """Append one trajectory to a results CSV (one row per recorded t)."""
    csum = np.cumsum(rewards)
    for t in range(stride - 1, len(rewards), stride):
        avg = csum[t] / (t + 1)
        writer.writerow([
            scenario, policy_label, N, f"{alpha:.10g}",
            tau if tau is not None else "",
            seed, t + 1, f"{avg:.10g}",
            f"{avg / g_star:.10g}" if g_star > 0 else "",
        ])


def open_results_csv(path):
    f = open(path, "w", newline="")
    writer = csv.writer(f)
    writer.writerow(CSV_COLUMNS)
    return f, writer
