"""Bandit instances: arm models, validation, encodings, and generators.

An arm is a finite controlled Markov chain with two actions (pull / leave
alone), row-stochastic kernels per action, and per state-action rewards in
[0, 1].  An instance bundles N heterogeneous arms with a budget fraction
``alpha``: at most ``alpha * N`` arms may be pulled per step ("at-most"
mode) or exactly ``floor(alpha * N)`` ("exactly" mode).

Raw rewards outside [0, 1] are affinely rescaled on construction and the
scale factors are retained so results can be reported in raw units.
Printed matrices (the shipped counterexamples) carry 2-3 decimal rounding;
rows are renormalized at load and the residual is recorded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

ROW_SUM_TOL = 1e-12
SIMPLEX_TOL = 1e-10

# loor-guard for floor(alpha*N): 0.3*10 is 2.999... in binary.
_FLOOR_EPS = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.asarray(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ArmModel:
    """One arm: kernels[a] is the S x S transition matrix under action a,
    rewards[a] the length-S reward vector under action a."""

    id: int
    kernels: np.ndarray  # (num_actions, S, S)
    rewards: np.ndarray  # (num_actions, S)

    def __post_init__(self):
        object.__setattr__(self, "kernels", _frozen(self.kernels))
        object.__setattr__(self, "rewards", _frozen(self.rewards))

    @property
    def num_states(self) -> int:
        return self.kernels.shape[1]

    @property
    def num_actions(self) -> int:
        return self.kernels.shape[0]


@dataclass(frozen=True)
class Instance:
    """N heterogeneous arms plus a budget fraction alpha in (0, 1]."""

    arms: tuple[ArmModel, ...]
    alpha: float
    budget_mode: str = "at-most"  # "at-most" | "exactly"
    reward_offset: float = 0.0  # raw = offset + scale * stored
    reward_scale: float = 1.0
    renorm_residual: float = 0.0  # max |row sum - 1| before renormalization

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        if self.budget_mode not in ("at-most", "exactly"):
            raise ValueError(f"unknown budget_mode {self.budget_mode!r}")

    @property
    def num_arms(self) -> int:
        return len(self.arms)

    @property
    def state_sizes(self) -> tuple[int, ...]:
        return tuple(a.num_states for a in self.arms)

    def budget_units(self) -> float:
        """alpha * N, the (possibly fractional) per-step pull budget."""
        return self.alpha * self.num_arms

    def max_pulls(self) -> int:
        """floor(alpha * N), the hard per-step pull count."""
        return int(np.floor(self.budget_units() + _FLOOR_EPS))


JointState = np.ndarray  # int vector of length N
ProductDistribution = list  # list of N simplex vectors


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(instance: Instance) -> ValidationReport:
    """Check every structural invariant; returns a report instead of raising."""
    rep = ValidationReport()
    if instance.num_arms < 1:
        rep.violations.append("instance has no arms")
        return rep
    if not (0.0 < instance.alpha <= 1.0):
        rep.violations.append(f"alpha {instance.alpha} outside (0, 1]")
    for arm in instance.arms:
        if arm.num_states < 1:
            rep.violations.append(f"arm {arm.id}: empty state space")
            continue
        if arm.kernels.shape != (arm.num_actions, arm.num_states, arm.num_states):
            rep.violations.append(f"arm {arm.id}: kernel shape {arm.kernels.shape}")
            continue
        for a in range(arm.num_actions):
            P = arm.kernels[a]
            if np.any(P < -0.0) or np.any(P > 1.0 + ROW_SUM_TOL):
                rep.violations.append(f"entry out of [0,1] arm {arm.id} action {a}")
            bad = np.where(np.abs(P.sum(axis=1) - 1.0) > ROW_SUM_TOL)[0]
            for row in bad:
                rep.violations.append(
                    f"row-stochasticity arm {arm.id} action {a} row {row}"
                )
        if np.any(arm.rewards < -ROW_SUM_TOL) or np.any(arm.rewards > 1.0 + ROW_SUM_TOL):
            rep.violations.append(f"arm {arm.id}: reward outside [0,1]")
    if instance.reward_scale != 1.0 or instance.reward_offset != 0.0:
        rep.notes.append(
            "rewards rescaled: raw = "
            f"{instance.reward_offset} + {instance.reward_scale} * stored"
        )
    if instance.renorm_residual > 0.0:
        rep.notes.append(f"kernel rows renormalized, residual {instance.renorm_residual:.3g}")
    return rep


def make_instance(arms_data, alpha, budget_mode="at-most"):
    """Build an Instance from raw (P_list, r_list) pairs, applying row
    renormalization and the [0, 1] reward normalization.

    ``arms_data`` is a sequence of (kernels, rewards) where kernels is
    (A, S, S)-like and rewards is (A, S)-like, in raw units.
    """
    kernels_list = []
    rewards_list = []
    residual = 0.0
    for P, r in arms_data:
        P = np.asarray(P, dtype=float)
        r = np.asarray(r, dtype=float)
        if P.ndim != 3 or P.shape[1] != P.shape[2] or r.shape != P.shape[:2]:
            raise ValueError(f"inconsistent arm shapes {P.shape}, {r.shape}")
        sums = P.sum(axis=2)
        residual = max(residual, float(np.abs(sums - 1.0).max()))
        if np.any(sums <= 0):
            raise ValueError("kernel row with nonpositive mass")
        P = P / sums[:, :, None]
        kernels_list.append(P)
        rewards_list.append(r)

    all_r = np.concatenate([r.ravel() for r in rewards_list])
    lo, hi = float(all_r.min()), float(all_r.max())
    offset, scale = 0.0, 1.0
    if lo < 0.0 or hi > 1.0:
        if hi > lo:
            offset, scale = lo, hi - lo
            rewards_list = [(r - lo) / (hi - lo) for r in rewards_list]
        else:
            # constant reward outside [0,1]: shift to 0, policies unaffected
            offset, scale = lo, 1.0
            rewards_list = [r - lo for r in rewards_list]

    arms = tuple(
        ArmModel(id=i, kernels=P, rewards=r)
        for i, (P, r) in enumerate(zip(kernels_list, rewards_list))
    )
    return Instance(
        arms=arms,
        alpha=float(alpha),
        budget_mode=budget_mode,
        reward_offset=offset,
        reward_scale=scale,
        renorm_residual=residual,
    )


def one_hot(joint_state, instance: Instance) -> ProductDistribution:
    """Encode a joint state as a product of one-hot simplex vectors."""
    s = np.asarray(joint_state, dtype=int)
    if s.shape != (instance.num_arms,):
        raise ValueError(f"state length {s.shape} != N={instance.num_arms}")
    x = []
    for n, arm in enumerate(instance.arms):
        if not (0 <= s[n] < arm.num_states):
            raise ValueError(f"state {s[n]} out of range for arm {n}")
        v = np.zeros(arm.num_states)
        v[s[n]] = 1.0
        x.append(v)
    return x


def uniform_distribution(instance: Instance) -> ProductDistribution:
    return [np.full(S, 1.0 / S) for S in instance.state_sizes]


def check_product_distribution(x, instance: Instance) -> None:
    if len(x) != instance.num_arms:
        raise ValueError("distribution arity != number of arms")
    for n, (v, S) in enumerate(zip(x, instance.state_sizes)):
        v = np.asarray(v, dtype=float)
        if v.shape != (S,):
            raise ValueError(f"arm {n}: distribution length {v.shape} != {S}")
        if np.any(v < -SIMPLEX_TOL) or abs(v.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"arm {n}: not a simplex vector (sum {v.sum()})")


def random_instance(seed, N, max_states=10, alpha=0.3, min_states=1,
                    budget_mode="at-most") -> Instance:
    """Random heterogeneous instance: state-space sizes uniform on
    {min_states..max_states}, kernel entries standard-exponential normalized
    row-wise, rewards standard-exponential then rescaled to [0, 1].

    Deterministic in (seed, N, max_states, alpha, min_states).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    rng = np.random.default_rng(seed)
    arms_data = []
    for _ in range(N):
        S = int(rng.integers(min_states, max_states + 1))
        P = rng.exponential(1.0, size=(2, S, S))
        r = rng.exponential(1.0, size=(2, S))
        arms_data.append((P, r))
    return make_instance(arms_data, alpha=alpha, budget_mode=budget_mode)


def counterexample_hong():
    """8-state arm on which static priority rules lose to re-planning.

    Returns (ArmModel-shaped raw data wrapped in an ArmModel, alpha).
    """
    S = 8
    P0 = np.zeros((S, S))
    P0[0, 0] = 1.0
    P0[1, 0] = 1.0
    P0[2, 1], P0[2, 2] = 0.48, 0.52
    P0[3, 2], P0[3, 3] = 0.47, 0.53
    P0[4, 4], P0[4, 5] = 0.9, 0.1
    P0[5, 5], P0[5, 6] = 0.9, 0.1
    P0[6, 6], P0[6, 7] = 0.9, 0.1
    P0[7, 0], P0[7, 7] = 0.1, 0.9

    P1 = np.zeros((S, S))
    P1[0, 0], P1[0, 1] = 0.9, 0.1
    P1[1, 1], P1[1, 2] = 0.9, 0.1
    P1[2, 2], P1[2, 3] = 0.9, 0.1
    P1[3, 3], P1[3, 4] = 0.9, 0.1
    P1[4, 3], P1[4, 4] = 0.46, 0.54
    P1[5, 4], P1[5, 5] = 0.45, 0.55
    P1[6, 5], P1[6, 6] = 0.44, 0.56
    P1[7, 6], P1[7, 7] = 0.43, 0.57

    r0 = np.zeros(S)
    r0[7] = 0.1
    r1 = np.zeros(S)
    arm = ArmModel(id=0, kernels=np.stack([P0, P1]), rewards=np.stack([r0, r1]))
    return arm, 0.5


def counterexample_yan():
    """3-state arm with action-1 rewards only; second stock counterexample."""
    P0 = np.array([
        [0.022, 0.102, 0.875],
        [0.034, 0.172, 0.794],
        [0.523, 0.455, 0.022],
    ])
    P1 = np.array([
        [0.149, 0.304, 0.547],
        [0.568, 0.411, 0.020],
        [0.253, 0.273, 0.474],
    ])
    r0 = np.zeros(3)
    r1 = np.array([0.374, 0.117, 0.079])
    # printed rows carry rounding residue; renormalize like make_instance does
    P = np.stack([P0, P1])
    P = P / P.sum(axis=2)[:, :, None]
    arm = ArmModel(id=0, kernels=P, rewards=np.stack([r0, r1]))
    return arm, 0.4


def _replicate(raw_arm: ArmModel, count, start_id=0):
    return [
        ArmModel(id=start_id + i, kernels=raw_arm.kernels, rewards=raw_arm.rewards)
        for i in range(count)
    ]


def counterexample_instance(name, N, budget_mode="at-most") -> Instance:
    """Built-in instances replicated to N arms: 'hong', 'yan', or 'mixed'."""
    if name == "hong":
        arm, alpha = counterexample_hong()
        arms = _replicate(arm, N)
    elif name == "yan":
        arm, alpha = counterexample_yan()
        arms = _replicate(arm, N)
    elif name == "mixed":
        return mixed_counterexample(N, budget_mode=budget_mode)
    else:
        raise ValueError(f"unknown counterexample {name!r}")
    return Instance(arms=tuple(arms), alpha=alpha, budget_mode=budget_mode)


def mixed_counterexample(N, budget_mode="at-most") -> Instance:
    """ceil(N/2) eight-state arms plus floor(N/2) three-state arms, alpha 0.4."""
    hong, _ = counterexample_hong()
    yan, _ = counterexample_yan()
    n_hong = (N + 1) // 2
    arms = _replicate(hong, n_hong) + _replicate(yan, N - n_hong, start_id=n_hong)
    return Instance(arms=tuple(arms), alpha=0.4, budget_mode=budget_mode)


def save_instance(instance: Instance, path) -> None:
    doc = {
        "alpha": instance.alpha,
        "budget_mode": instance.budget_mode,
        "arms": [
            {
                "states": arm.num_states,
                "P0": arm.kernels[0].tolist(),
                "P1": arm.kernels[1].tolist(),
                "r0": arm.rewards[0].tolist(),
                "r1": arm.rewards[1].tolist(),
            }
            for arm in instance.arms
        ],
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)


def load_instance(path) -> Instance:
    """Load the JSON instance format; rejects dimension mismatches."""
    with open(path) as f:
        doc = json.load(f)
    arms_data = []
    for i, a in enumerate(doc["arms"]):
        S = int(a["states"])
        P0 = np.asarray(a["P0"], dtype=float)
        P1 = np.asarray(a["P1"], dtype=float)
        r0 = np.asarray(a["r0"], dtype=float)
        r1 = np.asarray(a["r1"], dtype=float)
        if P0.shape != (S, S) or P1.shape != (S, S):
            raise ValueError(f"arm {i}: kernel dimensions disagree with states={S}")
        if r0.shape != (S,) or r1.shape != (S,):
            raise ValueError(f"arm {i}: reward dimensions disagree with states={S}")
        arms_data.append((np.stack([P0, P1]), np.stack([r0, r1])))
    return make_instance(
        arms_data,
        alpha=float(doc["alpha"]),
        budget_mode=doc.get("budget_mode", "at-most"),
    )
