"""Reference bandit policies and the offline replay evaluator.

Every policy exposes ``prepare(log, features)``, which resets its state and
returns one context per event, plus ``select(context)`` and
``update(context, arm, reward)``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .binning import BinConfig, bin_categorical, bin_feature
from .data import BanditLog, FeatureKind, summarize

TIE_TOL = 1e-9


class Policy(Protocol):
    name: str

    def prepare(self, log: BanditLog, features: Sequence[str]) -> Sequence: ...

    def select(self, context) -> int: ...

    def update(self, context, arm: int, reward: int) -> None: ...


def quadratic_expand(x) -> np.ndarray:
    """``[x_1..x_d, x_1^2..x_d^2]``; works row-wise on 2-D input."""
    x = np.asarray(x, dtype=np.float64)
    return np.concatenate([x, x * x], axis=-1)


def linear_design(log: BanditLog, features: Sequence[str], quadratic: bool = False) -> np.ndarray:
    """Per-event LinUCB context: standardized continuous columns (optionally with
    their squares), one-hot categorical columns without the most frequent level,
    and a trailing intercept."""
    cont, onehot = [], []
    for name in features:
        d = log.descriptor(name)
        col = log.column(name)
        if d.kind is FeatureKind.CONTINUOUS:
            sd = col.std()
            cont.append((col - col.mean()) / sd if sd > 0 else np.zeros_like(col))
        else:
            a = bin_categorical(col, BinConfig(max_categories=max(2, len(set(col)))))
            onehot.append(np.eye(a.bin_count)[a.labels][:, 1:])
    parts = []
    if cont:
        xc = np.column_stack(cont)
        parts.append(quadratic_expand(xc) if quadratic else xc)
    parts.extend(onehot)
    parts.append(np.ones((log.N, 1)))
    return np.ascontiguousarray(np.column_stack(parts))


class LinUCB:
    """Disjoint LinUCB: one ridge regression per arm, A_i = I + sum x x^T.

    Linear systems are solved by LU factorization (``numpy.linalg.solve``),
    never by forming A^-1. UCB values within ``TIE_TOL`` of the best count as
    ties and go to the lowest arm id.
    """

    def __init__(self, k: int, d: int | None = None, alpha: float = 1.0, quadratic: bool = False):
        if alpha < 0:
            raise ValueError("alpha must be non-negative")
        self.k, self.alpha, self.quadratic = k, alpha, quadratic
        self.name = "qlinucb" if quadratic else "linucb"
        if d is not None:
            self.reset(d)

    def reset(self, d: int) -> None:
        self.d = d
        self.A = np.tile(np.eye(d), (self.k, 1, 1))
        self.b = np.zeros((self.k, d))

    def prepare(self, log: BanditLog, features: Sequence[str]) -> np.ndarray:
        X = linear_design(log, features, self.quadratic)
        self.reset(X.shape[1])
        return X

    def _check(self, x: np.ndarray) -> None:
        if x.shape != (self.d,):
            raise ValueError(f"context has shape {x.shape}, expected ({self.d},)")

    def ucb(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        self._check(x)
        rhs = np.empty((self.k, self.d, 2))
        rhs[:, :, 0] = self.b
        rhs[:, :, 1] = x
        sol = np.linalg.solve(self.A, rhs)
        mean = sol[:, :, 0] @ x
        width = np.sqrt(np.maximum(sol[:, :, 1] @ x, 0.0))
        return mean + self.alpha * width

    def select(self, x) -> int:
        u = self.ucb(x)
        best = u.max()
        return int(np.flatnonzero(u >= best - TIE_TOL * max(1.0, abs(best)))[0])

    def update(self, x, arm: int, reward: float) -> None:
        x = np.asarray(x, dtype=np.float64)
        self._check(x)
        if not 0 <= arm < self.k:
            raise ValueError(f"arm {arm} outside [0, {self.k})")
        self.A[arm] += np.outer(x, x)
        self.b[arm] += reward * x

    @property
    def theta(self) -> np.ndarray:
        return np.linalg.solve(self.A, self.b[:, :, None])[:, :, 0]


class CohortTS:
    """Beta-Bernoulli Thompson sampling with independent posteriors per cohort.

    Cohorts are the bins of the chosen feature(s); with several features the
    cohort is the joint bin.
    """

    name = "cohort-ts"

    def __init__(self, k: int, n_cohorts: int | None = None, seed: int = 0, bin_config: BinConfig = BinConfig()):
        self.k, self.seed, self.bin_config = k, seed, bin_config
        if n_cohorts is not None:
            self.reset(n_cohorts)

    def reset(self, n_cohorts: int) -> None:
        self.n_cohorts = n_cohorts
        self.a = np.ones((n_cohorts, self.k))
        self.b = np.ones((n_cohorts, self.k))
        self.rng = np.random.default_rng(self.seed)

    def prepare(self, log: BanditLog, features: Sequence[str]) -> np.ndarray:
        assignments = [bin_feature(log, f, self.bin_config) for f in features]
        dims = tuple(a.bin_count for a in assignments)
        cohorts = np.ravel_multi_index(tuple(a.labels for a in assignments), dims)
        self.reset(int(np.prod(dims)))
        return cohorts

    def _check(self, cohort: int) -> None:
        if not 0 <= cohort < self.n_cohorts:
            raise IndexError(f"cohort {cohort} outside [0, {self.n_cohorts})")

    def select(self, cohort: int) -> int:
        self._check(cohort)
        return int(np.argmax(self.rng.beta(self.a[cohort], self.b[cohort])))

    def update(self, cohort: int, arm: int, reward: int) -> None:
        self._check(cohort)
        if not 0 <= arm < self.k:
            raise IndexError(f"arm {arm} outside [0, {self.k})")
        if reward not in (0, 1):
            raise ValueError("reward must be 0 or 1")
        self.a[cohort, arm] += reward
        self.b[cohort, arm] += 1 - reward


class ConstantPolicy:
    """Always plays one arm; ``arm=None`` picks the log's context-free winner."""

    def __init__(self, arm: int | None = None):
        self.arm = arm
        self.name = "constant"

    def prepare(self, log: BanditLog, features: Sequence[str]) -> list:
        if self.arm is None:
            rates = [r if r is not None else -1.0 for r in summarize(log).rates]
            self.arm = int(np.argmax(rates))
        return [None] * log.N

    def select(self, context) -> int:
        return self.arm

    def update(self, context, arm: int, reward: int) -> None:
        pass


def make_policy(name: str, k: int, alpha_ucb: float = 1.0, seed: int = 0, bin_config: BinConfig = BinConfig()):
    if name == "linucb":
        return LinUCB(k, alpha=alpha_ucb)
    if name == "qlinucb":
        return LinUCB(k, alpha=alpha_ucb, quadratic=True)
    if name == "cohort-ts":
        return CohortTS(k, seed=seed, bin_config=bin_config)
    raise ValueError(f"unknown policy {name!r}")


@dataclass
class ReplayResult:
    policy: str
    features: list[str]
    matched_count: int
    matched_reward_sum: int
    average_reward: float
    flags: list[str] = field(default_factory=list)
    duration_s: float = field(default=0.0, compare=False)

    def to_dict(self, timing: bool = False) -> dict:
        d = {
            "policy": self.policy,
            "features": list(self.features),
            "matched_count": self.matched_count,
            "matched_reward_sum": self.matched_reward_sum,
            "average_reward": self.average_reward,
            "flags": list(self.flags),
        }
        if timing:
            d["duration_s"] = self.duration_s
        return d


def uniform_logging(log: BanditLog, z: float = 3.0) -> bool:
    """True if every arm's pull count is within ``z`` binomial standard deviations of N/k."""
    pulls = np.bincount(log.arms, minlength=log.k)
    q = 1.0 / log.k
    sd = np.sqrt(log.N * q * (1 - q))
    return bool(np.all(np.abs(pulls - log.N * q) <= z * sd + 1e-12))


def replay_evaluate(log: BanditLog, policy: Policy, features: Sequence[str]) -> ReplayResult:
    """Offline matching estimate of a policy's average reward.

    One pass in log order; an event counts, and the policy learns from it, only
    when the policy's choice equals the logged arm.
    """
    features = list(features)
    if not features:
        raise ValueError("feature subset is empty")
    for f in features:
        log.descriptor(f)  # KeyError on unknown names
    flags = [] if uniform_logging(log) else ["nonuniform_logging"]

    start = time.perf_counter()
    contexts = policy.prepare(log, features)
    arms, rewards = log.arms.tolist(), log.rewards.tolist()
    count = total = 0
    for t in range(log.N):
        ctx = contexts[t]
        if policy.select(ctx) == arms[t]:
            count += 1
            total += rewards[t]
            policy.update(ctx, arms[t], rewards[t])
    duration = time.perf_counter() - start

    if count == 0:
        flags.append("no_matches")
    avg = total / count if count else 0.0
    return ReplayResult(getattr(policy, "name", type(policy).__name__), features, count, total, avg, flags, duration)
