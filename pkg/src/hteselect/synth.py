"""Synthetic logged-bandit data with known feature classes.

Features are i.i.d. Uniform(0, 1) and arms are logged uniformly at random.
Three feature classes enter the Bernoulli reward probability differently:

* ``hte``: each one splits [0, 1] into k equal segments and favours a
  different arm in each segment, so the best arm depends on it;
* ``correlational``: shifts every arm's success rate by the same amount;
* ``irrelevant``: never used.

For arm ``a`` and context ``x``::

    p(a, x) = clip(base + corr(x) + effect * mean_j g_a(x_j), 0.01, 0.99)
    corr(x) = corr_effect / d_corr * sum_c 2 * (x_c - 0.5)
    g_a(x_j) = 1 if segment(x_j) == (a + j) mod k else -1 / (k - 1)
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .data import BanditLog

HTE, CORRELATIONAL, IRRELEVANT = "hte", "correlational", "irrelevant"
P_MIN, P_MAX = 0.01, 0.99


@dataclass(frozen=True)
class GeneratorConfig:
    n: int = 50_000
    k: int = 3
    d_hte: int = 5
    d_corr: int = 2
    d_irrel: int = 3
    effect: float = 0.35
    corr_effect: float = 0.1
    base: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError("n must be positive")
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if min(self.d_hte, self.d_corr, self.d_irrel) < 0:
            raise ValueError("feature counts must be non-negative")
        if not 0 <= self.effect <= 0.5:
            raise ValueError("effect must lie in [0, 0.5]")
        if self.corr_effect < 0:
            raise ValueError("corr_effect must be non-negative")
        hi = self.base + self.effect + self.corr_effect
        lo = self.base - self.effect / (self.k - 1) - self.corr_effect
        if not (0 < lo and hi < 1):
            raise ValueError(f"success probabilities span [{lo:g}, {hi:g}], which must lie inside (0, 1)")

    @property
    def d(self) -> int:
        return self.d_hte + self.d_corr + self.d_irrel

    @property
    def feature_names(self) -> list[str]:
        return [f"x{j}" for j in range(self.d)]

    @property
    def labels(self) -> dict[str, str]:
        classes = [HTE] * self.d_hte + [CORRELATIONAL] * self.d_corr + [IRRELEVANT] * self.d_irrel
        return dict(zip(self.feature_names, classes))


@dataclass(frozen=True, eq=False)
class GroundTruth:
    labels: dict[str, str]
    best_arm: np.ndarray

    def features_of(self, cls: str) -> list[str]:
        return [f for f, c in self.labels.items() if c == cls]

    def to_json(self) -> dict:
        return {"labels": self.labels, "best_arm": self.best_arm.tolist()}


def arm_probabilities(config: GeneratorConfig, X: np.ndarray) -> np.ndarray:
    """Noiseless success probability of every arm, shape (n, k)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    k, dh, dc = config.k, config.d_hte, config.d_corr
    n = X.shape[0]
    hte = np.zeros((n, k))
    if dh:
        seg = np.minimum((X[:, :dh] * k).astype(np.int64), k - 1)
        favoured = (seg - np.arange(dh)) % k  # arm whose good segment is seg, per feature
        for a in range(k):
            g = np.where(favoured == a, 1.0, -1.0 / (k - 1))
            hte[:, a] = g.mean(axis=1)
    corr = np.zeros(n)
    if dc:
        corr = config.corr_effect / dc * (2 * (X[:, dh : dh + dc] - 0.5)).sum(axis=1)
    p = config.base + corr[:, None] + config.effect * hte
    return np.clip(p, P_MIN, P_MAX)


def true_best_arm(config: GeneratorConfig, X) -> np.ndarray:
    """Arm with the highest noiseless success probability; lowest id on ties."""
    return np.argmax(arm_probabilities(config, X), axis=1)


def generate(config: GeneratorConfig) -> tuple[BanditLog, GroundTruth]:
    rng = np.random.default_rng(config.seed)
    X = rng.random((config.n, config.d))
    arms = rng.integers(0, config.k, size=config.n)
    p = arm_probabilities(config, X)[np.arange(config.n), arms]
    rewards = (rng.random(config.n) < p).astype(np.int64)
    log = BanditLog.from_arrays(arms, rewards, dict(zip(config.feature_names, X.T)), k=config.k)
    return log, GroundTruth(config.labels, true_best_arm(config, X))


def write_ground_truth(truth: GroundTruth, config: GeneratorConfig, path: str | Path) -> None:
    payload = {"config": asdict(config), **truth.to_json()}
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")
