"""Synthetic benchmark: score features, replay bandits per feature, and time both.

Each trial draws a fresh synthetic log, ranks its features with the model-free
scores, then measures every feature's replay reward under each policy. The
per-feature replay reward is the model-based importance the scores are
compared against, both for ranking quality and for wall-clock cost.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .bandits import ConstantPolicy, make_policy, replay_evaluate
from .binning import BinConfig
from .scoring import CombineConfig, score_all_features
from .synth import CORRELATIONAL, HTE, IRRELEVANT, GeneratorConfig, generate

POLICIES = ("linucb", "qlinucb", "cohort-ts")
CLASSES = (HTE, CORRELATIONAL, IRRELEVANT)


@dataclass(frozen=True)
class BenchConfig:
    generator: GeneratorConfig = GeneratorConfig()
    trials: int = 10
    policies: tuple[str, ...] = POLICIES
    alpha_ucb: float = 1.0
    bin_config: BinConfig = BinConfig()
    combine_config: CombineConfig = CombineConfig()
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for p in self.policies:
            if p not in POLICIES:
                raise ValueError(f"unknown policy {p!r}; choose from {POLICIES}")


def trial_seeds(seed: int, trials: int) -> list[int]:
    """Independent per-trial seeds; trial t's seed does not depend on how many trials run."""
    return [int(s.generate_state(1, np.uint64)[0]) for s in np.random.SeedSequence(seed).spawn(trials)]


@dataclass
class TrialResult:
    trial: int
    seed: int
    labels: dict[str, str]
    scores: list[dict]
    rewards: dict[str, dict[str, float]]
    baseline_reward: float
    timing: dict[str, float] = field(default_factory=dict)

    def ranking(self) -> list[str]:
        return [s["feature"] for s in self.scores]


def run_trial(config: BenchConfig, trial: int, seed: int) -> TrialResult:
    gen = replace(config.generator, seed=seed)
    log, truth = generate(gen)

    t0 = time.perf_counter()
    reports = score_all_features(log, config.bin_config, config.combine_config)
    timing = {"scoring": time.perf_counter() - t0}

    policy_seeds = trial_seeds(seed, len(log.feature_names))
    rewards: dict[str, dict[str, float]] = {}
    for name in config.policies:
        rewards[name] = {}
        t0 = time.perf_counter()
        for f, ps in zip(log.feature_names, policy_seeds):
            policy = make_policy(name, log.k, config.alpha_ucb, ps, config.bin_config)
            rewards[name][f] = replay_evaluate(log, policy, [f]).average_reward
        timing[name] = time.perf_counter() - t0

    baseline = replay_evaluate(log, ConstantPolicy(), log.feature_names[:1]).average_reward
    return TrialResult(trial, seed, truth.labels, [r.to_dict() for r in reports], rewards, baseline, timing)


def _run_trial_args(args):
    return run_trial(*args)


@dataclass
class BenchReport:
    """Mean wall-clock seconds per trial for each importance method."""

    n: int
    n_features: int
    trials: int
    seconds: dict[str, float]
    speedup: dict[str, float]

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class BenchResult:
    config: BenchConfig
    trials: list[TrialResult]

    def class_means(self) -> dict:
        """Mean score and replay reward per feature class, averaged over features and trials."""
        out = {}
        for cls in CLASSES:
            rows = [s for t in self.trials for s in t.scores if t.labels[s["feature"]] == cls]
            if not rows:
                continue
            entry = {key: float(np.mean([r[key] for r in rows])) for key in ("hie", "hdd", "combined")}
            for p in self.config.policies:
                entry[f"reward_{p}"] = float(
                    np.mean([t.rewards[p][f] for t in self.trials for f, c in t.labels.items() if c == cls])
                )
            out[cls] = entry
        return out

    def timing(self) -> BenchReport:
        methods = ["scoring", *self.config.policies]
        secs = {m: float(np.mean([t.timing[m] for t in self.trials])) for m in methods}
        speedup = {p: secs[p] / secs["scoring"] for p in self.config.policies}
        return BenchReport(self.config.generator.n, self.config.generator.d, len(self.trials), secs, speedup)

    def to_dict(self) -> dict:
        """Deterministic content only; wall-clock figures live in :meth:`timing`."""
        return {
            "config": asdict(self.config),
            "trials": [
                {
                    "trial": t.trial,
                    "seed": t.seed,
                    "scores": t.scores,
                    "rewards": t.rewards,
                    "baseline_reward": t.baseline_reward,
                }
                for t in self.trials
            ],
            "labels": self.trials[0].labels,
            "class_means": self.class_means(),
            "mean_baseline_reward": float(np.mean([t.baseline_reward for t in self.trials])),
        }

    def plot_rows(self) -> list[dict]:
        rows = []
        for t in self.trials:
            for s in t.scores:
                f = s["feature"]
                row = {"trial": t.trial, "feature": f, "class": t.labels[f]}
                row.update({key: s[key] for key in ("hie", "hdd", "combined")})
                row.update({f"reward_{p}": t.rewards[p][f] for p in self.config.policies})
                rows.append(row)
        return rows

    def write(self, path: str | Path) -> tuple[Path, Path, Path]:
        """Write the report JSON, a ``*_timing.json`` sidecar and a plot-ready ``*.csv``."""
        path = Path(path)
        timing_path = path.with_name(path.stem + "_timing.json")
        csv_path = path.with_suffix(".csv")
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        timing_path.write_text(json.dumps(self.timing().to_dict(), indent=2) + "\n", encoding="utf-8")
        rows = self.plot_rows()
        with csv_path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        return path, timing_path, csv_path


def run_benchmark(config: BenchConfig = BenchConfig()) -> BenchResult:
    seeds = trial_seeds(config.seed, config.trials)
    jobs = [(config, t, s) for t, s in enumerate(seeds)]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as ex:
            trials = list(ex.map(_run_trial_args, jobs))
    else:
        trials = [run_trial(*j) for j in jobs]
    return BenchResult(config, trials)
