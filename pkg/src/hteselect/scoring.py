"""Model-free feature importance for contextual bandits.

Two scores are computed from a feature's :class:`~hteselect.binning.CountsTable`:

* HIE (heterogeneous incremental effect): sample-weighted gain of each bin's
  winning arm over the context-free winning arm.
* HDD (heterogeneous distribution divergence): sample-weighted within-bin
  divergence among the arms' reward distributions, minus the same divergence
  computed on all data.

Both are min-max normalized across the scored features and combined linearly.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .binning import BinConfig, CountsTable, bin_feature, build_counts
from .data import BanditLog

HIE_OFFSETS = ("global", "per_bin")


@dataclass(frozen=True)
class CombineConfig:
    """Weights of the combined score.

    ``hie_offset`` selects what each bin's winner is compared against:
    ``"global"`` uses the context-free winner's overall success rate,
    ``"per_bin"`` that same arm's rate inside the bin.
    """

    alpha1: float = 0.5
    alpha2: float = 0.5
    kl_clamp: float = 1e-6
    hie_offset: str = "global"

    def __post_init__(self):
        if self.alpha1 < 0 or self.alpha2 < 0 or self.alpha1 + self.alpha2 <= 0:
            raise ValueError("alpha1, alpha2 must be >= 0 with a positive sum")
        if not 0 < self.kl_clamp < 0.5:
            raise ValueError("kl_clamp must lie in (0, 0.5)")
        if self.hie_offset not in HIE_OFFSETS:
            raise ValueError(f"hie_offset must be one of {HIE_OFFSETS}")


def arm_probabilities(successes, pulls) -> np.ndarray:
    """Maximum-likelihood success rates; NaN where an arm has no pulls."""
    s = np.asarray(successes, dtype=np.float64)
    n = np.asarray(pulls, dtype=np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(n > 0, s / np.where(n > 0, n, 1.0), np.nan)


def winning_arm(probabilities) -> int:
    """Index of the highest success rate, lowest arm id on ties; NaN entries are skipped."""
    p = np.asarray(probabilities, dtype=np.float64)
    if p.size == 0 or np.isnan(p).all():
        raise ValueError("no arm has a defined probability")
    return int(np.nanargmax(p))


def hie_score(counts: CountsTable, offset: str = "global") -> float:
    if offset not in HIE_OFFSETS:
        raise ValueError(f"offset must be one of {HIE_OFFSETS}")
    if counts.bin_count == 1:
        return 0.0
    N = counts.N
    if N == 0:
        raise ValueError("counts table is empty")
    p_global = arm_probabilities(counts.arm_successes, counts.arm_pulls)
    w_star = winning_arm(p_global)
    total = 0.0
    for b in range(counts.bin_count):
        n_b = counts.pulls[b].sum()
        if n_b == 0:
            continue
        p_b = arm_probabilities(counts.successes[b], counts.pulls[b])
        best = p_b[winning_arm(p_b)]
        if offset == "per_bin" and not np.isnan(p_b[w_star]):
            base = p_b[w_star]
        else:
            base = p_global[w_star]
        total += (n_b / N) * (best - base)
    return float(total)


def pairwise_kl(p, q, delta: float = 1e-6):
    """KL divergence in nats between Bernoulli(p) and Bernoulli(q), both clamped to [delta, 1 - delta].

    Accepts scalars or broadcastable arrays.
    """
    p = np.clip(p, delta, 1 - delta)
    q = np.clip(q, delta, 1 - delta)
    out = p * np.log(p / q) + (1 - p) * np.log((1 - p) / (1 - q))
    # rounding can leave tiny negatives for p ~= q
    out = np.maximum(out, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def generalized_divergence(probs, pulls, total: float | None = None, delta: float = 1e-6) -> float:
    """Pull-weighted double sum of pairwise KL divergences over all ordered arm pairs."""
    n = np.asarray(pulls, dtype=np.float64)
    total = n.sum() if total is None else float(total)
    if total == 0 or n.size < 2:
        return 0.0
    p = np.nan_to_num(np.asarray(probs, dtype=np.float64), nan=0.5)
    w = np.outer(n, n) / total**2
    kl = pairwise_kl(p[:, None], p[None, :], delta)
    np.fill_diagonal(kl, 0.0)
    return float((w * kl).sum())


def hdd_score(counts: CountsTable, delta: float = 1e-6) -> float:
    """Sample-weighted within-bin divergence minus the context-free divergence. May be negative."""
    if counts.bin_count == 1:
        return 0.0
    N = counts.N
    if N == 0:
        raise ValueError("counts table is empty")
    contextual = 0.0
    for b in range(counts.bin_count):
        n_b = counts.pulls[b].sum()
        if n_b == 0:
            continue
        p_b = arm_probabilities(counts.successes[b], counts.pulls[b])
        contextual += (n_b / N) * generalized_divergence(p_b, counts.pulls[b], n_b, delta)
    p = arm_probabilities(counts.arm_successes, counts.arm_pulls)
    return float(contextual - generalized_divergence(p, counts.arm_pulls, N, delta))


def min_max_normalize(scores: Sequence[float]) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    if s.size == 0:
        raise ValueError("nothing to normalize")
    lo, hi = s.min(), s.max()
    if hi == lo:
        return np.zeros_like(s)
    return (s - lo) / (hi - lo)


def combined_score(
    hie_norm: Mapping[str, float], hdd_norm: Mapping[str, float], config: CombineConfig = CombineConfig()
) -> dict[str, float]:
    if set(hie_norm) != set(hdd_norm):
        raise ValueError("hie and hdd scores cover different feature sets")
    return {f: config.alpha1 * hie_norm[f] + config.alpha2 * hdd_norm[f] for f in hie_norm}


@dataclass
class FeatureReport:
    feature: str
    hie: float
    hdd: float
    hie_norm: float = 0.0
    hdd_norm: float = 0.0
    combined: float = 0.0
    bins_used: int = 1
    merges: int = 0
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def score_feature(
    log: BanditLog,
    name: str,
    bin_config: BinConfig = BinConfig(),
    combine_config: CombineConfig = CombineConfig(),
) -> FeatureReport:
    """Raw (unnormalized) HIE and HDD of one feature."""
    assignment = bin_feature(log, name, bin_config)
    counts = build_counts(log, assignment, bin_config)
    flags = []
    if assignment.bin_count == 1:
        flags.append("constant_feature")
    if counts.merges:
        flags.append("merged_bins")
    if counts.bin_count == 1:
        flags.append("single_bin")
    return FeatureReport(
        feature=name,
        hie=hie_score(counts, combine_config.hie_offset),
        hdd=hdd_score(counts, combine_config.kl_clamp),
        bins_used=counts.bin_count,
        merges=counts.merges,
        flags=flags,
    )


def score_all_features(
    log: BanditLog,
    bin_config: BinConfig = BinConfig(),
    combine_config: CombineConfig = CombineConfig(),
    features: Sequence[str] | None = None,
    workers: int | None = None,
) -> list[FeatureReport]:
    """Score every feature of ``log`` and rank by combined score, highest first.

    Normalization spans exactly the features scored in this call. Ties keep
    the input feature order.
    """
    if log.k < 2:
        raise ValueError("at least 2 arms are required")
    names = list(features) if features is not None else log.feature_names
    if not names:
        return []
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            reports = list(ex.map(lambda f: score_feature(log, f, bin_config, combine_config), names))
    else:
        reports = [score_feature(log, f, bin_config, combine_config) for f in names]

    hie_n = min_max_normalize([r.hie for r in reports])
    hdd_n = min_max_normalize([r.hdd for r in reports])
    combined = combined_score(dict(zip(names, hie_n)), dict(zip(names, hdd_n)), combine_config)
    for r, hn, dn in zip(reports, hie_n, hdd_n):
        r.hie_norm, r.hdd_norm, r.combined = float(hn), float(dn), float(combined[r.feature])
    # sorted() is stable, so ties stay in input order
    return sorted(reports, key=lambda r: -r.combined)


REPORT_FIELDS = ["feature", "hie", "hdd", "hie_norm", "hdd_norm", "combined", "bins_used", "merges", "flags"]


def write_reports_json(reports: Sequence[FeatureReport], path: str | Path) -> None:
    Path(path).write_text(json.dumps([r.to_dict() for r in reports], indent=2) + "\n", encoding="utf-8")


def read_reports_json(path: str | Path) -> list[FeatureReport]:
    return [FeatureReport(**d) for d in json.loads(Path(path).read_text(encoding="utf-8"))]


def write_reports_csv(reports: Sequence[FeatureReport], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_FIELDS)
        for r in reports:
            d = r.to_dict()
            d["flags"] = ";".join(d["flags"])
            w.writerow([d[f] for f in REPORT_FIELDS])
