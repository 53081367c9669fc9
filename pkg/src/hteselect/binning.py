"""Feature binning and the per-(bin, arm) counts table."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .data import BanditLog, FeatureKind

OTHER_TOKEN = "__other__"


@dataclass(frozen=True)
class BinConfig:
    m_x: int = 10
    max_categories: int = 20
    min_arm_samples: int = 10

    def __post_init__(self):
        if self.m_x < 2:
            raise ValueError(f"m_x must be >= 2, got {self.m_x}")
        if self.max_categories < 1 or self.min_arm_samples < 1:
            raise ValueError("max_categories and min_arm_samples must be positive")


@dataclass(frozen=True, eq=False)
class BinAssignment:
    """Bin index per event for one feature.

    Continuous features carry sorted ``boundaries`` (right-closed cut points);
    categorical ones a ``category_map`` from token to bin.
    """

    feature: str
    kind: FeatureKind
    bin_count: int
    labels: np.ndarray
    boundaries: tuple[float, ...] = ()
    category_map: dict = field(default_factory=dict)

    def assign(self, values) -> np.ndarray:
        """Map new values to bins with the same rule that produced ``labels``."""
        if self.kind is FeatureKind.CONTINUOUS:
            return np.searchsorted(np.asarray(self.boundaries), np.asarray(values, float), side="left")
        other = self.category_map.get(OTHER_TOKEN, self.bin_count - 1)
        return np.array([self.category_map.get(v, other) for v in values], dtype=np.int64)


def quantile_cuts(values, m: int) -> np.ndarray:
    """Distinct empirical quantiles at j/m, j = 1..m-1 (inverted-CDF definition).

    Cuts are always observed values, so the induced partition commutes with
    any strictly increasing transform. Cuts at or above the maximum are dropped
    since they would leave the top bin empty.
    """
    v = np.sort(np.asarray(values, dtype=np.float64))
    n = len(v)
    # smallest order statistic whose ECDF reaches j/m, in exact integer arithmetic
    idx = [-(-j * n // m) - 1 for j in range(1, m)]
    cuts = np.unique(v[idx])
    return cuts[cuts < v[-1]]


def bin_continuous(values, config: BinConfig = BinConfig(), name: str = "") -> BinAssignment:
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot bin an empty column")
    if not np.isfinite(values).all():
        raise ValueError("continuous values must be finite")
    cuts = quantile_cuts(values, config.m_x)
    labels = np.searchsorted(cuts, values, side="left").astype(np.int64)
    return BinAssignment(name, FeatureKind.CONTINUOUS, len(cuts) + 1, labels, boundaries=tuple(cuts.tolist()))


def bin_categorical(values, config: BinConfig = BinConfig(), name: str = "") -> BinAssignment:
    values = list(values)
    if not values:
        raise ValueError("cannot bin an empty column")
    counts = Counter(values)
    order = sorted(counts, key=lambda tok: (-counts[tok], str(tok)))
    if len(order) > config.max_categories:
        keep = config.max_categories - 1
        cmap = {tok: i for i, tok in enumerate(order[:keep])}
        cmap.update({tok: keep for tok in order[keep:]})
        cmap.setdefault(OTHER_TOKEN, keep)
        bin_count = keep + 1
    else:
        cmap = {tok: i for i, tok in enumerate(order)}
        bin_count = len(order)
    labels = np.array([cmap[v] for v in values], dtype=np.int64)
    return BinAssignment(name, FeatureKind.CATEGORICAL, bin_count, labels, category_map=cmap)


def bin_feature(log: BanditLog, name: str, config: BinConfig = BinConfig()) -> BinAssignment:
    d = log.descriptor(name)
    col = log.column(name)
    if d.kind is FeatureKind.CONTINUOUS:
        return bin_continuous(col, config, name)
    return bin_categorical(col, config, name)


@dataclass(frozen=True, eq=False)
class CountsTable:
    """Pull and success counts per (bin, arm); rows are bins, columns arms.

    ``bin_map[j]`` is the row that original bin ``j`` ended up in after
    low-support repair, and ``merges`` the number of merges performed.
    """

    pulls: np.ndarray
    successes: np.ndarray
    merges: int = 0
    bin_map: np.ndarray | None = None

    def __post_init__(self):
        pulls = np.asarray(self.pulls, dtype=np.int64)
        succ = np.asarray(self.successes, dtype=np.int64)
        if pulls.ndim != 2 or pulls.shape != succ.shape or pulls.shape[0] < 1:
            raise ValueError("pulls and successes must be matching (bins, arms) matrices")
        if (pulls < 0).any() or (succ < 0).any() or (succ > pulls).any():
            raise ValueError("counts must satisfy 0 <= successes <= pulls")
        object.__setattr__(self, "pulls", pulls)
        object.__setattr__(self, "successes", succ)
        if self.bin_map is None:
            object.__setattr__(self, "bin_map", np.arange(pulls.shape[0]))

    @property
    def bin_count(self) -> int:
        return self.pulls.shape[0]

    @property
    def k(self) -> int:
        return self.pulls.shape[1]

    @property
    def N(self) -> int:
        return int(self.pulls.sum())

    @property
    def bin_sizes(self) -> np.ndarray:
        return self.pulls.sum(axis=1)

    @property
    def arm_pulls(self) -> np.ndarray:
        return self.pulls.sum(axis=0)

    @property
    def arm_successes(self) -> np.ndarray:
        return self.successes.sum(axis=0)


def tally(bins: np.ndarray, arms: np.ndarray, rewards: np.ndarray, bin_count: int, k: int):
    flat = bins * k + arms
    pulls = np.bincount(flat, minlength=bin_count * k).reshape(bin_count, k)
    succ = np.bincount(flat, weights=rewards, minlength=bin_count * k).reshape(bin_count, k)
    return pulls, np.rint(succ).astype(np.int64)


def build_counts(log: BanditLog, assignment: BinAssignment, config: BinConfig = BinConfig()) -> CountsTable:
    """Tally counts, then merge bins where some arm has fewer than ``min_arm_samples`` pulls.

    The weakest failing bin (smallest N_b, lowest index on ties) is merged
    first. Continuous bins merge with the adjacent bin of smaller N_b;
    categorical bins merge into the ``__other__`` group, which is formed from
    the smallest remaining bin when it does not exist yet.
    """
    pulls, succ = tally(assignment.labels, log.arms, log.rewards, assignment.bin_count, log.k)
    groups = [[j] for j in range(assignment.bin_count)]
    gp, gs = list(pulls), list(succ)
    is_other = [False] * len(groups)
    if assignment.kind is FeatureKind.CATEGORICAL and OTHER_TOKEN in assignment.category_map:
        is_other[assignment.category_map[OTHER_TOKEN]] = True

    def merge(dst, src):
        groups[dst] += groups[src]
        gp[dst] = gp[dst] + gp[src]
        gs[dst] = gs[dst] + gs[src]
        for lst in (groups, gp, gs, is_other):
            del lst[src]

    merges = 0
    while len(groups) > 1:
        sizes = [int(p.sum()) for p in gp]
        failing = [g for g, p in enumerate(gp) if p.min() < config.min_arm_samples]
        if not failing:
            break
        g = min(failing, key=lambda i: (sizes[i], i))
        if assignment.kind is FeatureKind.CONTINUOUS:
            nbrs = [i for i in (g - 1, g + 1) if 0 <= i < len(groups)]
            h = min(nbrs, key=lambda i: (sizes[i], i))
            lo, hi = min(g, h), max(g, h)
            merge(lo, hi)
        else:
            others = [i for i in range(len(groups)) if is_other[i] and i != g]
            if others:
                dst = others[0]
            else:
                dst = min((i for i in range(len(groups)) if i != g), key=lambda i: (sizes[i], i))
            is_other[dst] = True
            merge(dst, g)
        merges += 1

    bin_map = np.empty(assignment.bin_count, dtype=np.int64)
    for gi, members in enumerate(groups):
        bin_map[members] = gi
    return CountsTable(np.array(gp), np.array(gs), merges=merges, bin_map=bin_map)

