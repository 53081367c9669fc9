"""Logged bandit data: the in-memory representation, CSV ingestion and arm summaries.

A :class:`BanditLog` stores events column-wise (one numpy array per field) and
is read-only once built. Iterating it yields :class:`LoggedEvent` records.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

MISSING_TOKEN = "__missing__"


class DataValidationError(ValueError):
    """Raised when logged data violates the log invariants."""


class FeatureKind(str, Enum):
    CONTINUOUS = "continuous"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class FeatureDescriptor:
    name: str
    kind: FeatureKind
    column_index: int


@dataclass(frozen=True)
class LoggedEvent:
    arm: int
    reward: int
    features: tuple


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BanditLog:
    """Immutable log of (arm, binary reward, context) events.

    ``columns[j]`` holds the values of ``descriptors[j]``: float64 for
    continuous features, an object array of str for categorical ones.
    """

    k: int
    descriptors: tuple[FeatureDescriptor, ...]
    arms: np.ndarray
    rewards: np.ndarray
    columns: tuple[np.ndarray, ...]

    def __post_init__(self):
        arms = _readonly(np.asarray(self.arms, dtype=np.int64))
        rewards = _readonly(np.asarray(self.rewards, dtype=np.int64))
        cols = []
        for d, c in zip(self.descriptors, self.columns):
            if d.kind is FeatureKind.CONTINUOUS:
                cols.append(_readonly(np.asarray(c, dtype=np.float64)))
            else:
                cols.append(_readonly(np.asarray(c, dtype=object)))
        object.__setattr__(self, "arms", arms)
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "columns", tuple(cols))
        object.__setattr__(self, "descriptors", tuple(self.descriptors))
        self._validate()

    def _validate(self):
        if self.k < 2:
            raise DataValidationError(f"k must be >= 2, got {self.k}")
        n = len(self.arms)
        if len(self.rewards) != n:
            raise DataValidationError("arms and rewards differ in length")
        if len(self.columns) != len(self.descriptors):
            raise DataValidationError("one column is required per descriptor")
        names = [d.name for d in self.descriptors]
        if len(set(names)) != len(names):
            raise DataValidationError(f"duplicate feature names: {names}")
        idx = [d.column_index for d in self.descriptors]
        if len(set(idx)) != len(idx) or any(i < 0 for i in idx):
            raise DataValidationError("column indices must be unique and non-negative")
        if n:
            if self.arms.min() < 0 or self.arms.max() >= self.k:
                raise DataValidationError(f"arm ids must lie in [0, {self.k})")
            if not np.isin(self.rewards, (0, 1)).all():
                raise DataValidationError("rewards must be 0 or 1")
        for d, c in zip(self.descriptors, self.columns):
            if len(c) != n:
                raise DataValidationError(f"column {d.name!r} has {len(c)} values, expected {n}")
            if d.kind is FeatureKind.CONTINUOUS and not np.isfinite(c).all():
                raise DataValidationError(f"column {d.name!r} contains non-finite values")

    @classmethod
    def from_arrays(
        cls,
        arms: Sequence[int],
        rewards: Sequence[int],
        features: Mapping[str, Sequence],
        k: int | None = None,
        kinds: Mapping[str, FeatureKind | str] | None = None,
    ) -> "BanditLog":
        """Build a log from per-field arrays; feature kinds are inferred from dtype."""
        kinds = dict(kinds or {})
        descriptors, columns = [], []
        for j, (name, values) in enumerate(features.items()):
            values = np.asarray(values)
            if name in kinds:
                kind = FeatureKind(kinds[name])
            elif values.dtype.kind in "biuf":
                kind = FeatureKind.CONTINUOUS
            else:
                kind = FeatureKind.CATEGORICAL
            if kind is FeatureKind.CATEGORICAL:
                values = np.array([str(v) for v in values], dtype=object)
            descriptors.append(FeatureDescriptor(name, kind, j))
            columns.append(values)
        arms = np.asarray(arms, dtype=np.int64)
        if k is None:
            k = int(arms.max()) + 1 if len(arms) else 2
        return cls(k, tuple(descriptors), arms, rewards, tuple(columns))

    @property
    def N(self) -> int:
        return len(self.arms)

    def __len__(self) -> int:
        return self.N

    def __iter__(self) -> Iterator[LoggedEvent]:
        for t in range(self.N):
            yield self.event(t)

    def event(self, t: int) -> LoggedEvent:
        feats = tuple(
            float(c[t]) if d.kind is FeatureKind.CONTINUOUS else c[t]
            for d, c in zip(self.descriptors, self.columns)
        )
        return LoggedEvent(int(self.arms[t]), int(self.rewards[t]), feats)

    @property
    def feature_names(self) -> list[str]:
        return [d.name for d in self.descriptors]

    def descriptor(self, name: str) -> FeatureDescriptor:
        for d in self.descriptors:
            if d.name == name:
                return d
        raise KeyError(f"unknown feature {name!r}")

    def column(self, name: str) -> np.ndarray:
        return self.columns[self.descriptors.index(self.descriptor(name))]

    def same_as(self, other: "BanditLog") -> bool:
        """Exact equality of k, descriptors and every event."""
        return (
            self.k == other.k
            and self.descriptors == other.descriptors
            and np.array_equal(self.arms, other.arms)
            and np.array_equal(self.rewards, other.rewards)
            and all(np.array_equal(a, b) for a, b in zip(self.columns, other.columns))
        )


@dataclass
class Schema:
    """Column roles for :func:`ingest_csv`.

    ``kinds`` overrides auto-typing per feature column; ``features`` restricts
    which columns are kept (default: every non-role column).
    """

    arm: str = "arm"
    reward: str = "reward"
    kinds: dict[str, FeatureKind | str] = field(default_factory=dict)
    features: list[str] | None = None
    k: int | None = None

    @classmethod
    def from_log(cls, log: BanditLog) -> "Schema":
        return cls(kinds={d.name: d.kind for d in log.descriptors}, k=log.k)


def _parses_as_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def ingest_csv(path: str | Path, schema: Schema | None = None) -> BanditLog:
    """Read and validate a logged-bandit CSV file.

    Rows are numbered from 1 (the first data row after the header) in error
    messages.
    """
    schema = schema or Schema()
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataValidationError(f"{path}: missing header row") from None
        rows = [r for r in reader if r]

    header = [h.strip() for h in header]
    for role in (schema.arm, schema.reward):
        if role not in header:
            raise DataValidationError(f"missing required column {role!r}")
    ia, ir = header.index(schema.arm), header.index(schema.reward)
    if schema.features is None:
        feature_names = [h for h in header if h not in (schema.arm, schema.reward)]
    else:
        feature_names = list(schema.features)
        for name in feature_names:
            if name not in header:
                raise DataValidationError(f"missing feature column {name!r}")

    arms = np.empty(len(rows), dtype=np.int64)
    rewards = np.empty(len(rows), dtype=np.int64)
    for t, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise DataValidationError(f"row {t}: expected {len(header)} fields, got {len(row)}")
        a = row[ia].strip()
        try:
            arm = int(a)
        except ValueError:
            raise DataValidationError(f"row {t}: arm must be a non-negative integer, got {a!r}") from None
        if arm < 0:
            raise DataValidationError(f"row {t}: arm must be a non-negative integer, got {a!r}")
        r = row[ir].strip()
        if r not in ("0", "1"):
            raise DataValidationError(f"row {t}: reward must be 0 or 1")
        arms[t - 1], rewards[t - 1] = arm, int(r)

    k = schema.k if schema.k is not None else (int(arms.max()) + 1 if len(rows) else 2)
    if len(rows) and arms.max() >= k:
        t = int(np.argmax(arms >= k)) + 1
        raise DataValidationError(f"row {t}: arm {arms[t - 1]} outside [0, {k})")
    if k < 2:
        raise DataValidationError(f"at least 2 arms are required, got k={k}")

    descriptors, columns = [], []
    for j, name in enumerate(feature_names):
        ic = header.index(name)
        cells = [row[ic].strip() for row in rows]
        if name in schema.kinds:
            kind = FeatureKind(schema.kinds[name])
        else:
            nonempty = [c for c in cells if c]
            numeric = bool(nonempty) and all(_parses_as_number(c) for c in nonempty)
            kind = FeatureKind.CONTINUOUS if numeric else FeatureKind.CATEGORICAL
        if kind is FeatureKind.CONTINUOUS:
            values = np.empty(len(cells))
            for t, c in enumerate(cells, start=1):
                try:
                    v = float(c)
                except ValueError:
                    raise DataValidationError(
                        f"row {t}, column {name!r}: expected a number, got {c!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataValidationError(
                        f"row {t}, column {name!r}: missing or non-finite value {c!r}"
                    )
                values[t - 1] = v
        else:
            values = np.array([c if c else MISSING_TOKEN for c in cells], dtype=object)
        descriptors.append(FeatureDescriptor(name, kind, j))
        columns.append(values)

    return BanditLog(k, tuple(descriptors), arms, rewards, tuple(columns))


def write_csv(log: BanditLog, path: str | Path) -> None:
    """Write ``log`` in the format :func:`ingest_csv` reads; categorical cells are quoted."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, quoting=csv.QUOTE_NONNUMERIC, lineterminator="\n")
        w.writerow(["arm", "reward", *log.feature_names])
        cols = [c.tolist() for c in log.columns]
        for t in range(log.N):
            w.writerow([int(log.arms[t]), int(log.rewards[t]), *(c[t] for c in cols)])


@dataclass(frozen=True)
class ArmSummary:
    N: int
    pulls: tuple[int, ...]
    successes: tuple[int, ...]
    rates: tuple[float | None, ...]

    @property
    def absent(self) -> tuple[bool, ...]:
        return tuple(r is None for r in self.rates)


def summarize(log: BanditLog) -> ArmSummary:
    pulls = np.bincount(log.arms, minlength=log.k)
    succ = np.bincount(log.arms, weights=log.rewards, minlength=log.k).astype(np.int64)
    rates = tuple(float(s / n) if n else None for s, n in zip(succ, pulls))
    return ArmSummary(log.N, tuple(int(p) for p in pulls), tuple(int(s) for s in succ), rates)
