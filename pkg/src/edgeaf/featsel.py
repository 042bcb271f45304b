"""One-way ANOVA F ranking of features and the top-n subset algebra."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import FrozenSet, List, Tuple

import numpy as np

from .errors import InsufficientClassDataError, ValidationError
from .hrv import FEATURE_NAMES

_CANON = {name: i for i, name in enumerate(FEATURE_NAMES)}


def anova_f(values, labels) -> float:
    """Two-group one-way F statistic, ``df_between = 1`` and ``df_within = N - 2``.

    Zero within-class variance returns ``inf`` when the class means differ
    and ``0.0`` when they do not.
    """
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels)
    if values.shape != labels.shape or values.ndim != 1:
        raise ValidationError("values and labels must be 1-D and of equal length")
    classes = np.unique(labels)
    if classes.size != 2:
        raise ValidationError(f"labels must be binary, found {classes.size} classes")
    groups = [values[labels == c] for c in classes]
    for c, g in zip(classes, groups):
        if g.size < 2:
            raise InsufficientClassDataError(
                f"class {c!r} has {g.size} sample(s), need at least 2")
    n = values.size
    grand = values.mean()
    ss_between = sum(g.size * (g.mean() - grand) ** 2 for g in groups)
    ss_within = sum(float(np.sum((g - g.mean()) ** 2)) for g in groups)
    if ss_within == 0.0:
        return math.inf if ss_between > 0.0 else 0.0
    return float(ss_between / (ss_within / (n - 2)))


@dataclass(frozen=True)
class FeatureRanking:
    entries: Tuple[Tuple[str, float], ...]

    @property
    def names(self):
        return [name for name, _ in self.entries]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def to_csv(self, path):
        path = Path(path)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["feature", "f_value"])
            for name, f in self.entries:
                writer.writerow([name, repr(float(f))])
        return path

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(tuple((r["feature"], float(r["f_value"])) for r in rows))


def rank_features(X, y, columns=FEATURE_NAMES) -> FeatureRanking:
    """Rank columns by descending F value; ties keep canonical order."""
    X = np.asarray(X, dtype=np.float64)
    columns = list(columns)
    if X.ndim != 2 or X.shape[1] != len(columns):
        raise ValidationError(f"matrix shape {X.shape} does not match {len(columns)} columns")
    missing = set(FEATURE_NAMES) - set(columns)
    if missing or len(set(columns)) != len(columns):
        raise ValidationError(f"dataset must hold each of the 14 features once; missing {sorted(missing)}")
    scores = [(name, anova_f(X[:, j], y)) for j, name in enumerate(columns)]
    scores.sort(key=lambda item: (-item[1], _CANON[item[0]]))
    return FeatureRanking(tuple(scores))


@dataclass(frozen=True)
class FeatureSubset:
    names: FrozenSet[str]
    origin: str = ""

    def __post_init__(self):
        names = frozenset(self.names)
        object.__setattr__(self, "names", names)
        if not names:
            raise ValidationError("feature subset must be non-empty")
        unknown = names - set(FEATURE_NAMES)
        if unknown:
            raise ValidationError(f"unknown features {sorted(unknown)}")

    def ordered(self) -> List[str]:
        """Names in canonical column order, which is the model input order."""
        return sorted(self.names, key=_CANON.__getitem__)

    def __len__(self):
        return len(self.names)

    def __contains__(self, name):
        return name in self.names

    def __le__(self, other):
        return self.names <= other.names

    def __or__(self, other):
        return union(self, other)

    def __and__(self, other):
        return intersect(self, other)


def subset(ranking: FeatureRanking, n: int, tag: str = "F") -> FeatureSubset:
    if not 1 <= n <= len(ranking):
        raise ValidationError(f"n={n} outside [1, {len(ranking)}]")
    return FeatureSubset(frozenset(ranking.names[:n]), f"{tag}_{n}")


def union(a: FeatureSubset, b: FeatureSubset) -> FeatureSubset:
    return FeatureSubset(a.names | b.names, f"{a.origin} | {b.origin}")


def intersect(a: FeatureSubset, b: FeatureSubset) -> FeatureSubset:
    common = a.names & b.names
    if not common:
        raise ValidationError(f"{a.origin} and {b.origin} share no features")
    return FeatureSubset(common, f"{a.origin} & {b.origin}")
