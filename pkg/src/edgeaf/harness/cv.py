"""Fold assignment for k-fold cross-validation."""
from __future__ import annotations

import numpy as np

from ..errors import ValidationError


def stratified_folds(y, k=5, seed=0):
    """Disjoint test-index arrays covering ``range(len(y))``.

    Each class is shuffled with ``seed`` and dealt round-robin, so every
    fold holds each class's share to within one sample. The dealing offset
    carries over between classes to balance total fold sizes.
    """
    y = np.asarray(y)
    if k < 2:
        raise ValidationError("need at least 2 folds")
    rng = np.random.default_rng(seed)
    buckets = [[] for _ in range(k)]
    offset = 0
    for c in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == c))
        if idx.size < k:
            raise ValidationError(f"class {c!r} has {idx.size} samples for {k} folds")
        for pos, i in enumerate(idx.tolist()):
            buckets[(pos + offset) % k].append(i)
        offset = (offset + idx.size) % k
    return [np.array(sorted(b), dtype=np.int64) for b in buckets]


def record_folds(record_ids, y, k=5, seed=0):
    """Folds that never split a record; stricter than window-level folds.

    Records are grouped by majority label, shuffled, and dealt round-robin.
    """
    record_ids = np.asarray(record_ids, dtype=object)
    y = np.asarray(y)
    uniq = sorted(set(record_ids.tolist()))
    if len(uniq) < k:
        raise ValidationError(f"{len(uniq)} records cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    majority = {r: int(np.mean(y[record_ids == r]) > 0.5) for r in uniq}
    assign = {}
    offset = 0
    for label in (0, 1):
        group = [r for r in uniq if majority[r] == label]
        order = rng.permutation(len(group))
        for pos, j in enumerate(order.tolist()):
            assign[group[j]] = (pos + offset) % k
        offset = (offset + len(group)) % k
    fold_of = np.array([assign[r] for r in record_ids.tolist()], dtype=np.int64)
    return [np.flatnonzero(fold_of == f) for f in range(k)]


def train_test_pairs(folds, n):
    everything = np.arange(n)
    for test in folds:
        yield np.setdiff1d(everything, test, assume_unique=True), test
