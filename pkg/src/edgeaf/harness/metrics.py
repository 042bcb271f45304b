"""Classification metrics with an explicit undefined value for 0/0 cases."""
from __future__ import annotations

import math

import numpy as np

from ..errors import ValidationError

UNDEFINED = float("nan")
CLASSES = ("non_af", "af")


def _ratio(num, den):
    return num / den if den else UNDEFINED


def confusion(predictions, labels):
    pred = np.asarray(predictions).astype(np.int64).reshape(-1)
    true = np.asarray(labels).astype(np.int64).reshape(-1)
    if pred.shape != true.shape:
        raise ValidationError(f"{pred.size} predictions for {true.size} labels")
    if pred.size == 0:
        raise ValidationError("cannot score an empty prediction set")
    tp = int(np.sum((pred == 1) & (true == 1)))
    tn = int(np.sum((pred == 0) & (true == 0)))
    fp = int(np.sum((pred == 1) & (true == 0)))
    fn = int(np.sum((pred == 0) & (true == 1)))
    return tp, fp, tn, fn


def compute_metrics(predictions, labels):
    """Accuracy plus per-class precision, recall and F1.

    Class 1 is AF and class 0 non-AF; class-0 scores treat non-AF as the
    positive class. A ratio with a zero denominator, or any score of a
    class absent from ``labels``, is ``nan`` (serialized as
    ``"undefined"``), never 0. F1 uses ``2TP / (2TP + FP + FN)``.
    """
    tp, fp, tn, fn = confusion(predictions, labels)
    total = tp + fp + tn + fn
    per_class = {
        # (true positives, false positives, false negatives) for each class
        "af": (tp, fp, fn),
        "non_af": (tn, fn, fp),
    }
    out = {
        "accuracy": (tp + tn) / total,
        "precision": {},
        "recall": {},
        "f1": {},
        "support": {"non_af": tn + fp, "af": tp + fn},
        "confusion": {"tp": tp, "fp": fp, "tn": tn, "fn": fn},
    }
    for name in CLASSES:
        t, f_pos, f_neg = per_class[name]
        if t + f_neg == 0:
            # class absent from the labels: nothing to score against
            for key in ("precision", "recall", "f1"):
                out[key][name] = UNDEFINED
            continue
        out["precision"][name] = _ratio(t, t + f_pos)
        out["recall"][name] = t / (t + f_neg)
        out["f1"][name] = 2 * t / (2 * t + f_pos + f_neg)
    return out


def mean_metrics(blocks):
    """Average metric blocks (e.g. over folds), ignoring undefined entries."""
    def avg(values):
        vals = [v for v in values if not math.isnan(v)]
        return sum(vals) / len(vals) if vals else UNDEFINED

    out = {"accuracy": avg([b["accuracy"] for b in blocks])}
    for key in ("precision", "recall", "f1"):
        out[key] = {c: avg([b[key][c] for b in blocks]) for c in CLASSES}
    return out
