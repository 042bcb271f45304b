"""Train/test experiment plans and their reports.

A plan pairs a training dataset with a test dataset. When both are the
same, evaluation is stratified k-fold cross-validation; otherwise the model
is trained on all of one dataset and scored on all of the other. Every
feature subset in the plan yields one report row.
"""
from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from ..bonsai.serialize import serialize
from ..bonsai.timing import measure_inference_many
from ..bonsai.train import TrainConfig, train
from ..errors import ValidationError
from ..featsel import FeatureRanking, FeatureSubset, intersect, subset, union
from ..preprocess import PreprocessConfig
from ..rpeak import DetectorConfig
from .cv import record_folds, stratified_folds, train_test_pairs
from .dataset import FeatureDataset
from .metrics import compute_metrics, mean_metrics

TIMING_KEY = "timing"


@dataclass
class ExperimentPlan:
    train_dataset: str
    test_dataset: str
    subsets: Sequence[FeatureSubset]
    cv_folds: int = 5
    train_config: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0
    split: str = "window"
    timing_windows: int = 0

    def __post_init__(self):
        if not self.subsets:
            raise ValidationError("plan needs at least one feature subset")
        if self.cross_validated and self.cv_folds < 2:
            raise ValidationError("cross-validation needs at least 2 folds")
        if self.split not in ("window", "record"):
            raise ValidationError(f"split must be 'window' or 'record', got {self.split!r}")

    @property
    def cross_validated(self):
        return self.train_dataset == self.test_dataset

    @property
    def pairing(self):
        return f"T_{self.train_dataset}{self.test_dataset}"


@dataclass
class RunReport:
    plan: dict
    rows: List[dict]
    models: Dict[str, bytes] = field(default_factory=dict)

    def to_dict(self, mask_timing=False):
        rows = []
        for row in self.rows:
            row = dict(row)
            if mask_timing:
                row[TIMING_KEY] = None
            rows.append(row)
        return {"plan": self.plan, "rows": rows}

    def to_json(self, mask_timing=False):
        return json.dumps(jsonable(self.to_dict(mask_timing)), indent=2, sort_keys=True) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            m = row["metrics"]["fold_mean"]
            t = row.get(TIMING_KEY) or {}
            writer.writerow([
                row["data"], row["subset"], row["n_features"], _fmt(m["accuracy"]),
                _fmt(m["precision"]["non_af"]), _fmt(m["precision"]["af"]),
                _fmt(m["recall"]["non_af"]), _fmt(m["recall"]["af"]),
                _fmt(m["f1"]["non_af"]), _fmt(m["f1"]["af"]),
                f"{row['model_size_bytes'] / 1024:.3f}", row["model_size_bytes"],
                _fmt(t.get("predict_median_ms")), _fmt(t.get("pipeline_median_ms")),
                row["skipped_windows"],
            ])
        return buf.getvalue()

    def write(self, out_dir):
        out = Path(out_dir)
        (out / "models").mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json(), encoding="utf-8")
        (out / "report.csv").write_text(self.to_csv(), encoding="utf-8")
        for tag, blob in self.models.items():
            (out / "models" / f"{model_filename(tag)}").write_bytes(blob)
        return out


CSV_COLUMNS = ("data", "feature_subset", "n_features", "accuracy", "precision_0",
               "precision_1", "recall_0", "recall_1", "f1_0", "f1_1", "model_size_kb",
               "model_size_bytes", "bonsai_inference_ms", "pipeline_inference_ms",
               "skipped_windows")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float) and math.isnan(v):
        return "undefined"
    return f"{v:.6f}"


def jsonable(obj):
    """Replace nan with ``"undefined"`` and numpy scalars with Python ones."""
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        if math.isnan(obj):
            return "undefined"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    return obj


def model_filename(tag):
    safe = tag.replace(" & ", "_and_").replace(" | ", "_or_")
    return re.sub(r"[^A-Za-z0-9_.-]", "_", safe) + ".bnsi"


_TERM = re.compile(r"\s*([A-Za-z_]*)(\d+)\s*")


def parse_subset_expr(expr, rankings: Mapping[str, FeatureRanking], default_id):
    """Evaluate ``"12"``, ``"A12"``, ``"A12&B14"`` or ``"A12|B14"`` left to right.

    A term is an optional dataset id followed by ``n``: the top-``n``
    features of that dataset's ranking.
    """
    parts = re.split(r"([&|])", expr)
    result = None
    op = None
    for part in parts:
        if part in ("&", "|"):
            op = part
            continue
        m = _TERM.fullmatch(part)
        if not m:
            raise ValidationError(f"cannot parse subset term {part!r} in {expr!r}")
        ds = m.group(1) or default_id
        if ds not in rankings:
            raise ValidationError(f"no ranking for dataset {ds!r} in {expr!r}")
        term = subset(rankings[ds], int(m.group(2)), tag=f"F_{ds}")
        if result is None:
            result = term
        elif op == "&":
            result = intersect(result, term)
        else:
            result = union(result, term)
    if result is None:
        raise ValidationError(f"empty subset expression {expr!r}")
    return result


def _fit_predict(train_ds: FeatureDataset, test_ds: FeatureDataset, names, cfg):
    model = train(train_ds.columns(names), train_ds.y, cfg, feature_names=names)
    return model, model.predict_labels(test_ds.columns(names))


def run_plan(plan: ExperimentPlan, datasets: Mapping[str, FeatureDataset],
             preprocess: Optional[PreprocessConfig] = None,
             detector: Optional[DetectorConfig] = None) -> RunReport:
    """Execute ``plan`` and collect one row per feature subset.

    Cross-validated rows report the mean over folds and the pooled
    out-of-fold predictions. The model stored for each subset is trained on
    the whole training dataset. Timing is measured only when
    ``plan.timing_windows`` > 0 and the test dataset carries raw windows.
    """
    try:
        train_ds = datasets[plan.train_dataset]
        test_ds = datasets[plan.test_dataset]
    except KeyError as exc:
        raise ValidationError(f"dataset {exc.args[0]!r} not provided") from None
    cfg = plan.train_config
    if plan.cross_validated:
        if plan.split == "record":
            folds = record_folds(train_ds.record_ids, train_ds.y, plan.cv_folds, plan.seed)
        else:
            folds = stratified_folds(train_ds.y, plan.cv_folds, plan.seed)
    skipped = train_ds.n_skipped + (0 if plan.cross_validated else test_ds.n_skipped)

    rows, models, finals = [], {}, []
    for sub in plan.subsets:
        names = sub.ordered()
        if plan.cross_validated:
            fold_blocks, pooled_pred, pooled_true = [], [], []
            for tr, te in train_test_pairs(folds, len(train_ds)):
                _, pred = _fit_predict(train_ds.take(tr), train_ds.take(te), names, cfg)
                truth = train_ds.y[te]
                fold_blocks.append(compute_metrics(pred, truth))
                pooled_pred.append(pred)
                pooled_true.append(truth)
            pooled = compute_metrics(np.concatenate(pooled_pred), np.concatenate(pooled_true))
            fold_mean = mean_metrics(fold_blocks)
            final = train(train_ds.columns(names), train_ds.y, cfg, feature_names=names)
            n_folds = len(folds)
        else:
            final, pred = _fit_predict(train_ds, test_ds, names, cfg)
            pooled = compute_metrics(pred, test_ds.y)
            fold_mean = mean_metrics([pooled])
            fold_blocks = []
            n_folds = None
        blob = serialize(final)
        models[sub.origin] = blob
        finals.append(final)
        rows.append({
            "data": plan.pairing,
            "subset": sub.origin,
            "features": names,
            "n_features": len(names),
            "folds": n_folds,
            "metrics": {"fold_mean": fold_mean, "pooled": pooled,
                        "per_fold": [mean_metrics([b]) for b in fold_blocks]},
            "model_size_bytes": len(blob),
            "skipped_windows": skipped,
            TIMING_KEY: None,
        })

    if plan.timing_windows and test_ds.raw_windows:
        windows = test_ds.raw_windows[:plan.timing_windows]
        timings = measure_inference_many(finals, windows, preprocess, detector)
        for row, t in zip(rows, timings):
            row[TIMING_KEY] = t.to_dict()

    plan_info = {
        "pairing": plan.pairing,
        "train_dataset": plan.train_dataset,
        "test_dataset": plan.test_dataset,
        "cv_folds": plan.cv_folds if plan.cross_validated else None,
        "split": plan.split,
        "seed": plan.seed,
        "train_config": dict(vars(cfg)),
        "train_windows": train_ds.class_counts(),
        "test_windows": test_ds.class_counts(),
    }
    return RunReport(plan=plan_info, rows=rows, models=models)
