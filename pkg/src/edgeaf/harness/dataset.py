"""Feature datasets: records -> windows -> peaks -> 14 features, plus CSV I/O."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from ..errors import EdgeAFError, StageError, ValidationError
from ..hrv import FEATURE_NAMES, extract_features, feature_indices
from ..ingest import EcgRecord, Rhythm, SynthesisSpec, load_csv, save_csv, synthesize
from ..pipeline import MIN_PEAKS
from ..preprocess import (PreprocessConfig, butterworth_lowpass, resample,
                          window_and_label)
from ..rpeak import DetectorConfig, detect_rpeaks, to_nn_series

log = logging.getLogger(__name__)

META_COLUMNS = ("record_id", "start_index", "label")


@dataclass(eq=False)
class FeatureDataset:
    """Feature matrix in canonical column order with per-window metadata.

    ``raw_windows`` optionally holds resampled but unfiltered segments for a
    subsample of windows; latency measurements replay them through the
    per-window pipeline.
    """

    name: str
    X: np.ndarray
    y: np.ndarray
    record_ids: np.ndarray
    start_index: np.ndarray
    n_skipped: int = 0
    raw_windows: List[np.ndarray] = field(default_factory=list)

    def __len__(self):
        return self.y.size

    def columns(self, names):
        return self.X[:, feature_indices(names)]

    def take(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        return FeatureDataset(self.name, self.X[idx], self.y[idx], self.record_ids[idx],
                              self.start_index[idx], 0, [])

    def class_counts(self):
        return {"non_af": int(np.sum(self.y == 0)), "af": int(np.sum(self.y == 1))}


def record_features(record: EcgRecord, pre: PreprocessConfig, det: DetectorConfig):
    """Features for every window of one record.

    Returns ``(rows, labels, starts, n_skipped, raw_segments)``; windows with
    fewer than three detected peaks are skipped and counted.
    """
    stage = "resample"
    try:
        rec = resample(record, pre.target_fs)
        stage = "filter"
        filtered = butterworth_lowpass(rec, pre.cutoff_hz, pre.filter_order)
        stage = "window"
        windows = window_and_label(filtered, pre)
        rows, labels, starts, raws = [], [], [], []
        skipped = 0
        w = pre.window_samples
        for win in windows:
            stage = "rpeak"
            peaks = detect_rpeaks(win.samples, pre.target_fs, det)
            if len(peaks) < MIN_PEAKS:
                skipped += 1
                continue
            stage = "features"
            rows.append(extract_features(to_nn_series(peaks)).as_array())
            labels.append(int(win.label))
            starts.append(win.start_index)
            raws.append(rec.samples[win.start_index:win.start_index + w])
    except EdgeAFError as exc:
        raise StageError(stage, record.record_id, exc) from exc
    return rows, labels, starts, skipped, raws


def build_feature_dataset(records, pre: PreprocessConfig = None, det: DetectorConfig = None,
                          name="dataset", keep_raw=0) -> FeatureDataset:
    """Run filter, scaling, detection and feature extraction over ``records``.

    ``keep_raw`` raw segments are retained, spread evenly over all windows.
    """
    pre = pre or PreprocessConfig()
    det = det or DetectorConfig()
    rows, labels, rids, starts, raws = [], [], [], [], []
    skipped = 0
    for record in records:
        r, l, s, k, raw = record_features(record, pre, det)
        rows.extend(r)
        labels.extend(l)
        starts.extend(s)
        rids.extend([record.record_id] * len(r))
        raws.extend(raw)
        skipped += k
    if skipped:
        log.info("%s: skipped %d window(s) with fewer than %d R-peaks", name, skipped, MIN_PEAKS)
    X = np.array(rows, dtype=np.float64).reshape(-1, len(FEATURE_NAMES))
    kept = []
    if keep_raw and raws:
        pick = np.unique(np.linspace(0, len(raws) - 1, min(keep_raw, len(raws))).astype(np.int64))
        kept = [raws[i] for i in pick]
    return FeatureDataset(
        name=name,
        X=X,
        y=np.array(labels, dtype=np.int8),
        record_ids=np.array(rids, dtype=object),
        start_index=np.array(starts, dtype=np.int64),
        n_skipped=skipped,
        raw_windows=kept,
    )


def write_feature_csv(ds: FeatureDataset, path):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(f"# skipped={ds.n_skipped}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(META_COLUMNS) + list(FEATURE_NAMES))
        for i in range(len(ds)):
            label = "AF" if ds.y[i] == Rhythm.AF else "NON_AF"
            writer.writerow([ds.record_ids[i], int(ds.start_index[i]), label]
                            + [repr(float(v)) for v in ds.X[i]])
    return path


def read_feature_csv(path, name=None) -> FeatureDataset:
    path = Path(path)
    skipped = 0
    with open(path, newline="") as fh:
        first = fh.readline()
        if first.startswith("# skipped="):
            skipped = int(first.split("=", 1)[1])
        else:
            fh.seek(0)
        reader = csv.DictReader(fh)
        missing = set(META_COLUMNS + FEATURE_NAMES) - set(reader.fieldnames or ())
        if missing:
            raise ValidationError(f"{path}: missing columns {sorted(missing)}")
        rows = list(reader)
    X = np.array([[float(r[c]) for c in FEATURE_NAMES] for r in rows]).reshape(-1, len(FEATURE_NAMES))
    y = np.array([1 if r["label"] == "AF" else 0 for r in rows], dtype=np.int8)
    return FeatureDataset(
        name=name or path.stem,
        X=X,
        y=y,
        record_ids=np.array([r["record_id"] for r in rows], dtype=object),
        start_index=np.array([int(r["start_index"]) for r in rows], dtype=np.int64),
        n_skipped=skipped,
    )


def load_record_dir(path) -> List[EcgRecord]:
    files = sorted(Path(path).glob("*.csv"))
    if not files:
        raise ValidationError(f"no *.csv records in {path}")
    return [load_csv(f) for f in files]


@dataclass(frozen=True)
class CorpusSpec:
    """Two-class synthetic corpus: irregular (AF-like) vs regular rhythm.

    Each record draws its own mean RR in ``rr_mean_range_ms``.
    """

    records_per_class: int = 20
    duration_s: float = 404.0
    fs: int = 250
    af_jitter_ms: float = 150.0
    non_af_jitter_ms: float = 20.0
    rr_mean_range_ms: tuple = (650.0, 950.0)
    noise_std: float = 0.05
    baseline_wander_hz: float = 0.25
    baseline_wander_amp: float = 0.1
    seed: int = 0
    prefix: str = "rec"


def synthetic_corpus(spec: CorpusSpec = CorpusSpec()) -> List[EcgRecord]:
    rng = np.random.default_rng(spec.seed)
    records = []
    for label, jitter in ((Rhythm.NON_AF, spec.non_af_jitter_ms), (Rhythm.AF, spec.af_jitter_ms)):
        tag = "af" if label == Rhythm.AF else "nonaf"
        for i in range(spec.records_per_class):
            rr_mean = float(rng.uniform(*spec.rr_mean_range_ms))
            seed = int(rng.integers(0, 2**31 - 1))
            records.append(synthesize(SynthesisSpec(
                duration_s=spec.duration_s,
                fs=spec.fs,
                rr_mean_ms=rr_mean,
                rr_jitter_ms=jitter,
                noise_std=spec.noise_std,
                baseline_wander_hz=spec.baseline_wander_hz,
                baseline_wander_amp=spec.baseline_wander_amp,
                label=label,
                seed=seed,
                record_id=f"{spec.prefix}_{tag}_{i:03d}",
            )))
    return records


def write_record_dir(records, path) -> Optional[Path]:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for rec in records:
        save_csv(rec, path / f"{rec.record_id}.csv")
    return path
