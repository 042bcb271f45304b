"""Per-stage latency breakdown of the window pipeline."""
from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict

import numpy as np
from threadpoolctl import threadpool_limits

from ..errors import ValidationError
from ..pipeline import STAGES, Pipeline
from ..preprocess import PreprocessConfig, resample, window_starts
from ..rpeak import DetectorConfig

log = logging.getLogger(__name__)


@dataclass
class ProfileReport:
    stage_median_ms: Dict[str, float]
    total_median_ms: float
    n_windows: int
    n_skipped: int

    @property
    def stage_sum_ms(self):
        return sum(self.stage_median_ms.values())

    @property
    def fractions(self):
        s = self.stage_sum_ms
        return {k: v / s for k, v in self.stage_median_ms.items()}

    @property
    def dominant_stage(self):
        return max(self.stage_median_ms, key=self.stage_median_ms.get)

    def to_dict(self):
        return {
            "n_windows": self.n_windows,
            "n_skipped": self.n_skipped,
            "total_median_ms": self.total_median_ms,
            "stage_sum_ms": self.stage_sum_ms,
            "stages": [{"stage": k, "median_ms": v, "fraction": self.fractions[k]}
                       for k, v in self.stage_median_ms.items()],
            "dominant_stage": self.dominant_stage,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["stage", "median_ms", "fraction"])
        for k, v in self.stage_median_ms.items():
            w.writerow([k, f"{v:.6f}", f"{self.fractions[k]:.6f}"])
        w.writerow(["total", f"{self.total_median_ms:.6f}", ""])
        return buf.getvalue()

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "profile.json").write_text(self.to_json(), encoding="utf-8")
        (out / "profile.csv").write_text(self.to_csv(), encoding="utf-8")
        return out


def raw_segments(records, pre: PreprocessConfig):
    """Resampled, unfiltered windows in record order."""
    out = []
    w = pre.window_samples
    for rec in records:
        rec = resample(rec, pre.target_fs)
        out.extend(rec.samples[s:s + w] for s in window_starts(rec.samples.size, pre).tolist())
    return out


def profile_pipeline(records, model, pre: PreprocessConfig = None,
                     det: DetectorConfig = None, max_windows=None) -> ProfileReport:
    """Median wall time of each stage per window over ``records``.

    ``records`` may be one record or a sequence. Windows that stop at the
    detector (too few peaks) are excluded from the medians.
    """
    pre = pre or PreprocessConfig()
    det = det or DetectorConfig()
    if not isinstance(records, (list, tuple)):
        records = [records]
    segments = raw_segments(records, pre)
    if max_windows:
        segments = segments[:max_windows]
    if len(segments) < 100:
        log.warning("profiling on %d windows; 100 or more give stable medians", len(segments))
    if not segments:
        raise ValidationError("records yield no complete window")
    pipe = Pipeline(model, pre, det)
    clock = time.perf_counter_ns
    stage_ns, total_ns = [], []
    skipped = 0
    with threadpool_limits(limits=1):
        pipe.run_timed(segments[0])
        for seg in segments:
            t0 = clock()
            result, ns = pipe.run_timed(seg)
            t1 = clock()
            if result is None:
                skipped += 1
                continue
            stage_ns.append(ns)
            total_ns.append(t1 - t0)
    if not stage_ns:
        raise ValidationError("every window was skipped by the detector")
    arr = np.asarray(stage_ns, dtype=np.float64)
    medians = {name: float(np.median(arr[:, i])) / 1e6 for i, name in enumerate(STAGES)}
    return ProfileReport(
        stage_median_ms=medians,
        total_median_ms=float(np.median(total_ns)) / 1e6,
        n_windows=len(stage_ns),
        n_skipped=skipped,
    )
