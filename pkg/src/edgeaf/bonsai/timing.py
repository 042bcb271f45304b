"""Wall-clock latency of the classifier alone and of the whole window pipeline."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List

import numpy as np
from threadpoolctl import threadpool_limits

from ..errors import ValidationError
from ..pipeline import STAGES, Pipeline
from ..preprocess import PreprocessConfig
from ..rpeak import DetectorConfig


@dataclass
class InferenceTiming:
    n_windows: int
    n_skipped: int
    predict_median_ms: float
    predict_p95_ms: float
    pipeline_median_ms: float
    pipeline_p95_ms: float
    stage_median_ms: Dict[str, float] = field(default_factory=dict)

    @property
    def stage_fractions(self):
        total = sum(self.stage_median_ms.values())
        return {k: (v / total if total else 0.0) for k, v in self.stage_median_ms.items()}

    def to_dict(self):
        d = asdict(self)
        d["stage_fractions"] = self.stage_fractions
        return d


def _ms(ns, q):
    return float(np.percentile(np.asarray(ns, dtype=np.float64), q)) / 1e6


def measure_inference_many(models, windows, preprocess: PreprocessConfig = None,
                           detector: DetectorConfig = None) -> List[InferenceTiming]:
    """Time several models on the same raw windows, interleaved per window.

    Interleaving spreads clock drift and cache effects evenly over the
    models, which matters when comparing medians a few percent apart.
    Windows with fewer than three detected peaks are counted as skipped.
    """
    windows = [np.asarray(getattr(w, "samples", w), dtype=np.float64) for w in windows]
    if not windows:
        raise ValidationError("cannot measure inference on an empty window set")
    if not models:
        raise ValidationError("no models to measure")
    preprocess = preprocess or PreprocessConfig()
    detector = detector or DetectorConfig()
    pipes = [Pipeline(m, preprocess, detector) for m in models]
    k = len(pipes)
    total_ns = [[] for _ in pipes]
    stage_ns = [[] for _ in pipes]
    inputs = [[] for _ in pipes]
    skipped = [0] * k
    clock = time.perf_counter_ns

    with threadpool_limits(limits=1):
        # warm caches (filter design, wavelet tables)
        for p in pipes:
            p.run_timed(windows[0])
        for i, raw in enumerate(windows):
            for j in range(k):
                m = (i + j) % k
                t0 = clock()
                result, ns = pipes[m].run_timed(raw)
                t1 = clock()
                if result is None:
                    skipped[m] += 1
                    continue
                total_ns[m].append(t1 - t0)
                stage_ns[m].append(ns)
                f = pipes[m].features(raw)
                inputs[m].append(f[pipes[m]._idx])
        predict_ns = [[] for _ in pipes]
        longest = max(len(v) for v in inputs)
        for i in range(longest):
            for j in range(k):
                m = (i + j) % k
                if i >= len(inputs[m]):
                    continue
                x = inputs[m][i]
                t0 = clock()
                models[m].predict(x)
                predict_ns[m].append(clock() - t0)

    reports = []
    for m in range(k):
        if not total_ns[m]:
            raise ValidationError("every window was skipped; no timings collected")
        per_stage = np.asarray(stage_ns[m], dtype=np.float64)
        medians = {name: float(np.median(per_stage[:, s])) / 1e6
                   for s, name in enumerate(STAGES)}
        reports.append(InferenceTiming(
            n_windows=len(total_ns[m]),
            n_skipped=skipped[m],
            predict_median_ms=_ms(predict_ns[m], 50),
            predict_p95_ms=_ms(predict_ns[m], 95),
            pipeline_median_ms=_ms(total_ns[m], 50),
            pipeline_p95_ms=_ms(total_ns[m], 95),
            stage_median_ms=medians,
        ))
    return reports


def measure_inference(model, windows, preprocess: PreprocessConfig = None,
                      detector: DetectorConfig = None) -> InferenceTiming:
    """Median/p95 latency of ``predict`` and of the full pipeline per window.

    Use at least 100 windows for stable percentiles.
    """
    return measure_inference_many([model], windows, preprocess, detector)[0]
