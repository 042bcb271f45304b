"""Per-window inference: raw segment in, AF decision out, with stage timers."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .hrv import extract_features, feature_indices
from .preprocess import PreprocessConfig, lowpass, minmax_scale
from .rpeak import DetectorConfig, detect_rpeaks, to_nn_series

STAGES = ("filter", "scale", "rpeak", "features", "predict")
# two intervals are needed for one successive difference
MIN_PEAKS = 3


@dataclass
class Pipeline:
    """Runs every stage on one window at a time, as a deployed device would.

    ``model`` only needs ``feature_subset`` and ``predict(x)``.
    """

    model: object
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)

    def __post_init__(self):
        self._idx = np.array(feature_indices(self.model.feature_subset), dtype=np.int64)

    def features(self, raw):
        """Full 14-feature vector for a raw window, or ``None`` if < 3 peaks."""
        cfg = self.preprocess
        x = lowpass(raw, cfg.target_fs, cfg.cutoff_hz, cfg.filter_order)
        x = minmax_scale(x)
        peaks = detect_rpeaks(x, cfg.target_fs, self.detector)
        if len(peaks) < MIN_PEAKS:
            return None
        return extract_features(to_nn_series(peaks)).as_array()

    def run(self, raw):
        """``(score, label)`` or ``None`` when the window has too few beats."""
        f = self.features(raw)
        if f is None:
            return None
        return self.model.predict(f[self._idx])

    def run_timed(self, raw):
        """Like :meth:`run` but also returns per-stage wall time in ns.

        Stage times for a skipped window are reported up to the failing stage
        and zero afterwards.
        """
        cfg = self.preprocess
        clock = time.perf_counter_ns
        ns = [0] * len(STAGES)
        t0 = clock()
        x = lowpass(raw, cfg.target_fs, cfg.cutoff_hz, cfg.filter_order)
        t1 = clock()
        x = minmax_scale(x)
        t2 = clock()
        peaks = detect_rpeaks(x, cfg.target_fs, self.detector)
        t3 = clock()
        ns[0], ns[1], ns[2] = t1 - t0, t2 - t1, t3 - t2
        if len(peaks) < MIN_PEAKS:
            return None, ns
        f = extract_features(to_nn_series(peaks)).as_array()
        t4 = clock()
        result = self.model.predict(f[self._idx])
        t5 = clock()
        ns[3], ns[4] = t4 - t3, t5 - t4
        return result, ns
