"""Truth matching for detector evaluation, independent of the detector."""
import numpy as np
from scipy.optimize import linear_sum_assignment

from edgeaf.ingest import Rhythm, SynthesisSpec, synthesize
from edgeaf.preprocess import lowpass, minmax_scale


def match_counts(truth, detected, tol):
    """(true positives, false positives, false negatives) under one-to-one matching.

    Optimal bipartite assignment on |t - d|, keeping only pairs within ``tol``
    samples.
    """
    truth = np.asarray(truth)
    detected = np.asarray(detected)
    if truth.size == 0 or detected.size == 0:
        return 0, detected.size, truth.size
    cost = np.abs(truth[:, None] - detected[None, :]).astype(float)
    cost[cost > tol] = 1e9
    rows, cols = linear_sum_assignment(cost)
    tp = int(np.sum(cost[rows, cols] <= tol))
    return tp, detected.size - tp, truth.size - tp


def seeded_windows(n, noise_std=0.05, fs=250):
    """``n`` filtered, scaled 5 s windows with truth peaks; alternating rhythm classes."""
    out = []
    for seed in range(n):
        af = seed % 2 == 1
        rec = synthesize(SynthesisSpec(
            duration_s=5.0, fs=fs,
            rr_mean_ms=650 + 3 * seed,
            rr_jitter_ms=150.0 if af else 20.0,
            noise_std=noise_std,
            baseline_wander_hz=0.25, baseline_wander_amp=0.1,
            label=Rhythm.AF if af else Rhythm.NON_AF,
            seed=1000 + seed,
        ))
        x = minmax_scale(lowpass(rec.samples, fs, 50.0))
        out.append((x, rec.rpeaks_truth))
    return out
