import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from edgeaf.errors import ConfigError, DetectorError, InsufficientPeaksError
from edgeaf.ingest import SynthesisSpec, synthesize
from edgeaf.preprocess import EcgWindow, minmax_scale
from edgeaf.rpeak import DetectorConfig, NnSeries, RPeakList, detect_rpeaks, to_nn_series

from rpeak_oracle import match_counts, seeded_windows


def bump_train(centres, n=1250, sd=5.0):
    t = np.arange(n)
    return sum(np.exp(-0.5 * ((t - c) / sd) ** 2) for c in centres)


def test_noise_free_1000ms_window():
    rec = synthesize(SynthesisSpec(duration_s=5, fs=250, rr_mean_ms=1000))
    peaks = detect_rpeaks(minmax_scale(rec.samples), 250)
    assert len(peaks) == 5
    assert np.max(np.abs(peaks.indices - rec.rpeaks_truth)) <= 1


def test_accepts_window_object():
    rec = synthesize(SynthesisSpec(duration_s=5, rr_mean_ms=800))
    win = EcgWindow(minmax_scale(rec.samples), rec.rhythm[0], "r", 0)
    np.testing.assert_array_equal(detect_rpeaks(win).indices, detect_rpeaks(win.samples).indices)


def test_flat_window_is_empty():
    assert len(detect_rpeaks(np.zeros(1250))) == 0
    assert len(detect_rpeaks(np.full(1250, 0.5))) == 0


def test_too_short_window():
    with pytest.raises(DetectorError):
        detect_rpeaks(np.ones(8))


def test_refractory_and_local_max_contract():
    for x, _ in seeded_windows(30, noise_std=0.1):
        peaks = detect_rpeaks(x)
        idx = peaks.indices
        assert np.all(np.diff(idx) >= 0.25 * 250)
        for p in idx.tolist():
            assert p == 0 or x[p - 1] <= x[p]
            assert p == x.size - 1 or x[p + 1] <= x[p]


def test_detection_quality_on_noisy_windows():
    tp = fp = fn = 0
    for x, truth in seeded_windows(100):
        a, b, c = match_counts(truth, detect_rpeaks(x).indices, tol=12)
        tp, fp, fn = tp + a, fp + b, fn + c
    assert tp / (tp + fn) >= 0.99
    assert tp / (tp + fp) >= 0.99


def test_deterministic():
    x, _ = seeded_windows(1)[0]
    assert detect_rpeaks(x).indices.tobytes() == detect_rpeaks(x.copy()).indices.tobytes()


def test_shift_equivariance():
    rng = np.random.default_rng(5)
    for _ in range(10):
        centres = (np.cumsum(rng.uniform(140, 260, 10)) + 40).astype(int)
        centres = centres[centres < 1250 - 140]
        x = bump_train(centres)
        base = detect_rpeaks(x).indices
        np.testing.assert_array_equal(base, centres)
        for k in range(0, 101, 7):
            shifted = np.zeros_like(x)
            shifted[k:] = x[:x.size - k]
            np.testing.assert_array_equal(detect_rpeaks(shifted).indices, base + k)


@pytest.mark.parametrize("a", [1e-3, 0.5, 2.0, 1e3])
def test_amplitude_invariance(a):
    for x, _ in seeded_windows(10):
        np.testing.assert_array_equal(detect_rpeaks(a * x).indices, detect_rpeaks(x).indices)


def test_other_sampling_rate():
    rec = synthesize(SynthesisSpec(duration_s=5, fs=360, rr_mean_ms=750, rr_jitter_ms=60))
    peaks = detect_rpeaks(minmax_scale(rec.samples), 360)
    tp, fp, fn = match_counts(rec.rpeaks_truth, peaks.indices, tol=18)
    assert fp == fn == 0


@pytest.mark.parametrize("kw", [{"swt_level": 0}, {"threshold_quantile": 0},
                                {"refractory_ms": 0}, {"snap_ms": -1}, {"pad_margin": -1}])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        DetectorConfig(**kw)


@pytest.mark.parametrize("idx, expect", [([0, 250, 500], [1000.0, 1000.0]), ([0, 200], [800.0])])
def test_nn_series_examples(idx, expect):
    nn = to_nn_series(RPeakList(np.array(idx), 250))
    assert isinstance(nn, NnSeries)
    np.testing.assert_allclose(nn.intervals_ms, expect)


def test_nn_requires_two_peaks():
    with pytest.raises(InsufficientPeaksError):
        to_nn_series(RPeakList(np.array([5]), 250))


@given(st.lists(st.integers(1, 500), min_size=1, max_size=40),
       st.integers(0, 10_000), st.sampled_from([128, 250, 300, 360]))
def test_nn_telescopes(gaps, first, fs):
    idx = first + np.concatenate([[0], np.cumsum(gaps)])
    nn = to_nn_series(RPeakList(idx, fs)).intervals_ms
    assert len(nn) == len(idx) - 1 and np.all(nn > 0)
    assert nn.sum() == pytest.approx((idx[-1] - idx[0]) / fs * 1000, rel=1e-12)
