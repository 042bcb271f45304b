"""Stationary-wavelet-transform R-peak detector and NN-interval conversion.

Detector recipe:

1. symmetric padding so the length is a multiple of ``2**swt_level``
   (plus a fixed margin on both sides to keep boundary effects local);
2. ``swt_level``-level SWT with a ``db3`` wavelet;
3. square the deepest detail band and integrate it with a 150 ms moving
   average;
4. adaptive threshold: ``threshold_scale`` times the rolling
   ``threshold_quantile`` of the integrated energy;
5. energy maxima above threshold, at least ``refractory_ms`` apart;
6. each candidate is snapped to the raw-signal maximum within ``snap_ms``.

All thresholds are relative, so the detector output does not change when
the input is multiplied by a positive constant.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pywt
from scipy import ndimage
from scipy import signal as sps

from .errors import ConfigError, DetectorError, InsufficientPeaksError


@dataclass(frozen=True)
class DetectorConfig:
    swt_level: int = 4
    wavelet: str = "db3"
    integration_ms: float = 150.0
    refractory_ms: float = 250.0
    threshold_quantile: float = 0.95
    threshold_scale: float = 0.25
    threshold_window_s: float = 2.0
    snap_ms: float = 50.0
    pad_margin: int = 64

    def __post_init__(self):
        if self.swt_level < 1:
            raise ConfigError("swt_level must be >= 1")
        if not 0 < self.threshold_quantile <= 1:
            raise ConfigError("threshold_quantile must lie in (0, 1]")
        if self.refractory_ms <= 0 or self.integration_ms <= 0 or self.snap_ms < 0:
            raise ConfigError("refractory_ms/integration_ms must be > 0, snap_ms >= 0")
        if self.pad_margin < 0:
            raise ConfigError("pad_margin must be >= 0")


@dataclass(frozen=True, eq=False)
class RPeakList:
    indices: np.ndarray
    fs: int

    def __len__(self):
        return self.indices.size


@dataclass(frozen=True, eq=False)
class NnSeries:
    intervals_ms: np.ndarray

    def __len__(self):
        return self.intervals_ms.size


def _samples(ms, fs):
    return max(1, int(round(ms * fs / 1000.0)))


def swt_energy(x, fs, cfg: DetectorConfig):
    """Integrated squared deepest-level SWT detail, aligned with ``x``."""
    n = x.size
    block = 2 ** cfg.swt_level
    rem = (-n) % block
    left = cfg.pad_margin + rem // 2
    right = cfg.pad_margin + rem - rem // 2
    padded = np.pad(x, (left, right), mode="symmetric")
    coeffs = pywt.swt(padded, cfg.wavelet, level=cfg.swt_level, trim_approx=True)
    detail = coeffs[1]
    win = _samples(cfg.integration_ms, fs)
    energy = np.convolve(detail * detail, np.full(win, 1.0 / win), mode="same")
    return energy[left:left + n]


def detect_rpeaks(window, fs=250, cfg: DetectorConfig = None) -> RPeakList:
    """Locate R-peaks in one window.

    ``window`` is an :class:`~edgeaf.preprocess.EcgWindow` or a bare array.
    Flat input gives an empty list.
    """
    cfg = cfg or DetectorConfig()
    x = np.asarray(getattr(window, "samples", window), dtype=np.float64)
    n = x.size
    if n < 2 ** cfg.swt_level:
        raise DetectorError(
            f"window of {n} samples is shorter than 2**{cfg.swt_level}")
    empty = RPeakList(np.zeros(0, dtype=np.int64), fs)
    span = x.max() - x.min()
    if span == 0:
        return empty

    energy = swt_energy(x, fs, cfg)
    floor = 1e-12 * span * span
    if energy.max() <= floor:
        return empty
    thr_win = min(n, _samples(1000.0 * cfg.threshold_window_s, fs))
    rolling = ndimage.percentile_filter(
        energy, 100.0 * cfg.threshold_quantile, size=thr_win, mode="nearest")
    threshold = np.maximum(cfg.threshold_scale * rolling, floor)

    refractory = _samples(cfg.refractory_ms, fs)
    cand, _ = sps.find_peaks(energy, height=threshold, distance=refractory)
    if cand.size == 0:
        return empty

    snap = int(round(cfg.snap_ms * fs / 1000.0))
    snapped = []
    for c in cand.tolist():
        lo, hi = max(0, c - snap), min(n, c + snap + 1)
        p = lo + int(np.argmax(x[lo:hi]))
        if (p > 0 and x[p - 1] > x[p]) or (p < n - 1 and x[p + 1] > x[p]):
            continue
        snapped.append(p)
    if not snapped:
        return empty

    # refractory again after snapping, tallest raw peak wins
    snapped = np.unique(np.array(snapped, dtype=np.int64))
    order = np.argsort(-x[snapped], kind="stable")
    kept = []
    for i in order.tolist():
        p = snapped[i]
        if all(abs(p - q) >= refractory for q in kept):
            kept.append(p)
    return RPeakList(np.array(sorted(kept), dtype=np.int64), fs)


def to_nn_series(peaks: RPeakList) -> NnSeries:
    idx = np.asarray(peaks.indices, dtype=np.int64)
    if idx.size < 2:
        raise InsufficientPeaksError(f"need at least 2 R-peaks, got {idx.size}")
    return NnSeries(np.diff(idx) * 1000.0 / peaks.fs)
