"""Resampling, low-pass filtering, min-max scaling and windowing."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List

import numpy as np
from scipy import signal as sps

from .errors import ConfigError, UnsupportedRateError
from .ingest import EcgRecord, Rhythm

# anti-alias corner as a fraction of the *target* rate
ANTI_ALIAS_FRACTION = 0.45
ANTI_ALIAS_ORDER = 8


@dataclass(frozen=True)
class PreprocessConfig:
    target_fs: int = 250
    cutoff_hz: float = 50.0
    filter_order: int = 4
    window_s: float = 5.0
    overlap_s: float = 1.0
    label_threshold_p: float = 0.5

    def __post_init__(self):
        if self.target_fs <= 0:
            raise ConfigError("target_fs must be positive")
        if not 0 < self.cutoff_hz < self.target_fs / 2:
            raise ConfigError(
                f"cutoff_hz={self.cutoff_hz} must lie in (0, {self.target_fs / 2})")
        if self.filter_order < 1:
            raise ConfigError("filter_order must be a positive integer")
        if not self.window_s > self.overlap_s >= 0:
            raise ConfigError("require window_s > overlap_s >= 0")
        if not 0.0 <= self.label_threshold_p <= 1.0:
            raise ConfigError("label_threshold_p must lie in [0, 1]")

    @property
    def window_samples(self):
        return int(round(self.window_s * self.target_fs))

    @property
    def stride_samples(self):
        return int(round((self.window_s - self.overlap_s) * self.target_fs))


@dataclass(frozen=True, eq=False)
class EcgWindow:
    samples: np.ndarray
    label: Rhythm
    source_record: str
    start_index: int

    def __len__(self):
        return self.samples.size


def lowpass(x, fs, cutoff_hz, order=4, zero_phase=True):
    """Butterworth low-pass on a bare array.

    With ``zero_phase`` the filter runs forward and backward, so the
    magnitude response is squared (-6.02 dB at the corner) and there is
    no group delay.
    """
    if not 0 < cutoff_hz < fs / 2:
        raise ConfigError(f"cutoff {cutoff_hz} Hz must lie in (0, Nyquist={fs / 2} Hz)")
    if order < 1:
        raise ConfigError("filter order must be a positive integer")
    sos = _butter_sos(int(order), float(cutoff_hz), float(fs))
    x = np.asarray(x, dtype=np.float64)
    if zero_phase:
        # scipy's default edge padding, shortened for very short inputs
        padlen = min(3 * (2 * sos.shape[0] + 1), x.size - 1)
        return sps.sosfiltfilt(sos, x, padlen=max(padlen, 0))
    return sps.sosfilt(sos, x)


_SOS_CACHE = {}


def _butter_sos(order, cutoff_hz, fs):
    key = (order, cutoff_hz, fs)
    sos = _SOS_CACHE.get(key)
    if sos is None:
        sos = sps.butter(order, cutoff_hz, btype="low", fs=fs, output="sos")
        _SOS_CACHE[key] = sos
    return sos


def butterworth_lowpass(record: EcgRecord, cutoff_hz=50.0, order=4,
                        zero_phase=True) -> EcgRecord:
    out = lowpass(record.samples, record.fs, cutoff_hz, order, zero_phase)
    return replace(record, samples=out)


def resample(record: EcgRecord, target_fs: int) -> EcgRecord:
    """Downsample to ``target_fs``.

    Anti-alias low-pass at 0.45 * target_fs (zero phase), then linear
    interpolation onto the target grid. Integer ratios therefore reduce to
    plain decimation of the filtered signal. Rhythm labels and truth peaks
    follow the nearest source sample.
    """
    fs = record.fs
    if target_fs <= 0:
        raise ConfigError("target_fs must be positive")
    if target_fs > fs:
        raise UnsupportedRateError(f"cannot upsample {fs} Hz -> {target_fs} Hz")
    if target_fs == fs:
        return record
    n = record.samples.size
    filtered = lowpass(record.samples, fs, ANTI_ALIAS_FRACTION * target_fs,
                       ANTI_ALIAS_ORDER)
    n_out = (n - 1) * target_fs // fs + 1
    # exact rational positions, so integer ratios land on source samples
    pos = np.arange(n_out, dtype=np.int64) * fs / target_fs
    out = np.interp(pos, np.arange(n), filtered)
    nearest = np.clip(np.rint(pos).astype(np.int64), 0, n - 1)
    rhythm = record.rhythm[nearest]
    peaks = None
    if record.rpeaks_truth is not None:
        mapped = np.rint(record.rpeaks_truth * target_fs / fs).astype(np.int64)
        peaks = np.unique(np.clip(mapped, 0, n_out - 1))
    return EcgRecord(record.record_id, out, target_fs, rhythm, peaks)


def minmax_scale(x):
    """Rescale to [0, 1]; a constant input maps to all 0.5."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ConfigError("cannot scale an empty window")
    lo = x.min()
    span = x.max() - lo
    if span == 0:
        return np.full_like(x, 0.5)
    return (x - lo) / span


def window_starts(n_samples, cfg: PreprocessConfig):
    w, s = cfg.window_samples, cfg.stride_samples
    if n_samples < w:
        return np.zeros(0, dtype=np.int64)
    return np.arange(0, n_samples - w + 1, s, dtype=np.int64)


def label_window(rhythm_slice, p):
    # strict ">" so an exact p share stays NON_AF
    af = int(np.count_nonzero(rhythm_slice == Rhythm.AF))
    return Rhythm.AF if af / rhythm_slice.size > p else Rhythm.NON_AF


def window_and_label(record: EcgRecord, cfg: PreprocessConfig) -> List[EcgWindow]:
    """Cut fixed-length windows at stride ``window_s - overlap_s``.

    The trailing partial window is dropped and every window is min-max
    scaled on its own. A record shorter than one window yields ``[]``.
    """
    if record.fs != cfg.target_fs:
        raise ConfigError(
            f"record {record.record_id!r} is at {record.fs} Hz, expected {cfg.target_fs} Hz")
    w = cfg.window_samples
    out = []
    for start in window_starts(record.samples.size, cfg).tolist():
        seg = record.samples[start:start + w]
        out.append(EcgWindow(
            samples=minmax_scale(seg),
            label=label_window(record.rhythm[start:start + w], cfg.label_threshold_p),
            source_record=record.record_id,
            start_index=start,
        ))
    return out


def prepare_windows(record: EcgRecord, cfg: PreprocessConfig) -> List[EcgWindow]:
    """Resample, low-pass the whole record, then window and label it."""
    rec = resample(record, cfg.target_fs)
    rec = butterworth_lowpass(rec, cfg.cutoff_hz, cfg.filter_order)
    return window_and_label(rec, cfg)
