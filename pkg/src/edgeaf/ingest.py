"""ECG record container, CSV ingestion and the synthetic ECG generator.

CSV layout (UTF-8, LF line endings)::

    # fs=250
    # rpeaks=12,262,512        (optional)
    0.100000,NON_AF
    0.153211,AF
    ...

One row per sample, amplitude in millivolts written with ``%.6f``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import CsvParseError, ValidationError


class Rhythm(enum.IntEnum):
    NON_AF = 0
    AF = 1


@dataclass(frozen=True, eq=False)
class EcgRecord:
    """Single-lead ECG trace with a per-sample rhythm annotation.

    ``rhythm`` is an int8 array of :class:`Rhythm` values, one per sample.
    ``rpeaks_truth`` is only populated for synthetic or annotated test data.
    """

    record_id: str
    samples: np.ndarray
    fs: int
    rhythm: np.ndarray
    rpeaks_truth: Optional[np.ndarray] = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        rhythm = np.asarray(self.rhythm, dtype=np.int8)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "rhythm", rhythm)
        if samples.ndim != 1 or samples.size == 0:
            raise ValidationError("samples must be a non-empty 1-D sequence")
        if int(self.fs) != self.fs or self.fs <= 0:
            raise ValidationError(f"fs must be a positive integer, got {self.fs!r}")
        object.__setattr__(self, "fs", int(self.fs))
        if rhythm.shape != samples.shape:
            raise ValidationError(
                f"rhythm length {rhythm.size} != samples length {samples.size}")
        if not np.isin(rhythm, (Rhythm.NON_AF, Rhythm.AF)).all():
            raise ValidationError("rhythm values must be AF or NON_AF")
        if self.rpeaks_truth is not None:
            peaks = np.asarray(self.rpeaks_truth, dtype=np.int64)
            if peaks.ndim != 1:
                raise ValidationError("rpeaks_truth must be 1-D")
            if peaks.size and (np.any(np.diff(peaks) <= 0)
                               or peaks[0] < 0 or peaks[-1] >= samples.size):
                raise ValidationError(
                    "rpeaks_truth must be strictly increasing and within bounds")
            object.__setattr__(self, "rpeaks_truth", peaks)

    @property
    def duration_s(self):
        return self.samples.size / self.fs

    def __len__(self):
        return self.samples.size


_LABELS = {"AF": Rhythm.AF, "NON_AF": Rhythm.NON_AF}


def load_csv(path) -> EcgRecord:
    """Read a record from the CSV layout described in the module docstring.

    The record id is the file stem. Raises :class:`CsvParseError` carrying
    the 1-based line number of the first malformed line.
    """
    path = Path(path)
    fs = None
    rpeaks = None
    amps = []
    labels = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if line.startswith("#"):
                if amps:
                    raise CsvParseError(lineno, "header line after data rows")
                key, sep, value = line[1:].strip().partition("=")
                if not sep:
                    raise CsvParseError(lineno, f"malformed header {line!r}")
                key = key.strip()
                if key == "fs":
                    try:
                        fs = int(value)
                    except ValueError:
                        raise CsvParseError(lineno, f"bad fs value {value!r}") from None
                elif key == "rpeaks":
                    try:
                        rpeaks = [int(v) for v in value.split(",") if v.strip()]
                    except ValueError:
                        raise CsvParseError(lineno, "bad rpeaks list") from None
                else:
                    raise CsvParseError(lineno, f"unknown header key {key!r}")
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise CsvParseError(lineno, f"expected '<amplitude>,<AF|NON_AF>', got {line!r}")
            try:
                amps.append(float(parts[0]))
            except ValueError:
                raise CsvParseError(lineno, f"bad amplitude {parts[0]!r}") from None
            label = _LABELS.get(parts[1].strip())
            if label is None:
                raise CsvParseError(lineno, f"bad rhythm label {parts[1]!r}")
            labels.append(label)
    if fs is None:
        raise CsvParseError(1, "missing '# fs=<int>' header")
    if not amps:
        raise CsvParseError(1, "no sample rows")
    return EcgRecord(
        record_id=path.stem,
        samples=np.array(amps),
        fs=fs,
        rhythm=np.array(labels, dtype=np.int8),
        rpeaks_truth=None if rpeaks is None else np.array(rpeaks, dtype=np.int64),
    )


def save_csv(record: EcgRecord, path) -> Path:
    path = Path(path)
    names = {Rhythm.AF: "AF", Rhythm.NON_AF: "NON_AF"}
    lines = [f"# fs={record.fs}"]
    if record.rpeaks_truth is not None:
        lines.append("# rpeaks=" + ",".join(str(int(i)) for i in record.rpeaks_truth))
    lines.extend(f"{a:.6f},{names[r]}" for a, r in zip(record.samples.tolist(),
                                                      record.rhythm.tolist()))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")
    return path


@dataclass(frozen=True)
class SynthesisSpec:
    """Parameters of the Gaussian-bump ECG generator.

    RR intervals are drawn uniformly from ``rr_mean_ms +/- rr_jitter_ms``.
    ``qrs_width_ms`` is the standard deviation of each Gaussian QRS bump
    (peak amplitude 1.0 mV before noise).
    """

    duration_s: float = 10.0
    fs: int = 250
    rr_mean_ms: float = 800.0
    rr_jitter_ms: float = 0.0
    qrs_width_ms: float = 20.0
    noise_std: float = 0.0
    baseline_wander_hz: float = 0.0
    baseline_wander_amp: float = 0.0
    label: Rhythm = Rhythm.NON_AF
    seed: int = 0
    record_id: str = field(default="synthetic")

    def validate(self):
        if not self.duration_s > 0:
            raise ValidationError("duration_s must be positive")
        if int(self.fs) != self.fs or self.fs <= 0:
            raise ValidationError("fs must be a positive integer")
        if not (self.rr_mean_ms > self.rr_jitter_ms >= 0):
            raise ValidationError("require rr_mean_ms > rr_jitter_ms >= 0")
        if (self.rr_mean_ms - self.rr_jitter_ms) * self.fs / 1000.0 < 1.0:
            raise ValidationError("shortest RR interval is below one sample")
        if self.qrs_width_ms <= 0:
            raise ValidationError("qrs_width_ms must be positive")
        if self.noise_std < 0 or self.baseline_wander_amp < 0:
            raise ValidationError("noise_std and baseline_wander_amp must be >= 0")


def synthesize(spec: SynthesisSpec) -> EcgRecord:
    """Generate a record whose R-peak locations are known exactly.

    Beats are placed at accumulated RR times starting half an RR after t=0;
    each bump is centred on the nearest sample, so with zero noise the
    sample maximum of every bump sits on its ``rpeaks_truth`` index.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    fs = int(spec.fs)
    n = int(round(spec.duration_s * fs))
    if n == 0:
        raise ValidationError("duration_s shorter than one sample")
    lo = spec.rr_mean_ms - spec.rr_jitter_ms
    hi = spec.rr_mean_ms + spec.rr_jitter_ms

    centres = []
    t_ms = 0.5 * rng.uniform(lo, hi)
    duration_ms = 1000.0 * n / fs
    while t_ms < duration_ms:
        idx = int(round(t_ms * fs / 1000.0))
        if idx >= n:
            break
        centres.append(idx)
        t_ms += rng.uniform(lo, hi)
    centres = np.array(centres, dtype=np.int64)

    t = np.arange(n)
    width = spec.qrs_width_ms * fs / 1000.0
    half_support = int(np.ceil(6 * width))
    signal = np.zeros(n)
    for c in centres:
        a, b = max(0, c - half_support), min(n, c + half_support + 1)
        signal[a:b] += np.exp(-0.5 * ((t[a:b] - c) / width) ** 2)
    if spec.baseline_wander_amp > 0:
        signal += spec.baseline_wander_amp * np.sin(
            2 * np.pi * spec.baseline_wander_hz * t / fs)
    if spec.noise_std > 0:
        signal += rng.normal(0.0, spec.noise_std, n)

    return EcgRecord(
        record_id=spec.record_id,
        samples=signal,
        fs=fs,
        rhythm=np.full(n, int(spec.label), dtype=np.int8),
        rpeaks_truth=centres,
    )
