"""Time-domain heart-rate-variability features over an NN-interval series."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import InsufficientDataError, ValidationError


class FeatureVector(NamedTuple):
    rmssd: float
    sdsd: float
    sdnn: float
    mean_hr: float
    min_hr: float
    max_hr: float
    mean_rr: float
    nni_20: float
    pnni_20: float
    nni_50: float
    pnni_50: float
    mean_nni: float
    cvsd: float
    cvnni: float

    def as_array(self):
        return np.array(self, dtype=np.float64)


# canonical column order for every matrix and CSV in the package
FEATURE_NAMES = FeatureVector._fields
N_FEATURES = len(FEATURE_NAMES)


def extract_features(nn) -> FeatureVector:
    """Compute the 14 features from NN intervals in milliseconds.

    Standard deviations are population (ddof=0). Heart rate is evaluated
    per interval before aggregating. ``pnni_*`` divide by the number of
    intervals, and the ``nni_*`` counts use a strict ``>``. With no ectopic
    filtering ``mean_rr`` equals ``mean_nni``.
    """
    nn = np.asarray(getattr(nn, "intervals_ms", nn), dtype=np.float64)
    if nn.ndim != 1 or nn.size < 2:
        raise InsufficientDataError(
            f"need at least 2 NN intervals, got {nn.size if nn.ndim == 1 else nn.shape}")
    n = nn.size
    diff = np.diff(nn)
    abs_diff = np.abs(diff)
    mean_nni = nn.mean()
    rmssd = np.sqrt(np.mean(diff * diff))
    sdnn = nn.std()
    hr = 60000.0 / nn
    nni_20 = int(np.count_nonzero(abs_diff > 20.0))
    nni_50 = int(np.count_nonzero(abs_diff > 50.0))
    return FeatureVector(
        rmssd=float(rmssd),
        sdsd=float(diff.std()),
        sdnn=float(sdnn),
        mean_hr=float(hr.mean()),
        min_hr=float(hr.min()),
        max_hr=float(hr.max()),
        mean_rr=float(mean_nni),
        nni_20=float(nni_20),
        pnni_20=nni_20 / n,
        nni_50=float(nni_50),
        pnni_50=nni_50 / n,
        mean_nni=float(mean_nni),
        cvsd=float(rmssd / mean_nni),
        cvnni=float(sdnn / mean_nni),
    )


def feature_indices(names):
    """Canonical column indices for ``names``, validated."""
    lookup = {name: i for i, name in enumerate(FEATURE_NAMES)}
    try:
        return [lookup[n] for n in names]
    except KeyError as exc:
        raise ValidationError(f"unknown feature {exc.args[0]!r}") from None
