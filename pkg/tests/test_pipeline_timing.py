import numpy as np
import pytest

from edgeaf.bonsai import TrainConfig, measure_inference, measure_inference_many, train
from edgeaf.errors import ValidationError
from edgeaf.featsel import rank_features, subset
from edgeaf.hrv import FEATURE_NAMES
from edgeaf.ingest import Rhythm
from edgeaf.pipeline import MIN_PEAKS, STAGES, Pipeline


@pytest.fixture(scope="module")
def models(small_dataset):
    ds = small_dataset
    ranking = rank_features(ds.X, ds.y)
    cfg = TrainConfig(epochs=20, warmup_epochs=5, retrain_epochs=5)
    out = {}
    for n in (4, 14):
        names = subset(ranking, n).ordered()
        out[n] = train(ds.columns(names), ds.y, cfg, feature_names=names)
    return out


def test_pipeline_matches_offline_features(small_dataset, models):
    pipe = Pipeline(models[14])
    raw = small_dataset.raw_windows[0]
    f = pipe.features(raw)
    assert f.shape == (len(FEATURE_NAMES),)
    score, label = pipe.run(raw)
    assert label in (Rhythm.AF, Rhythm.NON_AF)
    assert score == models[14].score(f)


def test_pipeline_skips_flat_window(models):
    pipe = Pipeline(models[4])
    assert pipe.features(np.zeros(1250)) is None
    assert pipe.run(np.zeros(1250)) is None
    result, ns = pipe.run_timed(np.zeros(1250))
    assert result is None and len(ns) == len(STAGES) and ns[3] == ns[4] == 0
    assert MIN_PEAKS == 3


def test_run_timed_agrees_with_run(small_dataset, models):
    pipe = Pipeline(models[4])
    for raw in small_dataset.raw_windows[:5]:
        result, ns = pipe.run_timed(raw)
        assert result == pipe.run(raw)
        assert all(t > 0 for t in ns)


def test_measure_inference_report(small_dataset, models):
    rep = measure_inference(models[14], small_dataset.raw_windows)
    assert rep.n_windows + rep.n_skipped == len(small_dataset.raw_windows)
    assert rep.pipeline_median_ms >= rep.predict_median_ms > 0
    assert rep.predict_p95_ms >= rep.predict_median_ms
    assert set(rep.stage_median_ms) == set(STAGES)
    assert sum(rep.stage_fractions.values()) == pytest.approx(1.0, abs=0.01)
    d = rep.to_dict()
    assert d["stage_fractions"] == rep.stage_fractions


def test_measure_inference_many_interleaved(small_dataset, models):
    a, b = measure_inference_many([models[4], models[14]], small_dataset.raw_windows)
    assert a.n_windows == b.n_windows
    ratio = a.predict_median_ms / b.predict_median_ms
    assert 0.5 <= ratio <= 2.0


def test_empty_window_set(models):
    with pytest.raises(ValidationError):
        measure_inference(models[4], [])
