import json
import math

import numpy as np
import pytest

from edgeaf.bonsai import TrainConfig, deserialize
from edgeaf.errors import ConfigError, StageError, ValidationError
from edgeaf.featsel import FeatureSubset, rank_features, subset
from edgeaf.harness.config import FIELD_TYPES, build_configs, flatten, read_config_file
from edgeaf.harness.dataset import (CorpusSpec, build_feature_dataset, load_record_dir,
                                    read_feature_csv, synthetic_corpus, write_feature_csv,
                                    write_record_dir)
from edgeaf.harness.plan import (CSV_COLUMNS, ExperimentPlan, jsonable, model_filename,
                                 parse_subset_expr, run_plan)
from edgeaf.harness.profile import profile_pipeline
from edgeaf.hrv import FEATURE_NAMES
from edgeaf.ingest import EcgRecord
from edgeaf.preprocess import PreprocessConfig
from edgeaf.rpeak import DetectorConfig

FAST = TrainConfig(epochs=15, warmup_epochs=5, retrain_epochs=5)


class TestConfig:
    def test_every_dataclass_field_is_a_key(self):
        for cls in (PreprocessConfig, DetectorConfig, TrainConfig):
            for name in cls.__dataclass_fields__:
                assert name in FIELD_TYPES

    def test_file_and_coercion(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("# comment\n\ncutoff_hz = 40\nswt-level=3\nbudget_z=0.25\nseed=7\n")
        pre, det, tr = build_configs(read_config_file(p))
        assert pre.cutoff_hz == 40.0 and det.swt_level == 3
        assert tr.budget_z == 0.25 and tr.seed == 7
        assert flatten(pre, det, tr)["cutoff_hz"] == 40.0

    @pytest.mark.parametrize("text", ["nonsense\n", "colour=red\n"])
    def test_bad_file(self, tmp_path, text):
        p = tmp_path / "bad.cfg"
        p.write_text(text)
        with pytest.raises(ConfigError) as err:
            read_config_file(p)
        assert ":1:" in str(err.value)

    def test_bad_value(self):
        with pytest.raises(ConfigError):
            build_configs({"epochs": "many"})
        with pytest.raises(ConfigError):
            build_configs({"cutoff_hz": "200"})


class TestDataset:
    def test_window_counts(self, small_dataset):
        assert small_dataset.class_counts() == {"non_af": 100, "af": 100}
        assert small_dataset.n_skipped == 0
        assert small_dataset.X.shape == (200, 14)
        assert len(small_dataset.raw_windows) == 40
        assert all(w.size == 1250 for w in small_dataset.raw_windows)

    def test_corpus_is_deterministic(self):
        spec = CorpusSpec(records_per_class=2, duration_s=20, seed=5)
        a, b = synthetic_corpus(spec), synthetic_corpus(spec)
        assert [r.samples.tobytes() for r in a] == [r.samples.tobytes() for r in b]
        assert [r.record_id for r in a] == ["rec_nonaf_000", "rec_nonaf_001",
                                            "rec_af_000", "rec_af_001"]

    def test_features_separate_classes(self, small_dataset):
        ds = small_dataset
        sdnn = ds.columns(["sdnn"])[:, 0]
        assert sdnn[ds.y == 1].mean() > 3 * sdnn[ds.y == 0].mean()

    def test_feature_csv_round_trip(self, small_dataset, tmp_path):
        p = write_feature_csv(small_dataset, tmp_path / "f.csv")
        lines = p.read_text().splitlines()
        assert lines[0] == "# skipped=0"
        assert lines[1].split(",") == ["record_id", "start_index", "label"] + list(FEATURE_NAMES)
        back = read_feature_csv(p)
        assert back.X.tobytes() == small_dataset.X.tobytes()
        np.testing.assert_array_equal(back.y, small_dataset.y)
        np.testing.assert_array_equal(back.start_index, small_dataset.start_index)

    def test_skipped_windows_counted(self):
        flat = EcgRecord("flat", np.zeros(13 * 250), 250, np.zeros(13 * 250))
        ds = build_feature_dataset([flat] + synthetic_corpus(
            CorpusSpec(records_per_class=1, duration_s=13, seed=2)))
        assert ds.n_skipped == 3 and len(ds) == 6

    def test_stage_error_names_stage_and_record(self):
        short = EcgRecord("tiny", np.zeros(5), 100, np.zeros(5))
        with pytest.raises(StageError) as err:
            build_feature_dataset([short])
        assert err.value.stage == "resample" and err.value.record_id == "tiny"

    def test_record_dir_round_trip(self, tmp_path):
        recs = synthetic_corpus(CorpusSpec(records_per_class=1, duration_s=9, seed=1))
        write_record_dir(recs, tmp_path / "recs")
        back = load_record_dir(tmp_path / "recs")
        assert sorted(r.record_id for r in back) == sorted(r.record_id for r in recs)
        with pytest.raises(ValidationError):
            load_record_dir(tmp_path)


class TestPlan:
    def test_subset_expressions(self, small_dataset):
        r = rank_features(small_dataset.X, small_dataset.y)
        rankings = {"A": r, "C": r}
        s = parse_subset_expr("A12&C14", rankings, "A")
        assert s.names == subset(r, 12).names and s.origin == "F_A_12 & F_C_14"
        assert parse_subset_expr("4", rankings, "A").origin == "F_A_4"
        assert len(parse_subset_expr("A2|C3", rankings, "A")) == 3
        for bad in ("", "A", "Q4", "4&&5"):
            with pytest.raises(ValidationError):
                parse_subset_expr(bad, rankings, "A")

    def test_plan_validation(self):
        s = [FeatureSubset(frozenset(FEATURE_NAMES), "all")]
        with pytest.raises(ValidationError):
            ExperimentPlan("A", "A", [])
        with pytest.raises(ValidationError):
            ExperimentPlan("A", "A", s, cv_folds=1)
        with pytest.raises(ValidationError):
            ExperimentPlan("A", "A", s, split="patient")
        assert ExperimentPlan("A", "C", s, cv_folds=1).pairing == "T_AC"

    def test_cv_plan_two_rows(self, small_dataset):
        r = rank_features(small_dataset.X, small_dataset.y)
        plan = ExperimentPlan("A", "A", [subset(r, 4, "F_A"), subset(r, 14, "F_A")],
                              train_config=FAST, timing_windows=20)
        rep = run_plan(plan, {"A": small_dataset})
        assert [row["subset"] for row in rep.rows] == ["F_A_4", "F_A_14"]
        for row in rep.rows:
            assert row["folds"] == 5 and len(row["metrics"]["per_fold"]) == 5
            assert row["metrics"]["pooled"]["accuracy"] > 0.9
            assert row["timing"]["n_windows"] > 0
            fr = row["timing"]["stage_fractions"]
            assert sum(fr.values()) == pytest.approx(1.0, abs=0.01)
            blob = rep.models[row["subset"]]
            assert len(blob) == row["model_size_bytes"]
            assert deserialize(blob).feature_subset == tuple(row["features"])
        lines = rep.to_csv().splitlines()
        assert lines[0].split(",") == list(CSV_COLUMNS) and len(lines) == 3
        masked = json.loads(rep.to_json(mask_timing=True))
        assert all(row["timing"] is None for row in masked["rows"])

    def test_record_split(self, small_dataset):
        plan = ExperimentPlan("A", "A", [FeatureSubset(frozenset(FEATURE_NAMES), "all")],
                              train_config=FAST, split="record", cv_folds=4)
        rep = run_plan(plan, {"A": small_dataset})
        assert rep.rows[0]["folds"] == 4 and rep.plan["split"] == "record"

    def test_cross_dataset_generalizes(self, small_dataset):
        other = build_feature_dataset(synthetic_corpus(
            CorpusSpec(records_per_class=4, duration_s=104.0, seed=99, prefix="B")), name="B")
        sub = [FeatureSubset(frozenset(FEATURE_NAMES), "F_A_14")]
        cross = run_plan(ExperimentPlan("A", "B", sub, train_config=FAST),
                         {"A": small_dataset, "B": other})
        within = run_plan(ExperimentPlan("A", "A", sub, train_config=FAST), {"A": small_dataset})
        acc_cross = cross.rows[0]["metrics"]["pooled"]["accuracy"]
        acc_within = within.rows[0]["metrics"]["fold_mean"]["accuracy"]
        assert cross.rows[0]["data"] == "T_AB" and cross.rows[0]["folds"] is None
        assert abs(acc_cross - acc_within) <= 0.05

    def test_missing_dataset(self, small_dataset):
        plan = ExperimentPlan("A", "C", [FeatureSubset(frozenset(FEATURE_NAMES), "x")])
        with pytest.raises(ValidationError):
            run_plan(plan, {"A": small_dataset})

    def test_write_outputs(self, small_dataset, tmp_path):
        plan = ExperimentPlan("A", "A", [FeatureSubset(frozenset(["sdnn", "rmssd"]), "F_A_2")],
                              train_config=FAST)
        out = run_plan(plan, {"A": small_dataset}).write(tmp_path / "run")
        assert (out / "report.json").exists() and (out / "report.csv").exists()
        assert (out / "models" / "F_A_2.bnsi").exists()

    def test_jsonable_and_filenames(self):
        assert jsonable({"a": [math.nan, np.float64(1.5), np.int64(2), math.inf]}) == \
            {"a": ["undefined", 1.5, 2, "inf"]}
        assert model_filename("F_A_12 & F_C_14") == "F_A_12_and_F_C_14.bnsi"
        assert model_filename("F_A_2 | F_C_3") == "F_A_2_or_F_C_3.bnsi"


class TestProfile:
    def test_profile_report(self, small_corpus, small_dataset, tmp_path):
        names = list(FEATURE_NAMES)
        from edgeaf.bonsai import train
        model = train(small_dataset.X, small_dataset.y, FAST, feature_names=names)
        rep = profile_pipeline(small_corpus[:4], model, max_windows=100)
        assert rep.n_windows + rep.n_skipped == 100
        assert sum(rep.fractions.values()) == pytest.approx(1.0, abs=1e-9)
        assert abs(rep.total_median_ms - rep.stage_sum_ms) <= 0.05 * rep.total_median_ms
        rep.write(tmp_path)
        data = json.loads((tmp_path / "profile.json").read_text())
        assert [s["stage"] for s in data["stages"]] == ["filter", "scale", "rpeak", "features",
                                                       "predict"]
        csv_lines = (tmp_path / "profile.csv").read_text().splitlines()
        assert csv_lines[0] == "stage,median_ms,fraction" and csv_lines[-1].startswith("total,")

    def test_profile_needs_windows(self, small_dataset):
        from edgeaf.bonsai import train
        model = train(small_dataset.X, small_dataset.y, FAST, feature_names=FEATURE_NAMES)
        short = EcgRecord("s", np.zeros(100), 250, np.zeros(100))
        with pytest.raises(ValidationError):
            profile_pipeline(short, model)
