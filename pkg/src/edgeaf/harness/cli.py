"""Command-line entry point: ``edgeaf <command> [options]``.

Every configuration key (see :mod:`edgeaf.harness.config`) is also a flag,
e.g. ``--cutoff-hz 40`` or ``--budget-z 0.25``. Flags override values from
``--config``.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..bonsai.serialize import load_model, save_model, serialize
from ..bonsai.train import train
from ..errors import EdgeAFError, ValidationError
from ..featsel import FeatureRanking, FeatureSubset, rank_features, subset
from ..hrv import FEATURE_NAMES
from .config import FIELD_TYPES, build_configs, read_config_file
from .dataset import (CorpusSpec, build_feature_dataset, load_record_dir, read_feature_csv,
                      synthetic_corpus, write_feature_csv, write_record_dir)
from .metrics import compute_metrics
from .plan import ExperimentPlan, jsonable, parse_subset_expr, run_plan
from .profile import profile_pipeline

log = logging.getLogger("edgeaf")

# synthetic stand-ins: A records at the target rate, C at 300 Hz (resampled on load)
CORPUS_KINDS = {"A": {"fs": 250}, "B": {"fs": 250}, "C": {"fs": 300}}


def _add_config_flags(p):
    g = p.add_argument_group("configuration keys")
    for key in FIELD_TYPES:
        if key == "seed":
            continue
        g.add_argument("--" + key.replace("_", "-"), dest="cfg_" + key, default=None,
                       metavar=FIELD_TYPES[key][1].upper())
    p.add_argument("--config", type=Path, help="key=value configuration file")
    p.add_argument("--seed", type=int, default=None)


def _configs(args):
    values = read_config_file(args.config) if getattr(args, "config", None) else {}
    for key in FIELD_TYPES:
        v = getattr(args, "cfg_" + key, None)
        if v is not None:
            values[key] = v
    if getattr(args, "seed", None) is not None:
        values["seed"] = args.seed
    return build_configs(values)


def _seed(args, train_cfg):
    return args.seed if args.seed is not None else train_cfg.seed


def cmd_synth(args):
    _, _, tcfg = _configs(args)
    kind = CORPUS_KINDS[args.kind]
    spec = CorpusSpec(
        records_per_class=args.records_per_class,
        duration_s=args.duration_s,
        fs=kind["fs"] if args.fs is None else args.fs,
        af_jitter_ms=args.af_jitter_ms,
        non_af_jitter_ms=args.non_af_jitter_ms,
        noise_std=args.noise_std,
        seed=_seed(args, tcfg),
        prefix=args.kind,
    )
    recs = synthetic_corpus(spec)
    write_record_dir(recs, args.out)
    print(f"wrote {len(recs)} records to {args.out}")


def cmd_prepare(args):
    pre, det, _ = _configs(args)
    ds = build_feature_dataset(load_record_dir(args.records), pre, det, name=args.records.name)
    write_feature_csv(ds, args.out)
    print(f"{len(ds)} windows ({ds.class_counts()}), {ds.n_skipped} skipped -> {args.out}")


def cmd_rank(args):
    ds = read_feature_csv(args.features)
    ranking = rank_features(ds.X, ds.y)
    if args.out:
        ranking.to_csv(args.out)
    for name, f in ranking:
        print(f"{name:10s} {f:.6g}")


def _choose_features(args, ds):
    if args.feature_list:
        names = [n.strip() for n in args.feature_list.split(",") if n.strip()]
        return FeatureSubset(frozenset(names), "custom").ordered()
    ranking = (FeatureRanking.from_csv(args.ranking) if args.ranking
               else rank_features(ds.X, ds.y))
    return subset(ranking, args.n_features).ordered()


def cmd_train(args):
    _, _, tcfg = _configs(args)
    ds = read_feature_csv(args.features)
    names = _choose_features(args, ds)
    model = train(ds.columns(names), ds.y, tcfg, feature_names=names)
    save_model(model, args.out)
    print(f"model with {len(names)} features, {len(serialize(model))} bytes -> {args.out}")


def cmd_eval(args):
    model = load_model(args.model)
    ds = read_feature_csv(args.features)
    pred = model.predict_labels(ds.columns(model.feature_subset))
    text = json.dumps(jsonable(compute_metrics(pred, ds.y)), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def cmd_sweep(args):
    pre, det, tcfg = _configs(args)
    keep = args.timing_windows
    datasets = {args.train_id: build_feature_dataset(
        load_record_dir(args.train_records), pre, det, name=args.train_id, keep_raw=keep)}
    test_id = args.train_id
    if args.test_records is not None:
        test_id = args.test_id
        if test_id == args.train_id:
            raise ValidationError("--test-id must differ from --train-id")
        datasets[test_id] = build_feature_dataset(
            load_record_dir(args.test_records), pre, det, name=test_id, keep_raw=keep)
    rankings = {k: rank_features(d.X, d.y) for k, d in datasets.items()}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k, r in rankings.items():
        r.to_csv(out / f"ranking_{k}.csv")
    subsets = [parse_subset_expr(e.strip(), rankings, args.train_id)
               for e in args.subsets.split(",") if e.strip()]
    plan = ExperimentPlan(
        train_dataset=args.train_id,
        test_dataset=test_id,
        subsets=subsets,
        cv_folds=args.cv_folds,
        train_config=tcfg,
        seed=_seed(args, tcfg),
        split=args.split,
        timing_windows=keep,
    )
    report = run_plan(plan, datasets, pre, det)
    report.write(out)
    sys.stdout.write(report.to_csv())


def cmd_profile(args):
    pre, det, _ = _configs(args)
    model = load_model(args.model)
    rep = profile_pipeline(load_record_dir(args.records), model, pre, det,
                           max_windows=args.max_windows)
    if args.out:
        rep.write(args.out)
    sys.stdout.write(rep.to_csv())


def build_parser():
    parser = argparse.ArgumentParser(prog="edgeaf", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic two-class record directory")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--kind", choices=sorted(CORPUS_KINDS), default="A")
    p.add_argument("--fs", type=int, default=None)
    p.add_argument("--records-per-class", type=int, default=20)
    p.add_argument("--duration-s", type=float, default=404.0)
    p.add_argument("--af-jitter-ms", type=float, default=150.0)
    p.add_argument("--non-af-jitter-ms", type=float, default=20.0)
    p.add_argument("--noise-std", type=float, default=0.05)
    _add_config_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("prepare", help="records -> feature CSV")
    p.add_argument("--records", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("rank", help="ANOVA F ranking of a feature CSV")
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("train", help="train and save a model")
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--n-features", type=int, default=len(FEATURE_NAMES))
    p.add_argument("--ranking", type=Path, help="ranking CSV; computed from --features if absent")
    p.add_argument("--feature-list", help="comma-separated feature names, overrides --n-features")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a saved model on a feature CSV")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="feature-subset sweep with CV or cross-dataset testing")
    p.add_argument("--train-records", type=Path, required=True)
    p.add_argument("--test-records", type=Path)
    p.add_argument("--train-id", default="A")
    p.add_argument("--test-id", default="C")
    p.add_argument("--subsets", default="4,6,8,10,12,14",
                   help="comma-separated subset expressions, e.g. '4,A12&B14'")
    p.add_argument("--cv-folds", type=int, default=5)
    p.add_argument("--split", choices=("window", "record"), default="window")
    p.add_argument("--timing-windows", type=int, default=200)
    p.add_argument("--out", type=Path, required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("profile", help="per-stage latency breakdown")
    p.add_argument("--records", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--max-windows", type=int, default=None)
    p.add_argument("--out", type=Path)
    _add_config_flags(p)
    p.set_defaults(func=cmd_profile)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except EdgeAFError as exc:
        print(f"edgeaf {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
