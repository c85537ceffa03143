"""Command-line interface: train, predict, evaluate, curve, diagnose.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
Every artifact-producing command also writes ``<out>.manifest.json`` with
the fully resolved configuration, dataset fingerprints and timings, so a
run can be audited and reproduced; with a fixed ``--seed`` the artifacts
themselves are bit-identical across runs.
"""

import argparse
import hashlib
import json
import sys
import time

import numpy as np

from . import __version__
from ._validation import NumericError
from .datasets import DataError, load_csv, load_libsvm
from .diagnostics import convergence_trace, write_trace_csv
from .ensemble import GradientBoosting, InfiniteBoost, RandomForest
from .losses import make_loss
from .metrics import evaluate_metric
from .model_io import load_model, save_model, write_atomic

MODES = ("gb", "infinite", "infinite-adaptive", "forest")

BOOSTING_DEPTH_DEFAULT = 7


class UsageError(ValueError):
    """Flag combinations argparse cannot catch by itself."""


def _add_data_flags(parser, *, role="data"):
    parser.add_argument(f"--{role}", required=True, help=f"{role} file path")
    parser.add_argument("--format", choices=("csv", "libsvm"), default="csv")
    parser.add_argument("--target-column", default=None,
                        help="CSV target column name (or 0-based index)")
    parser.add_argument("--no-header", action="store_true",
                        help="CSV file has no header row")
    parser.add_argument("--ranking", action="store_true",
                        help="libsvm qid fields define query groups")


def _add_train_flags(parser):
    parser.add_argument("--mode", choices=MODES, required=True)
    parser.add_argument("--loss", choices=("mse", "logloss", "rank"),
                        default="mse")
    parser.add_argument("--trees", type=int, default=100,
                        help="number of trees / boosting iterations")
    parser.add_argument("--shrinkage", type=float, default=None,
                        help="learning rate (gb mode only)")
    parser.add_argument("--capacity", type=float, default=None,
                        help="fixed capacity (infinite mode only)")
    parser.add_argument("--weighting", choices=("uniform", "linear"),
                        default=None, help="tree weighting (infinite modes)")
    parser.add_argument("--holdout-fraction", type=float, default=None,
                        help="capacity-tuning holdout (infinite-adaptive)")
    parser.add_argument("--subsample", type=float, default=0.7)
    parser.add_argument("--max-features", type=float, default=0.7)
    parser.add_argument("--max-depth", default="default",
                        help="int, or 'none' for unlimited; default: 7 for "
                             "boosting modes, unlimited for forest")
    parser.add_argument("--min-samples-leaf", type=int, default=1)
    bootstrap = parser.add_mutually_exclusive_group()
    bootstrap.add_argument("--bootstrap", dest="bootstrap",
                           action="store_true", default=None)
    bootstrap.add_argument("--no-bootstrap", dest="bootstrap",
                           action="store_false")
    parser.add_argument("--clip-threshold", default="auto",
                        help="gradient magnitude cap: a number, 'none' to "
                             "disable, or 'auto' for the per-loss default")
    parser.add_argument("--noise-sigma", type=float, default=0.0,
                        help="Gaussian score noise before each gradient")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="infiniteboost",
        description="Tree ensembles: gradient boosting, capacity-averaged "
                    "boosting and random forests.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", help="fit a model, write JSON")
    _add_train_flags(train)
    _add_data_flags(train)
    train.add_argument("--out", required=True, help="model output path")

    predict = commands.add_parser("predict", help="score a dataset")
    _add_data_flags(predict)
    predict.add_argument("--model", required=True)
    predict.add_argument("--out", required=True)
    predict.add_argument("--proba", action="store_true",
                         help="emit class-1 probabilities (logloss models)")

    evaluate = commands.add_parser("evaluate", help="score and report a metric")
    _add_data_flags(evaluate)
    evaluate.add_argument("--model", required=True)
    evaluate.add_argument("--metric", required=True,
                          help="mse, auc or ndcg@K")
    evaluate.add_argument("--out", default=None, help="optional JSON output")

    curve = commands.add_parser(
        "curve", help="train and emit a learning-curve CSV"
    )
    _add_train_flags(curve)
    _add_data_flags(curve, role="train")
    curve.add_argument("--test", required=True, help="test file path")
    curve.add_argument("--metric", required=True, help="mse, auc or ndcg@K")
    curve.add_argument("--step", type=int, default=10,
                       help="iteration granularity of the curve")
    curve.add_argument("--out", required=True, help="curve CSV path")

    diagnose = commands.add_parser(
        "diagnose", help="train while tracing fixed-point diagnostics"
    )
    _add_train_flags(diagnose)
    _add_data_flags(diagnose)
    diagnose.add_argument("--probe-every", type=int, default=10)
    diagnose.add_argument("--probe-trees", type=int, default=32)
    diagnose.add_argument("--out", required=True, help="trace CSV path")

    return parser


# -- flag resolution -----------------------------------------------------


def _reject(condition, message):
    if condition:
        raise UsageError(message)


def _resolve_clip(text):
    if text == "auto":
        return "auto"
    if str(text).lower() in ("none", "off"):
        return None
    try:
        return float(text)
    except ValueError:
        raise UsageError(
            f"--clip-threshold must be a number, 'none' or 'auto', got {text!r}"
        ) from None


def _resolve_max_depth(text, mode):
    if text == "default":
        return None if mode == "forest" else BOOSTING_DEPTH_DEFAULT
    if str(text).lower() in ("none", "unlimited"):
        return None
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"--max-depth must be an integer or 'none', got {text!r}") from None


def resolve_config(args):
    """Materialize every default for the manifest and build the estimator."""
    mode = args.mode
    if mode == "gb":
        _reject(args.shrinkage is None, "gb mode requires --shrinkage")
        _reject(args.capacity is not None, "--capacity conflicts with gb mode")
        _reject(args.weighting is not None, "--weighting conflicts with gb mode")
        _reject(args.holdout_fraction is not None,
                "--holdout-fraction conflicts with gb mode")
    elif mode == "infinite":
        _reject(args.capacity is None, "infinite mode requires --capacity")
        _reject(args.shrinkage is not None,
                "--shrinkage conflicts with infinite mode")
        _reject(args.holdout_fraction is not None,
                "--holdout-fraction conflicts with infinite mode")
    elif mode == "infinite-adaptive":
        _reject(args.shrinkage is not None,
                "--shrinkage conflicts with infinite-adaptive mode")
        _reject(args.capacity is not None,
                "--capacity conflicts with infinite-adaptive mode "
                "(it is tuned on the holdout)")
    else:  # forest
        for flag, name in ((args.shrinkage, "--shrinkage"),
                           (args.capacity, "--capacity"),
                           (args.weighting, "--weighting"),
                           (args.holdout_fraction, "--holdout-fraction")):
            _reject(flag is not None, f"{name} conflicts with forest mode")
        _reject(args.noise_sigma != 0.0,
                "--noise-sigma conflicts with forest mode")
    _reject(args.trees < 0, "--trees must be >= 0")

    max_depth = _resolve_max_depth(args.max_depth, mode)
    bootstrap = args.bootstrap if args.bootstrap is not None else mode == "forest"
    loss = args.loss
    clip = _resolve_clip(args.clip_threshold)

    config = {
        "mode": mode,
        "loss": loss,
        "trees": args.trees,
        "subsample": args.subsample,
        "max_features": args.max_features,
        "max_depth": max_depth,
        "min_samples_leaf": args.min_samples_leaf,
        "bootstrap": bootstrap,
        "clip_threshold": make_loss(loss, clip).clip_threshold,
        "seed": args.seed,
        "threads": args.threads,
    }
    common = dict(
        loss=loss, n_estimators=args.trees, subsample=args.subsample,
        max_features=args.max_features, max_depth=max_depth,
        min_samples_leaf=args.min_samples_leaf, bootstrap=bootstrap,
        clip_threshold=clip, random_state=args.seed,
    )
    if mode == "gb":
        config["shrinkage"] = args.shrinkage
        config["noise_sigma"] = args.noise_sigma
        model = GradientBoosting(
            learning_rate=args.shrinkage, noise_sigma=args.noise_sigma,
            **common,
        )
    elif mode in ("infinite", "infinite-adaptive"):
        weighting = args.weighting or "linear"
        config["weighting"] = weighting
        config["noise_sigma"] = args.noise_sigma
        if mode == "infinite":
            config["capacity"] = args.capacity
            capacity = args.capacity
        else:
            fraction = (args.holdout_fraction
                        if args.holdout_fraction is not None else 0.05)
            config["holdout_fraction"] = fraction
            config["initial_capacity"] = 0.5
            capacity = "adaptive"
        model = InfiniteBoost(
            capacity=capacity, weighting=weighting,
            holdout_fraction=config.get("holdout_fraction", 0.05),
            noise_sigma=args.noise_sigma, **common,
        )
    else:
        model = RandomForest(n_jobs=args.threads, **common)
    return config, model


# -- dataset plumbing ----------------------------------------------------


def _load(path, args, *, need_target=True):
    if args.format == "csv":
        target = args.target_column
        if need_target and target is None:
            raise UsageError("--target-column is required for CSV data")
        return load_csv(path, target_column=target,
                        has_header=not args.no_header)
    return load_libsvm(path, ranking=args.ranking)


def _fingerprint(path, dataset):
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return {
        "path": path,
        "n_samples": dataset.n_samples,
        "n_features": dataset.n_features,
        "sha256": digest.hexdigest(),
    }


def _write_manifest(out_path, command, config, datasets, timings):
    manifest = {
        "tool": "infiniteboost",
        "version": __version__,
        "command": command,
        "config": config,
        "datasets": datasets,
        "timings": {k: round(v, 6) for k, v in timings.items()},
    }
    write_atomic(out_path + ".manifest.json",
                 json.dumps(manifest, indent=2) + "\n")


def _parse_metric_name(name):
    if name not in ("mse", "auc") and not (
            name == "ndcg" or name.startswith("ndcg@")):
        raise UsageError(f"unknown metric {name!r}; use mse, auc or ndcg@K")
    return name


# -- commands ------------------------------------------------------------


def cmd_train(args):
    config, model = resolve_config(args)
    t0 = time.perf_counter()
    dataset = _load(args.data, args)
    t_load = time.perf_counter()
    model.fit(dataset.features, dataset.targets,
              query_groups=dataset.query_groups)
    t_fit = time.perf_counter()
    save_model(model, args.out)
    _write_manifest(
        args.out, "train", config,
        {"train": _fingerprint(args.data, dataset)},
        {"load_s": t_load - t0, "train_s": t_fit - t_load,
         "total_s": time.perf_counter() - t0},
    )
    print(f"wrote {args.out} ({len(model.trees_)} trees)")
    return 0


def cmd_predict(args):
    t0 = time.perf_counter()
    model = load_model(args.model)
    dataset = _load(args.data, args, need_target=False)
    if args.proba:
        if model.loss_.name != "logistic":
            raise UsageError("--proba requires a logloss model")
        values = model.predict_proba(dataset.features)
    else:
        values = model.predict(dataset.features)
    write_atomic(args.out, "".join(repr(float(v)) + "\n" for v in values))
    _write_manifest(
        args.out, "predict",
        {"model": args.model, "proba": args.proba},
        {"data": _fingerprint(args.data, dataset)},
        {"total_s": time.perf_counter() - t0},
    )
    print(f"wrote {args.out} ({values.shape[0]} predictions)")
    return 0


def cmd_evaluate(args):
    metric = _parse_metric_name(args.metric)
    model = load_model(args.model)
    dataset = _load(args.data, args)
    try:
        result = evaluate_metric(
            metric, dataset.targets, model.predict(dataset.features),
            query_groups=dataset.query_groups,
        )
    except ValueError as exc:
        raise DataError(str(exc)) from None
    print(f"{result.name}={result.value!r} (n={result.n})")
    if args.out:
        write_atomic(args.out, json.dumps(
            {"metric": result.name, "value": result.value, "n": result.n}
        ) + "\n")
    return 0


def _metric_on(metric, dataset, scores):
    return evaluate_metric(
        metric, dataset.targets, scores, query_groups=dataset.query_groups
    ).value


def cmd_curve(args):
    metric = _parse_metric_name(args.metric)
    _reject(args.step < 1, "--step must be >= 1")
    config, model = resolve_config(args)
    config.update({"metric": metric, "step": args.step})
    t0 = time.perf_counter()
    train = _load(args.train, args)
    test = _load(args.test, args)
    if metric.startswith("ndcg") and train.query_groups is None:
        raise DataError("ndcg requires query groups in the data")
    t_load = time.perf_counter()
    model.fit(train.features, train.targets, query_groups=train.query_groups)
    t_fit = time.perf_counter()

    staged_train = model.staged_predict(train.features, step=args.step)
    staged_test = model.staged_predict(test.features, step=args.step)
    lines = ["iteration,train_metric,test_metric"]
    for (k, scores_train), (_, scores_test) in zip(staged_train, staged_test):
        m_train = _metric_on(metric, train, scores_train)
        m_test = _metric_on(metric, test, scores_test)
        lines.append(f"{k},{m_train!r},{m_test!r}")
    write_atomic(args.out, "\n".join(lines) + "\n")
    _write_manifest(
        args.out, "curve", config,
        {"train": _fingerprint(args.train, train),
         "test": _fingerprint(args.test, test)},
        {"load_s": t_load - t0, "train_s": t_fit - t_load,
         "total_s": time.perf_counter() - t0},
    )
    print(f"wrote {args.out} ({len(lines) - 1} rows)")
    return 0


def cmd_diagnose(args):
    config, model = resolve_config(args)
    _reject(args.probe_every < 1, "--probe-every must be >= 1")
    _reject(args.probe_trees < 1, "--probe-trees must be >= 1")
    _reject(args.mode not in ("infinite", "infinite-adaptive"),
            "diagnose requires an infinite mode")
    config.update({"probe_every": args.probe_every,
                   "probe_trees": args.probe_trees})
    t0 = time.perf_counter()
    dataset = _load(args.data, args)
    t_load = time.perf_counter()
    rows = convergence_trace(
        model, dataset.features, dataset.targets,
        query_groups=dataset.query_groups, probe_every=args.probe_every,
        n_probe_trees=args.probe_trees, random_state=args.seed + 1,
        n_jobs=args.threads,
    )
    write_trace_csv(rows, args.out)
    _write_manifest(
        args.out, "diagnose", config,
        {"data": _fingerprint(args.data, dataset)},
        {"load_s": t_load - t0, "total_s": time.perf_counter() - t0},
    )
    print(f"wrote {args.out} ({len(rows)} probes)")
    return 0


_COMMANDS = {
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "curve": cmd_curve,
    "diagnose": cmd_diagnose,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (OverflowError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
