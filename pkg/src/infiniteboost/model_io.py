"""Versioned JSON serialization of fitted ensembles.

The document layout is::

    {
      "format_version": 1,
      "mode": "gb" | "infinite" | "infinite_adaptive" | "forest",
      "loss": "squared_error" | "logistic" | "pairwise_rank",
      "shrinkage": float,            # gb only
      "capacity": float,             # other modes (final value if adaptive)
      "weighting": "uniform" | "linear" | null,
      "tree_config": {...},
      "n_features": int,
      "weights": [...],
      "capacity_trace": [...],
      "trees": [{feature, threshold, left, right, value, max_depth_used}]
    }

Reals are emitted with ``repr`` (shortest round-trip form), so loading a
saved model reproduces its predictions bit for bit.
"""

import json
import os
import tempfile

import numpy as np

from .ensemble import GradientBoosting, InfiniteBoost, RandomForest
from .tree import Tree

FORMAT_VERSION = 1


def _tree_config(model):
    return {
        "max_depth": model.max_depth,
        "subsample": model.subsample,
        "max_features": model.max_features,
        "min_samples_leaf": model.min_samples_leaf,
        "bootstrap": model.bootstrap,
    }


def model_to_dict(model):
    doc = {
        "format_version": FORMAT_VERSION,
        "mode": model.mode_,
        "loss": model.loss_.name,
    }
    if model.mode_ == "gb":
        doc["shrinkage"] = model.learning_rate
        doc["weighting"] = None
    else:
        doc["capacity"] = model.capacity_
        doc["weighting"] = getattr(model, "weighting", None)
    doc["tree_config"] = _tree_config(model)
    doc["n_features"] = int(model.n_features_in_)
    doc["weights"] = model.tree_weights_.tolist()
    doc["capacity_trace"] = model.capacity_trace_.tolist()
    doc["trees"] = [tree.to_dict() for tree in model.trees_]
    return doc


def model_from_dict(doc):
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version!r}")
    mode = doc["mode"]
    config = doc["tree_config"]
    common = dict(
        loss=doc["loss"],
        n_estimators=len(doc["trees"]),
        max_depth=config["max_depth"],
        subsample=config["subsample"],
        max_features=config["max_features"],
        min_samples_leaf=config["min_samples_leaf"],
    )
    if mode == "gb":
        model = GradientBoosting(
            learning_rate=doc["shrinkage"],
            bootstrap=config["bootstrap"],
            **common,
        )
    elif mode in ("infinite", "infinite_adaptive"):
        model = InfiniteBoost(
            capacity="adaptive" if mode == "infinite_adaptive" else doc["capacity"],
            weighting=doc["weighting"],
            bootstrap=config["bootstrap"],
            **common,
        )
    elif mode == "forest":
        model = RandomForest(bootstrap=config["bootstrap"], **common)
    else:
        raise ValueError(f"unknown ensemble mode {mode!r}")

    n_features = int(doc["n_features"])
    model.mode_ = mode
    model.loss_ = model._loss()
    model.n_features_in_ = n_features
    model.trees_ = [Tree.from_dict(t, n_features) for t in doc["trees"]]
    model.tree_weights_ = np.asarray(doc["weights"], dtype=np.float64)
    model.capacity_trace_ = np.asarray(doc["capacity_trace"], dtype=np.float64)
    model.capacity_ = doc.get("capacity")
    return model


def write_atomic(path, text):
    """Write via a sibling temp file and rename, so readers never see a
    partially written file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_model(model, path):
    """Serialize a fitted ensemble to JSON (atomic write)."""
    write_atomic(path, json.dumps(model_to_dict(model)) + "\n")


def load_model(path):
    """Load a model saved by :func:`save_model`."""
    with open(path, "r", encoding="utf-8") as handle:
        return model_from_dict(json.load(handle))
