"""Empirical checks of the stationary-state view of capacity-averaged
boosting.

At a stationary point the score vector solves ``z = c * T(z)`` where
``T(z)_i`` is the expected prediction at sample i of a tree grown on the
negative gradient at ``z``. The expectation is estimated here by Monte
Carlo over freshly grown probe trees that are never added to the ensemble,
so probing does not perturb the state being measured. Training such a model
also performs stochastic descent on the regularized objective
``||z||^2 / 2 + c * total_loss(z)``, whose gradient is ``z - c * g(z)``.
"""

from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from sklearn.base import clone
from sklearn.utils import check_random_state

from ._validation import check_feature_matrix, check_query_groups, check_targets
from .ensemble import MAX_SEED
from .model_io import write_atomic

TraceRow = namedtuple("TraceRow", "iteration residual objective capacity")

TRACE_HEADER = "iteration,residual,objective,capacity"


@dataclass(frozen=True)
class FixedPointReport:
    residual_norm: float
    n_probe_trees: int
    z_norm: float


def _current_scores(model, X):
    scores = getattr(model, "train_scores_", None)
    if scores is not None and scores.shape[0] == X.shape[0]:
        return scores
    return model._raw_predict(X)


def average_probe_prediction(model, X, y, groups, n_probe_trees, rng,
                             n_jobs=1):
    """Monte-Carlo estimate of T(z): mean prediction of fresh probe trees.

    Probe trees replicate the model's tree protocol (same subsampling,
    feature pools and score noise, and the train side only for adaptive
    models) at the model's current scores.
    """
    z = _current_scores(model, X)
    fit_rows = getattr(model, "train_indices_", None)
    if fit_rows is None:
        fit_rows = np.arange(X.shape[0], dtype=np.int64)
    seeds = [rng.randint(MAX_SEED) for _ in range(n_probe_trees)]

    def probe(seed):
        trng = np.random.RandomState(seed)
        if model.noise_sigma > 0:
            z_probe = z + trng.normal(0.0, model.noise_sigma, z.shape[0])
        else:
            z_probe = z
        g = model.loss_.negative_gradient(y, z_probe, groups)
        tree = model._grow_one(X, g, fit_rows, trng)
        return tree.predict(X)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            predictions = list(pool.map(probe, seeds))
    else:
        predictions = [probe(seed) for seed in seeds]
    return np.mean(predictions, axis=0)


def fixed_point_residual(model, X, y, query_groups=None, n_probe_trees=32,
                         random_state=None, n_jobs=1):
    """Estimate ||z - c * T(z)||_2 for a fitted capacity-averaged model.

    ``X`` and ``y`` must be the training data; the scores kept from
    training are used when available and recomputed otherwise.
    """
    if n_probe_trees < 1:
        raise ValueError("n_probe_trees must be >= 1")
    if getattr(model, "mode_", None) not in ("infinite", "infinite_adaptive"):
        raise ValueError("fixed-point residual requires a capacity-averaged model")
    X = check_feature_matrix(X, n_features=model.n_features_in_)
    y = check_targets(y, X.shape[0])
    groups = None
    if query_groups is not None:
        groups = check_query_groups(query_groups, X.shape[0])
    rng = check_random_state(random_state)
    z = _current_scores(model, X)
    t_hat = average_probe_prediction(
        model, X, y, groups, n_probe_trees, rng, n_jobs=n_jobs
    )
    if model.capacity_trace_.shape[0]:
        capacity = model.capacity_trace_[-1]
    else:  # no trees yet: fall back to the configured / adapted capacity
        capacity = model.capacity_
    residual = float(np.linalg.norm(z - capacity * t_hat))
    return FixedPointReport(residual, n_probe_trees, float(np.linalg.norm(z)))


def regularized_objective(y, z, capacity, loss, query_groups=None):
    """||z||^2 / 2 + capacity * total loss at scores z."""
    z = np.asarray(z, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != z.shape[0]:
        raise ValueError(
            f"scores length {z.shape[0]} != targets length {y.shape[0]}"
        )
    return float(0.5 * np.dot(z, z) + capacity * loss(y, z, query_groups))


def convergence_trace(model, X, y, query_groups=None, probe_every=10,
                      n_probe_trees=32, random_state=None, n_jobs=1,
                      csv_path=None):
    """Train a clone of ``model`` while recording fixed-point diagnostics.

    Every ``probe_every`` iterations the residual ||z - c T(z)||, the
    regularized objective and the capacity in effect are recorded. Returns
    the rows and optionally writes them as CSV.
    """
    if probe_every < 1:
        raise ValueError("probe_every must be >= 1")
    rng = check_random_state(random_state)
    rows = []

    def monitor(m, estimator):
        if m % probe_every != 0 and m != estimator.n_estimators:
            return
        z = estimator.train_scores_
        capacity = estimator.capacity_trace_[m - 1]
        t_hat = average_probe_prediction(
            estimator, X, y, query_groups, n_probe_trees, rng, n_jobs=n_jobs
        )
        residual = float(np.linalg.norm(z - capacity * t_hat))
        objective = regularized_objective(
            y, z, capacity, estimator.loss_, query_groups
        )
        rows.append(TraceRow(m, residual, objective, float(capacity)))

    trained = clone(model)
    trained.random_state = model.random_state
    trained.fit(X, y, query_groups=query_groups, monitor=monitor)
    if csv_path is not None:
        write_trace_csv(rows, csv_path)
    return rows


def write_trace_csv(rows, path):
    lines = [TRACE_HEADER]
    for row in rows:
        lines.append(
            f"{row.iteration},{row.residual!r},{row.objective!r},{row.capacity!r}"
        )
    write_atomic(path, "\n".join(lines) + "\n")
