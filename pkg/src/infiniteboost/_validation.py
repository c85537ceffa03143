"""Input validation helpers shared by every estimator and loader."""

import numpy as np


class NumericError(RuntimeError):
    """Raised when training or evaluation produces non-finite numbers."""


def check_feature_matrix(X, n_features=None):
    """Return ``X`` as a C-contiguous float64 2-D array of finite values.

    ``n_features``, when given, is enforced against the second axis and a
    mismatch names both counts (model side first).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ValueError(f"feature matrix must be 2-D, got {X.ndim}-D")
    if X.shape[0] == 0:
        raise ValueError("feature matrix has no samples")
    if not np.isfinite(X).all():
        raise ValueError("feature matrix contains NaN or infinite values")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(
            f"expected {n_features} features, got {X.shape[1]}"
        )
    return X


def check_targets(y, n_samples):
    y = np.ascontiguousarray(y, dtype=np.float64).ravel()
    if y.shape[0] != n_samples:
        raise ValueError(
            f"targets have length {y.shape[0]}, expected {n_samples}"
        )
    if not np.isfinite(y).all():
        raise ValueError("targets contain NaN or infinite values")
    return y


def check_binary_labels(y):
    """Accept {0,1} or {-1,+1} labels and return them mapped to {-1,+1}."""
    values = np.unique(y)
    if np.isin(values, (0.0, 1.0)).all():
        return np.where(y > 0, 1.0, -1.0)
    if np.isin(values, (-1.0, 1.0)).all():
        return y.astype(np.float64)
    raise ValueError(
        "binary labels must lie in {0,1} or {-1,+1}, got values "
        f"{values[:8].tolist()}"
    )


def check_query_groups(query_groups, n_samples):
    """Validate per-sample query ids: right length, contiguous blocks."""
    qid = np.ascontiguousarray(query_groups, dtype=np.int64).ravel()
    if qid.shape[0] != n_samples:
        raise ValueError(
            f"query groups have length {qid.shape[0]}, expected {n_samples}"
        )
    seen = set()
    previous = None
    for q in qid:
        if q != previous:
            if q in seen:
                raise ValueError(f"query group {q} is not contiguous")
            seen.add(q)
            previous = q
    return qid


def group_slices(qid):
    """Boundaries of contiguous query blocks as (start, end) pairs."""
    if qid.shape[0] == 0:
        return []
    cuts = np.flatnonzero(np.diff(qid)) + 1
    starts = np.concatenate(([0], cuts))
    ends = np.concatenate((cuts, [qid.shape[0]]))
    return list(zip(starts.tolist(), ends.tolist()))


def check_finite_scores(z):
    if not np.isfinite(z).all():
        raise NumericError("ensemble scores became non-finite during training")
