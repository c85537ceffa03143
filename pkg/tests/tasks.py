"""Synthetic tasks shared by the test modules."""

import numpy as np


def binary_task(n, seed, d=10, flip=0.1):
    """Deterministically separable labels with a fraction of flips."""
    rng = np.random.RandomState(seed)
    X = rng.uniform(-1.0, 1.0, (n, d))
    margin = np.sin(3.0 * X[:, 0]) + 2.0 * X[:, 1] * X[:, 2] + 0.5 * X[:, 3]
    y = (margin > 0).astype(np.float64)
    flips = rng.rand(n) < flip
    y[flips] = 1.0 - y[flips]
    return X, y


def regression_task(n, seed, d=8, noise=0.5):
    rng = np.random.RandomState(seed)
    X = rng.uniform(0.0, 1.0, (n, d))
    y = (
        10.0 * np.sin(np.pi * X[:, 0] * X[:, 1])
        + 20.0 * (X[:, 2] - 0.5) ** 2
        + 10.0 * X[:, 3]
        + 5.0 * X[:, 4]
    )
    return X, y + noise * rng.normal(size=n)


def ranking_task(n_queries, seed, d=5, group_size=8):
    """Grades in {0,1,2} driven by a linear score plus noise."""
    rng = np.random.RandomState(seed)
    n = n_queries * group_size
    X = rng.uniform(-1.0, 1.0, (n, d))
    raw = X[:, 0] + 0.5 * X[:, 1] + 0.2 * rng.normal(size=n)
    grades = np.digitize(raw, [-0.4, 0.6]).astype(np.float64)
    qid = np.repeat(np.arange(n_queries), group_size)
    return X, grades, qid
