"""Depth-limited regression trees with row and per-node feature subsampling.

The growth rules live in :mod:`infiniteboost._tree_kernel`; this module owns
the randomness protocol, which is deliberately simple so an independent
re-implementation can reproduce a tree from the same seed:

1. optionally (boosting with score noise) draw ``rng.normal(0, sigma, n)``;
2. draw the row sample: with replacement ``rng.randint(0, n_avail, n_avail)``
   (bootstrap), without replacement ``rng.permutation(n_avail)[:k]`` with
   ``k = ceil(subsample * n_avail)``; ``subsample == 1`` without bootstrap
   consumes no draw. Rows are then sorted ascending;
3. when ``max_features < 1``, draw one uniform matrix of shape
   ``(node_capacity, n_features)`` and take per row the first
   ``ceil(max_features * n_features)`` entries of its argsort, sorted
   ascending; row ``i`` is the candidate feature set of tree node ``i``
   (depth-first preorder numbering).
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils import check_random_state

from . import _tree_kernel
from ._validation import check_feature_matrix, check_targets

_EMPTY_POOL = np.empty((0, 0), dtype=np.int64)


class Tree:
    """A fitted axis-aligned binary regression tree in flat-array form.

    Routing sends a sample left iff ``x[feature] <= threshold``; leaves are
    marked by ``feature == -1`` and carry the mean training target of the
    samples that reached them.
    """

    __slots__ = ("feature", "threshold", "left", "right", "value",
                 "max_depth_used", "n_features")

    def __init__(self, feature, threshold, left, right, value,
                 max_depth_used, n_features):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value
        self.max_depth_used = max_depth_used
        self.n_features = n_features

    @property
    def n_nodes(self):
        return self.feature.shape[0]

    def predict(self, X):
        X = check_feature_matrix(X, n_features=self.n_features)
        out = np.empty(X.shape[0], dtype=np.float64)
        _tree_kernel.predict_kernel(
            self.feature, self.threshold, self.left, self.right, self.value,
            X, out,
        )
        return out

    def to_dict(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "max_depth_used": int(self.max_depth_used),
        }

    @classmethod
    def from_dict(cls, data, n_features):
        return cls(
            np.asarray(data["feature"], dtype=np.int64),
            np.asarray(data["threshold"], dtype=np.float64),
            np.asarray(data["left"], dtype=np.int64),
            np.asarray(data["right"], dtype=np.int64),
            np.asarray(data["value"], dtype=np.float64),
            int(data["max_depth_used"]),
            n_features,
        )


def node_capacity(n_rows, max_depth, min_samples_leaf):
    """Upper bound on the node count of a tree grown under these limits."""
    leaves = max(1, n_rows // max(1, min_samples_leaf))
    if max_depth is not None and max_depth < 60:
        leaves = min(leaves, 2 ** max_depth)
    return 2 * leaves


def sample_rows(rng, candidates, subsample, bootstrap):
    """Draw the per-tree row sample from ``candidates`` (sorted ascending)."""
    n = candidates.shape[0]
    if bootstrap:
        rows = candidates[rng.randint(0, n, n)]
    elif subsample >= 1.0:
        return candidates
    else:
        k = int(np.ceil(subsample * n))
        rows = candidates[rng.permutation(n)[:k]]
    return np.sort(rows)


def sample_feature_pool(rng, n_features, max_features, capacity):
    """Pre-draw per-node candidate feature subsets; empty pool means all."""
    k = int(np.ceil(max_features * n_features))
    if k >= n_features:
        return _EMPTY_POOL
    u = rng.random_sample((capacity, n_features))
    pool = np.argsort(u, axis=1)[:, :k].astype(np.int64)
    pool.sort(axis=1)
    return np.ascontiguousarray(pool)


def grow_tree(X, targets, rows, feat_pool, max_depth, min_samples_leaf):
    """Grow one tree on ``(X[rows], targets[rows])``; pure given its inputs."""
    if rows.shape[0] == 0:
        raise ValueError("no samples left after subsampling")
    depth_limit = _tree_kernel.UNLIMITED_DEPTH if max_depth is None else int(max_depth)
    cap = node_capacity(rows.shape[0], max_depth, min_samples_leaf)
    if feat_pool.shape[0] and feat_pool.shape[0] < cap:
        raise ValueError(
            f"feature pool has {feat_pool.shape[0]} rows, tree may need {cap}"
        )
    feature = np.empty(cap, dtype=np.int64)
    threshold = np.empty(cap, dtype=np.float64)
    left = np.empty(cap, dtype=np.int64)
    right = np.empty(cap, dtype=np.int64)
    value = np.empty(cap, dtype=np.float64)
    counts = np.zeros(2, dtype=np.int64)
    _tree_kernel.grow_kernel(
        X, targets, rows, feat_pool, depth_limit, int(min_samples_leaf),
        feature, threshold, left, right, value, counts,
    )
    n = int(counts[0])
    return Tree(
        feature[:n].copy(), threshold[:n].copy(), left[:n].copy(),
        right[:n].copy(), value[:n].copy(), int(counts[1]), X.shape[1],
    )


class RegressionTree(BaseEstimator):
    """Single regression tree fit by exact greedy variance reduction.

    Parameters
    ----------
    max_depth : int or None
        Depth limit; ``None`` grows until nodes are pure or too small and
        ``0`` yields a single leaf.
    subsample : float in (0, 1]
        Fraction of rows drawn (without replacement) for the fit.
    max_features : float in (0, 1]
        Fraction of features considered at each node, resampled per node.
    min_samples_leaf : int
        Minimum sample count in each child of an accepted split.
    bootstrap : bool
        Draw ``n`` rows with replacement instead of subsampling.
    random_state : int, RandomState or None
        Seed for the sampling protocol described in the module docstring.
    """

    def __init__(self, max_depth=None, subsample=1.0, max_features=1.0,
                 min_samples_leaf=1, bootstrap=False, random_state=None):
        self.max_depth = max_depth
        self.subsample = subsample
        self.max_features = max_features
        self.min_samples_leaf = min_samples_leaf
        self.bootstrap = bootstrap
        self.random_state = random_state

    def _check_params(self):
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0 or None")
        if not 0.0 < self.subsample <= 1.0:
            raise ValueError("subsample must lie in (0, 1]")
        if not 0.0 < self.max_features <= 1.0:
            raise ValueError("max_features must lie in (0, 1]")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")

    def fit(self, X, y):
        self._check_params()
        X = check_feature_matrix(X)
        y = check_targets(y, X.shape[0])
        rng = check_random_state(self.random_state)
        rows = sample_rows(
            rng, np.arange(X.shape[0], dtype=np.int64),
            self.subsample, self.bootstrap,
        )
        pool = sample_feature_pool(
            rng, X.shape[1], self.max_features,
            node_capacity(rows.shape[0], self.max_depth, self.min_samples_leaf),
        )
        self.tree_ = grow_tree(
            X, y, rows, pool, self.max_depth, self.min_samples_leaf,
        )
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        return self.tree_.predict(X)
