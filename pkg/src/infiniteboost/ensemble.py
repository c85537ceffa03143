"""Tree-ensemble estimators: gradient boosting, InfiniteBoost, random forest.

All three share the same tree primitive and sampling protocol and differ in
how tree outputs are aggregated:

- gradient boosting: ``F(x) = shrinkage * sum_k tree_k(x)``;
- InfiniteBoost: ``F(x) = c * sum_k alpha_k tree_k(x) / sum_k alpha_k``, a
  capacity-scaled weighted average whose per-tree contribution decays to
  zero, so the score vector converges to a fixed point instead of growing;
- random forest: plain average of independently grown trees.

During InfiniteBoost training the unscaled weighted average ``u`` is
maintained incrementally via ``u <- (1 - eta_m) u + eta_m tree_m`` and the
training scores are ``z = c_m u`` with ``c_m`` the capacity in effect at
iteration ``m``. Keeping the capacity outside the recursion makes the
incremental state agree with a direct evaluation of the stored ensemble to
float precision in every mode, including adaptive capacity.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_is_fitted

from ._validation import (
    check_binary_labels,
    check_feature_matrix,
    check_finite_scores,
    check_query_groups,
    check_targets,
)
from .datasets import split_indices
from .losses import make_loss
from .tree import grow_tree, node_capacity, sample_feature_pool, sample_rows

MAX_SEED = 2**31 - 1
WEIGHTINGS = ("uniform", "linear")

#: adaptive capacity is kept inside these bounds as a runaway guard
CAPACITY_MIN = 1e-4
CAPACITY_MAX = 1e4

#: starting capacity of the adaptive schedule
INITIAL_ADAPTIVE_CAPACITY = 0.5


def eta_schedule(weighting, m):
    """Step size of iteration ``m``: 1/m (uniform) or 2/(m+1) (linear)."""
    if m < 1:
        raise ValueError("iteration index starts at 1")
    if weighting == "uniform":
        return 1.0 / m
    if weighting == "linear":
        return 2.0 / (m + 1)
    raise ValueError(f"unknown weighting {weighting!r}; use uniform or linear")


def tree_weight(weighting, m):
    """Ensemble weight alpha_m implied by the step-size schedule."""
    if m < 1:
        raise ValueError("iteration index starts at 1")
    if weighting == "uniform":
        return 1.0
    if weighting == "linear":
        return float(m)
    raise ValueError(f"unknown weighting {weighting!r}; use uniform or linear")


def effective_capacity(capacity, eta_m):
    """Capacity after the over-stepping guard: min(c, 1/eta_m).

    Guarantees the multiplier ``eta_m * c_eff`` of a single tree never
    exceeds one, which matters only in the first iterations where eta is
    large.
    """
    if capacity <= 0:
        raise ValueError("capacity must be positive")
    if not 0.0 < eta_m <= 1.0:
        raise ValueError("eta_m must lie in (0, 1]")
    return min(capacity, 1.0 / eta_m)


def adapt_capacity(capacity, m, sign):
    """Minor multiplicative correction c * ((m+1)/m)**sign, sign in {-1,0,1}.

    ``sign`` is the sign of the holdout correlation between scores and
    negative gradients (0 leaves the capacity unchanged); the result is
    clamped to a wide guard interval against runaway updates.
    """
    if m < 1:
        raise ValueError("iteration index starts at 1")
    return float(np.clip(
        capacity * ((m + 1) / m) ** sign, CAPACITY_MIN, CAPACITY_MAX
    ))


class BaseTreeEnsemble(BaseEstimator):
    """Shared fitting and prediction machinery; use the concrete classes."""

    def _loss(self):
        return make_loss(self.loss, clip_threshold=self.clip_threshold)

    def _check_common_params(self):
        if self.n_estimators < 0:
            raise ValueError("n_estimators must be >= 0")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0 or None")
        if not 0.0 < self.subsample <= 1.0:
            raise ValueError("subsample must lie in (0, 1]")
        if not 0.0 < self.max_features <= 1.0:
            raise ValueError("max_features must lie in (0, 1]")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")

    def _check_training_inputs(self, X, y, query_groups, loss):
        X = check_feature_matrix(X)
        y = check_targets(y, X.shape[0])
        groups = None
        if query_groups is not None:
            groups = check_query_groups(query_groups, X.shape[0])
        if loss.needs_groups and groups is None:
            raise ValueError("pairwise ranking loss requires query_groups")
        if loss.name == "logistic":
            check_binary_labels(y)
        if loss.name == "pairwise_rank" and (y < 0).any():
            raise ValueError("relevance grades must be nonnegative")
        return X, y, groups

    def _grow_one(self, X, g, fit_rows, trng):
        rows = sample_rows(trng, fit_rows, self.subsample, self.bootstrap)
        pool = sample_feature_pool(
            trng, X.shape[1], self.max_features,
            node_capacity(rows.shape[0], self.max_depth, self.min_samples_leaf),
        )
        return grow_tree(
            X, g, rows, pool, self.max_depth, self.min_samples_leaf
        )

    # -- prediction ------------------------------------------------------

    def _raw_predict(self, X):
        n = X.shape[0]
        if len(self.trees_) == 0:
            return np.zeros(n)
        if self.mode_ == "forest":
            # summing in per-sample sorted order makes the mean exactly
            # invariant to the order the trees are stored in
            stacked = np.stack([tree.predict(X) for tree in self.trees_])
            stacked.sort(axis=0)
            return stacked.sum(axis=0) / len(self.trees_)
        acc = np.zeros(n)
        if self.mode_ == "gb":
            for tree in self.trees_:
                acc += tree.predict(X)
            return self.learning_rate * acc
        for w, tree in zip(self.tree_weights_, self.trees_):
            acc += w * tree.predict(X)
        return self.capacity_trace_[-1] * acc / self.tree_weights_.sum()

    def predict(self, X):
        """Ensemble scores F(x), aggregated according to the mode."""
        check_is_fitted(self, "trees_")
        X = check_feature_matrix(X, n_features=self.n_features_in_)
        return self._raw_predict(X)

    def staged_predict(self, X, step=1):
        """Yield ``(k, F_k(x))`` for ensembles truncated to k trees.

        ``k`` runs over the multiples of ``step`` up to the tree count,
        always including the full ensemble; truncated evaluation uses the
        weight normalization and the capacity in effect at iteration ``k``.
        """
        if step < 1:
            raise ValueError("step must be >= 1")
        check_is_fitted(self, "trees_")
        X = check_feature_matrix(X, n_features=self.n_features_in_)
        n_trees = len(self.trees_)
        if n_trees == 0:
            return
        marks = set(range(step, n_trees + 1, step))
        marks.add(n_trees)
        acc = np.zeros(X.shape[0])
        weight_sum = 0.0
        history = [] if self.mode_ == "forest" else None
        for k in range(1, n_trees + 1):
            t = self.trees_[k - 1].predict(X)
            if self.mode_ == "gb":
                acc += t
                if k in marks:
                    yield k, self.learning_rate * acc
            elif self.mode_ == "forest":
                history.append(t)
                if k in marks:
                    # canonical sorted sum, matching predict() bit for bit
                    stacked = np.stack(history)
                    stacked.sort(axis=0)
                    yield k, stacked.sum(axis=0) / k
            else:
                w = self.tree_weights_[k - 1]
                acc += w * t
                weight_sum += w
                if k in marks:
                    yield k, self.capacity_trace_[k - 1] * acc / weight_sum

    def predict_proba(self, X):
        """Probability of the positive class for logistic-loss models."""
        check_is_fitted(self, "trees_")
        if self._loss().name != "logistic":
            raise ValueError("predict_proba requires loss='logistic'")
        scores = self.predict(X)
        if self.mode_ == "forest":
            # forest leaves already average {0,1} labels
            return scores
        return expit(scores)

    # -- boosting loop (gb and both infinite modes) ----------------------

    def _boost(self, X, y, groups, loss, mode, monitor):
        n, d = X.shape
        rng = check_random_state(self.random_state)
        adaptive = mode == "infinite_adaptive"
        if adaptive:
            split_seed = rng.randint(MAX_SEED)
            split = split_indices(
                n, self.holdout_fraction, split_seed, query_groups=groups
            )
            fit_rows = np.asarray(split.train_indices, dtype=np.int64)
            holdout = np.asarray(split.holdout_indices, dtype=np.int64)
            self.train_indices_ = fit_rows
            self.holdout_indices_ = holdout
            self.initial_capacity_ = INITIAL_ADAPTIVE_CAPACITY
            capacity = INITIAL_ADAPTIVE_CAPACITY
        else:
            fit_rows = np.arange(n, dtype=np.int64)
            capacity = None if mode == "gb" else float(self.capacity)

        n_rounds = self.n_estimators
        trees = []
        weights = np.zeros(n_rounds)
        trace = np.zeros(0) if mode == "gb" else np.zeros(n_rounds)
        z = np.zeros(n)
        u = np.zeros(n)

        self.mode_ = mode
        self.trees_ = trees
        self.loss_ = loss

        for m in range(1, n_rounds + 1):
            trng = np.random.RandomState(rng.randint(MAX_SEED))
            if self.noise_sigma > 0:
                z_for_gradient = z + trng.normal(0.0, self.noise_sigma, n)
            else:
                z_for_gradient = z
            g = loss.negative_gradient(y, z_for_gradient, groups)
            tree = self._grow_one(X, g, fit_rows, trng)
            t = tree.predict(X)

            if mode == "gb":
                z = z + self.learning_rate * t
                weights[m - 1] = 1.0
            else:
                eta = eta_schedule(self.weighting, m)
                u = (1.0 - eta) * u + eta * t
                c_used = effective_capacity(capacity, eta)
                z = c_used * u
                weights[m - 1] = tree_weight(self.weighting, m)
                trace[m - 1] = c_used
                if adaptive:
                    g_now = loss.negative_gradient(y, z, groups)
                    sign = float(np.sign(np.dot(g_now[holdout], z[holdout])))
                    capacity = adapt_capacity(capacity, m, sign)
            trees.append(tree)
            check_finite_scores(z)

            self.tree_weights_ = weights[:m]
            self.capacity_trace_ = trace[:m] if mode != "gb" else trace
            self.train_scores_ = z
            self.capacity_ = capacity
            if monitor is not None:
                monitor(m, self)

        self.tree_weights_ = weights
        self.capacity_trace_ = trace
        self.train_scores_ = z
        self.capacity_ = capacity
        return self


class GradientBoosting(BaseTreeEnsemble):
    """Stochastic gradient boosting with a constant shrinkage.

    Starting from F(x) = 0, each iteration fits a regression tree to the
    negative gradient of the loss at the current scores and adds it scaled
    by ``learning_rate``. Large iteration counts will over-fit; that is the
    baseline behaviour the capacity-averaged variant removes.

    Parameters
    ----------
    loss : {'squared_error', 'logistic', 'pairwise_rank'}
        Training loss ('mse', 'logloss' and 'rank' are accepted aliases).
    n_estimators : int
        Number of boosting iterations M.
    learning_rate : float
        Shrinkage applied to every tree.
    subsample, max_features, max_depth, min_samples_leaf, bootstrap
        Tree randomization, see :class:`infiniteboost.tree.RegressionTree`.
    clip_threshold : float, None or 'auto'
        Cap on gradient magnitudes; 'auto' keeps the per-loss default.
    noise_sigma : float
        Optional Gaussian noise added to the scores before each gradient
        evaluation (a smoothing device for experiments; off by default).
    random_state : int, RandomState or None
        Master seed; each iteration derives one tree seed from it.
    """

    def __init__(self, loss="squared_error", n_estimators=100,
                 learning_rate=0.1, subsample=0.7, max_features=0.7,
                 max_depth=7, min_samples_leaf=1, bootstrap=False,
                 clip_threshold="auto", noise_sigma=0.0, random_state=None):
        self.loss = loss
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.subsample = subsample
        self.max_features = max_features
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.bootstrap = bootstrap
        self.clip_threshold = clip_threshold
        self.noise_sigma = noise_sigma
        self.random_state = random_state

    def fit(self, X, y, query_groups=None, monitor=None):
        self._check_common_params()
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        loss = self._loss()
        X, y, groups = self._check_training_inputs(X, y, query_groups, loss)
        self.n_features_in_ = X.shape[1]
        return self._boost(X, y, groups, loss, "gb", monitor)


class InfiniteBoost(BaseTreeEnsemble):
    """Boosting whose prediction is a capacity-scaled average of trees.

    The model is F(x) = c * (sum_m alpha_m tree_m(x)) / (sum_m alpha_m):
    trees are still fitted to the negative gradient at the current scores,
    but averaging makes each tree's contribution vanish as the ensemble
    grows, so the scores converge to a fixed point and arbitrarily many
    trees can be added without over-fitting. The capacity ``c`` plays the
    role the shrinkage plays in plain boosting and can be tuned on a
    holdout automatically while training.

    Parameters
    ----------
    capacity : positive float or 'adaptive'
        Fixed capacity, or 'adaptive' to start at 0.5 and multiply by
        ((m+1)/m)**s each iteration, s being the sign of the correlation
        between holdout scores and holdout negative gradients.
    weighting : {'linear', 'uniform'}
        Tree weights alpha_m = m (step 2/(m+1)) or alpha_m = 1 (step 1/m).
        Linear weighting adapts faster to capacity changes and is the
        default.
    holdout_fraction : float
        Fraction of the training set set aside to steer the adaptive
        capacity (whole query groups for ranking data). The holdout is not
        merged back after tuning.
    loss, n_estimators, subsample, max_features, max_depth,
    min_samples_leaf, bootstrap, clip_threshold, noise_sigma, random_state
        As in :class:`GradientBoosting`.
    """

    def __init__(self, loss="squared_error", n_estimators=100,
                 capacity="adaptive", weighting="linear",
                 holdout_fraction=0.05, subsample=0.7, max_features=0.7,
                 max_depth=7, min_samples_leaf=1, bootstrap=False,
                 clip_threshold="auto", noise_sigma=0.0, random_state=None):
        self.loss = loss
        self.n_estimators = n_estimators
        self.capacity = capacity
        self.weighting = weighting
        self.holdout_fraction = holdout_fraction
        self.subsample = subsample
        self.max_features = max_features
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.bootstrap = bootstrap
        self.clip_threshold = clip_threshold
        self.noise_sigma = noise_sigma
        self.random_state = random_state

    def _resolve_mode(self):
        if isinstance(self.capacity, str):
            if self.capacity != "adaptive":
                raise ValueError(
                    "capacity must be a positive number or 'adaptive'"
                )
            return "infinite_adaptive"
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")
        return "infinite"

    def fit(self, X, y, query_groups=None, monitor=None):
        self._check_common_params()
        if self.weighting not in WEIGHTINGS:
            raise ValueError(
                f"unknown weighting {self.weighting!r}; use uniform or linear"
            )
        mode = self._resolve_mode()
        if mode == "infinite_adaptive" and not 0.0 < self.holdout_fraction < 1.0:
            raise ValueError("holdout_fraction must lie in (0, 1)")
        loss = self._loss()
        X, y, groups = self._check_training_inputs(X, y, query_groups, loss)
        self.n_features_in_ = X.shape[1]
        return self._boost(X, y, groups, loss, mode, monitor)


class RandomForest(BaseTreeEnsemble):
    """Bagged deep trees fitted independently on the raw targets.

    Prediction is the plain average of the trees. With a logistic loss the
    trees are grown on {0,1} labels, so every leaf holds a class fraction
    and the forest output is an averaged probability rather than a vote.
    """

    def __init__(self, loss="squared_error", n_estimators=100,
                 max_depth=None, subsample=1.0, max_features=1.0,
                 min_samples_leaf=1, bootstrap=True, clip_threshold="auto",
                 random_state=None, n_jobs=1):
        self.loss = loss
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.subsample = subsample
        self.max_features = max_features
        self.min_samples_leaf = min_samples_leaf
        self.bootstrap = bootstrap
        self.clip_threshold = clip_threshold
        self.random_state = random_state
        self.n_jobs = n_jobs

    # forests have no score noise; keep the shared protocol happy
    noise_sigma = 0.0

    def fit(self, X, y, query_groups=None, monitor=None):
        self._check_common_params()
        loss = self._loss()
        X, y, groups = self._check_training_inputs(X, y, query_groups, loss)
        n, d = X.shape
        self.n_features_in_ = d

        y_fit = y
        if loss.name == "logistic":
            y_fit = (check_binary_labels(y) + 1.0) / 2.0

        rng = check_random_state(self.random_state)
        seeds = [rng.randint(MAX_SEED) for _ in range(self.n_estimators)]
        fit_rows = np.arange(n, dtype=np.int64)

        def build(seed):
            return self._grow_one(
                X, y_fit, fit_rows, np.random.RandomState(seed)
            )

        if self.n_jobs > 1 and seeds:
            with ThreadPoolExecutor(max_workers=self.n_jobs) as pool:
                trees = list(pool.map(build, seeds))
        else:
            trees = [build(seed) for seed in seeds]

        self.mode_ = "forest"
        self.loss_ = loss
        self.trees_ = trees
        self.tree_weights_ = np.ones(len(trees))
        self.capacity_trace_ = np.ones(len(trees))
        self.capacity_ = 1.0
        self.train_scores_ = self._raw_predict(X)
        if monitor is not None:
            monitor(len(trees), self)
        return self
