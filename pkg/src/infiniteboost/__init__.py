"""Decision-tree ensembles built around capacity-scaled tree averaging.

The central estimator is :class:`InfiniteBoost`, a boosting/random-forest
hybrid: trees are fitted to the negative loss gradient as in gradient
boosting, but the model is a capacity-scaled weighted average of trees, so
the per-tree contribution decays and the ensemble converges instead of
over-fitting as it grows. :class:`GradientBoosting` and
:class:`RandomForest` provide the two classical baselines on the same tree
primitive, and the ``infiniteboost`` command line wraps training,
prediction, metric evaluation, learning curves and fixed-point diagnostics.
"""

from ._validation import NumericError
from .datasets import (
    DataError,
    Dataset,
    HoldoutSplit,
    load_csv,
    load_libsvm,
    save_csv,
    split_holdout,
)
from .diagnostics import (
    FixedPointReport,
    convergence_trace,
    fixed_point_residual,
    regularized_objective,
)
from .ensemble import (
    GradientBoosting,
    InfiniteBoost,
    RandomForest,
    adapt_capacity,
    effective_capacity,
    eta_schedule,
    tree_weight,
)
from .losses import (
    LogisticLoss,
    PairwiseRankingLoss,
    SquaredError,
    clip_gradient,
    make_loss,
)
from .metrics import MetricResult, evaluate_metric, mse, ndcg_at_k, roc_auc
from .model_io import load_model, save_model
from .tree import RegressionTree, Tree

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "Dataset",
    "FixedPointReport",
    "GradientBoosting",
    "HoldoutSplit",
    "InfiniteBoost",
    "LogisticLoss",
    "MetricResult",
    "NumericError",
    "PairwiseRankingLoss",
    "RandomForest",
    "RegressionTree",
    "SquaredError",
    "Tree",
    "adapt_capacity",
    "clip_gradient",
    "convergence_trace",
    "effective_capacity",
    "eta_schedule",
    "evaluate_metric",
    "fixed_point_residual",
    "load_csv",
    "load_libsvm",
    "load_model",
    "make_loss",
    "mse",
    "ndcg_at_k",
    "regularized_objective",
    "roc_auc",
    "save_csv",
    "save_model",
    "split_holdout",
    "tree_weight",
    "__version__",
]
