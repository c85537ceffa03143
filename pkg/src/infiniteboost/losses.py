"""Differentiable training losses and their negative gradients.

Each loss maps (targets, scores) to a total loss value and exposes the
per-sample negative gradient that the next tree is fitted to. Gradients can
be clamped to a large threshold so the tree targets stay bounded even for
unbounded losses; the logistic gradient is already bounded and is left
unclamped by default.
"""

import numpy as np
from scipy.special import expit

from ._validation import check_binary_labels, group_slices

#: magnitude cap applied by default to unbounded gradients
DEFAULT_CLIP = 1e4


def clip_gradient(gradient, threshold):
    """Clamp each component to ``[-threshold, threshold]``, keeping signs."""
    if threshold <= 0:
        raise ValueError("clip threshold must be positive")
    return np.clip(gradient, -threshold, threshold)


class BaseLoss:
    """Shared clipping plumbing; subclasses do the actual math."""

    name = None
    default_clip = DEFAULT_CLIP
    needs_groups = False

    def __init__(self, clip_threshold="auto"):
        if clip_threshold == "auto":
            clip_threshold = self.default_clip
        if clip_threshold is not None and clip_threshold <= 0:
            raise ValueError("clip threshold must be positive")
        self.clip_threshold = clip_threshold

    def _check(self, y, scores, groups):
        y = np.asarray(y, dtype=np.float64).ravel()
        scores = np.asarray(scores, dtype=np.float64).ravel()
        if y.shape[0] != scores.shape[0]:
            raise ValueError(
                f"scores length {scores.shape[0]} != targets length {y.shape[0]}"
            )
        if self.needs_groups and groups is None:
            raise ValueError(f"{self.name} loss requires query groups")
        return y, scores

    def __call__(self, y, scores, groups=None):
        y, scores = self._check(y, scores, groups)
        return self._value(y, scores, groups)

    def negative_gradient(self, y, scores, groups=None):
        y, scores = self._check(y, scores, groups)
        g = self._negative_gradient(y, scores, groups)
        if self.clip_threshold is not None:
            g = clip_gradient(g, self.clip_threshold)
        return g


class SquaredError(BaseLoss):
    """L(y, F) = (y - F)^2 / 2, so the negative gradient is the residual."""

    name = "squared_error"

    def _value(self, y, scores, groups):
        d = y - scores
        return 0.5 * float(np.dot(d, d))

    def _negative_gradient(self, y, scores, groups):
        return y - scores


class LogisticLoss(BaseLoss):
    """Binary log-loss over labels in {0,1} (or {-1,+1}).

    L(y, F) = log(1 + exp(-y F)) with y in {-1,+1}; the negative gradient
    y / (1 + exp(y F)) lies strictly inside (-1, 1) for all representable
    scores, so no clipping is applied by default.
    """

    name = "logistic"
    default_clip = None

    def _value(self, y, scores, groups):
        margin = check_binary_labels(y) * scores
        return float(np.logaddexp(0.0, -margin).sum())

    def _negative_gradient(self, y, scores, groups):
        signed = check_binary_labels(y)
        return signed * expit(-signed * scores)


class PairwiseRankingLoss(BaseLoss):
    """Logistic pairwise surrogate over in-group pairs with unequal grades.

    For each query and each pair (i, j) with grade_i > grade_j the pair loss
    is log(1 + exp(-(F_i - F_j))); its gradient pushes F_i up and F_j down
    by the same amount, so gradients sum to zero within every query.
    """

    name = "pairwise_rank"
    needs_groups = True

    def _value(self, y, scores, groups):
        total = 0.0
        for start, end in group_slices(np.asarray(groups, dtype=np.int64)):
            r = y[start:end]
            s = scores[start:end]
            preferred = r[:, None] > r[None, :]
            if not preferred.any():
                continue
            margins = s[:, None] - s[None, :]
            total += float(np.logaddexp(0.0, -margins[preferred]).sum())
        return total

    def _negative_gradient(self, y, scores, groups):
        g = np.zeros_like(scores)
        for start, end in group_slices(np.asarray(groups, dtype=np.int64)):
            r = y[start:end]
            s = scores[start:end]
            preferred = r[:, None] > r[None, :]
            if not preferred.any():
                continue
            # pull[i, j] = sigma(F_j - F_i) where i is preferred over j
            pull = expit(s[None, :] - s[:, None]) * preferred
            g[start:end] = pull.sum(axis=1) - pull.sum(axis=0)
        return g


_LOSSES = {
    "squared_error": SquaredError,
    "mse": SquaredError,
    "logistic": LogisticLoss,
    "logloss": LogisticLoss,
    "pairwise_rank": PairwiseRankingLoss,
    "rank": PairwiseRankingLoss,
}


def make_loss(kind, clip_threshold="auto"):
    """Instantiate a loss by name; names match the CLI ``--loss`` values."""
    try:
        cls = _LOSSES[kind]
    except KeyError:
        raise ValueError(
            f"unknown loss {kind!r}; choose from mse, logloss, rank"
        ) from None
    return cls(clip_threshold=clip_threshold)
