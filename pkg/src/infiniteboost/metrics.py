"""Evaluation metrics: MSE, ROC-AUC and NDCG@k."""

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from ._validation import group_slices


@dataclass(frozen=True)
class MetricResult:
    name: str
    value: float
    n: int  # samples (mse, auc) or queries (ndcg)


def mse(y_true, y_pred):
    """Mean squared error."""
    y_true = np.asarray(y_true, dtype=np.float64).ravel()
    y_pred = np.asarray(y_pred, dtype=np.float64).ravel()
    if y_true.shape[0] == 0:
        raise ValueError("mse of empty input")
    if y_true.shape[0] != y_pred.shape[0]:
        raise ValueError(
            f"length mismatch: {y_true.shape[0]} targets, "
            f"{y_pred.shape[0]} predictions"
        )
    d = y_true - y_pred
    return float(np.dot(d, d) / d.shape[0])


def roc_auc(labels, scores):
    """Probability that a random positive outranks a random negative.

    Computed from midranks, so tied scores count one half; the result is
    exactly the pair-counting statistic.
    """
    labels = np.asarray(labels, dtype=np.float64).ravel()
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if labels.shape[0] != scores.shape[0]:
        raise ValueError(
            f"length mismatch: {labels.shape[0]} labels, "
            f"{scores.shape[0]} scores"
        )
    values = np.unique(labels)
    if not (np.isin(values, (0.0, 1.0)).all()
            or np.isin(values, (-1.0, 1.0)).all()):
        raise ValueError("roc_auc expects binary labels in {0,1} or {-1,+1}")
    positive = labels == 1
    n_pos = int(positive.sum())
    n_neg = labels.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs both classes present")
    ranks = rankdata(scores)
    rank_sum = float(ranks[positive].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def _dcg(grades, k):
    top = grades[:k]
    gains = 2.0 ** top - 1.0
    discounts = 1.0 / np.log2(np.arange(2, top.shape[0] + 2))
    total = 0.0
    for g, d in zip(gains, discounts):  # sequential sum, order-stable
        total += g * d
    return total


def ndcg_at_k(grades, scores, query_groups, k=10):
    """Mean NDCG@k over queries, gain 2^grade - 1, discount 1/log2(rank+1).

    Ties are broken by original index; queries whose ideal DCG is zero
    contribute 1.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    grades = np.asarray(grades, dtype=np.float64).ravel()
    scores = np.asarray(scores, dtype=np.float64).ravel()
    qid = np.asarray(query_groups, dtype=np.int64).ravel()
    if not (grades.shape[0] == scores.shape[0] == qid.shape[0]):
        raise ValueError("grades, scores and query groups must align")
    values = []
    for start, end in group_slices(qid):
        g = grades[start:end]
        s = scores[start:end]
        order = np.argsort(-s, kind="stable")
        ideal = _dcg(np.sort(g)[::-1], k)
        if ideal == 0.0:
            values.append(1.0)
        else:
            values.append(_dcg(g[order], k) / ideal)
    if not values:
        raise ValueError("no query groups")
    return float(np.mean(values))


def evaluate_metric(name, y_true, scores, query_groups=None):
    """Evaluate a metric by CLI name ('mse', 'auc' or 'ndcg@K')."""
    if name == "mse":
        return MetricResult("mse", mse(y_true, scores), len(scores))
    if name == "auc":
        return MetricResult("auc", roc_auc(y_true, scores), len(scores))
    if name == "ndcg" or name.startswith("ndcg@"):
        k = 10
        if "@" in name:
            try:
                k = int(name.split("@", 1)[1])
            except ValueError:
                raise ValueError(f"bad NDCG cutoff in {name!r}") from None
        if query_groups is None:
            raise ValueError("ndcg requires query groups in the dataset")
        qid = np.asarray(query_groups)
        n_queries = len(group_slices(qid.astype(np.int64)))
        return MetricResult(
            f"ndcg@{k}", ndcg_at_k(y_true, scores, qid, k), n_queries
        )
    raise ValueError(f"unknown metric {name!r}; use mse, auc or ndcg@K")
