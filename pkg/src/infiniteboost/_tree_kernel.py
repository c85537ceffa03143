"""Numba kernels for exact greedy regression-tree growth and prediction.

A tree is five flat arrays indexed by node id: ``feature`` (-1 marks a
leaf), ``threshold``, ``left``, ``right`` and ``value`` (mean target of the
samples reaching the node). Nodes are numbered in depth-first preorder with
the left child built first, which makes growth reproducible and lets the
per-node feature subsets be pre-drawn as ``feat_pool[node_id]`` outside the
kernel.

Determinism contract (tests rely on it):

- candidate features are scanned in ascending index order and candidate
  thresholds in ascending value order; a split replaces the incumbent only
  on a strictly larger score, so ties keep the lowest feature index and
  then the lowest threshold;
- node means are sequential sums over the node's samples in ascending
  original-row order (partitions are stable, so that order is preserved);
- an impure node splits whenever any boundary between distinct values is
  admissible, even at zero variance reduction (the best split is the one
  minimizing the weighted child variance, ties broken as above).
"""

import numpy as np
from numba import njit

LEAF = -1
UNLIMITED_DEPTH = -1


@njit(cache=True, nogil=True)
def grow_kernel(
    X,
    targets,
    sample_idx,
    feat_pool,
    max_depth,
    min_samples_leaf,
    feature,
    threshold,
    left,
    right,
    value,
    node_count_out,
):
    n_sub = sample_idx.shape[0]
    n_feat = X.shape[1]
    use_pool = feat_pool.shape[0] > 0
    k = feat_pool.shape[1] if use_pool else n_feat

    idx = sample_idx.copy()
    buf = np.empty(n_sub, np.int64)
    vals = np.empty(n_sub, np.float64)

    cap = feature.shape[0]
    # stack rows: start, end, depth, parent, is_left
    stack = np.empty((cap, 5), np.int64)
    sp = 0
    stack[0, 0] = 0
    stack[0, 1] = n_sub
    stack[0, 2] = 0
    stack[0, 3] = -1
    stack[0, 4] = 0
    sp = 1

    n_nodes = 0
    max_depth_used = 0
    while sp > 0:
        sp -= 1
        start = stack[sp, 0]
        end = stack[sp, 1]
        depth = stack[sp, 2]
        parent = stack[sp, 3]
        is_left = stack[sp, 4]

        node = n_nodes
        n_nodes += 1
        if parent >= 0:
            if is_left == 1:
                left[parent] = node
            else:
                right[parent] = node
        if depth > max_depth_used:
            max_depth_used = depth

        count = end - start
        total = 0.0
        gmin = np.inf
        gmax = -np.inf
        for p in range(start, end):
            g = targets[idx[p]]
            total += g
            if g < gmin:
                gmin = g
            if g > gmax:
                gmax = g
        value[node] = total / count
        feature[node] = LEAF
        threshold[node] = 0.0
        left[node] = LEAF
        right[node] = LEAF

        if count < 2 * min_samples_leaf or gmin == gmax:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue

        best_score = -np.inf
        best_feat = -1
        best_thr = 0.0
        for jj in range(k):
            j = feat_pool[node, jj] if use_pool else jj
            for p in range(count):
                vals[p] = X[idx[start + p], j]
            order = np.argsort(vals[:count])
            left_sum = 0.0
            for pos in range(count - 1):
                left_sum += targets[idx[start + order[pos]]]
                a = vals[order[pos]]
                b = vals[order[pos + 1]]
                if a == b:
                    continue
                n_left = pos + 1
                n_right = count - n_left
                if n_left < min_samples_leaf or n_right < min_samples_leaf:
                    continue
                right_sum = total - left_sum
                score = (
                    left_sum * left_sum / n_left
                    + right_sum * right_sum / n_right
                )
                if score > best_score:
                    best_score = score
                    best_feat = j
                    thr = 0.5 * (a + b)
                    if thr >= b:  # midpoint rounded onto the right value
                        thr = a
                    best_thr = thr
        if best_feat < 0:
            continue

        # stable two-pass partition keeps ascending row order in children
        n_left = 0
        for p in range(start, end):
            if X[idx[p], best_feat] <= best_thr:
                buf[n_left] = idx[p]
                n_left += 1
        n_total = n_left
        for p in range(start, end):
            if X[idx[p], best_feat] > best_thr:
                buf[n_total] = idx[p]
                n_total += 1
        for p in range(count):
            idx[start + p] = buf[p]

        feature[node] = best_feat
        threshold[node] = best_thr
        # right child pushed first so the left child is grown next (preorder)
        stack[sp, 0] = start + n_left
        stack[sp, 1] = end
        stack[sp, 2] = depth + 1
        stack[sp, 3] = node
        stack[sp, 4] = 0
        sp += 1
        stack[sp, 0] = start
        stack[sp, 1] = start + n_left
        stack[sp, 2] = depth + 1
        stack[sp, 3] = node
        stack[sp, 4] = 1
        sp += 1

    node_count_out[0] = n_nodes
    node_count_out[1] = max_depth_used


@njit(cache=True, nogil=True)
def predict_kernel(feature, threshold, left, right, value, X, out):
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
