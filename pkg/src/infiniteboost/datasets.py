"""Tabular dataset loading, validation and holdout splitting.

Two on-disk formats are supported: comma-separated values with an optional
header row, and the sparse ``<label> [qid:<q>] <index>:<value>`` text format
common for ranking benchmarks. Loaded datasets are immutable containers of
dense float64 arrays and are safe to share between threads.
"""

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.utils import check_random_state

from ._validation import check_query_groups


class DataError(ValueError):
    """Raised for unreadable, malformed or inconsistent input data."""


@dataclass(frozen=True)
class Dataset:
    """Dense feature matrix with targets and optional query groups.

    ``targets`` keeps the values exactly as found in the file; binary labels
    stay in {0,1} and are remapped by the logistic loss only when needed, so
    a load/save round trip preserves the matrices bit for bit.
    """

    features: np.ndarray
    targets: np.ndarray
    query_groups: np.ndarray | None = None
    feature_names: list[str] | None = None
    target_name: str = "target"

    def __post_init__(self):
        X = np.ascontiguousarray(self.features, dtype=np.float64)
        y = np.ascontiguousarray(self.targets, dtype=np.float64).ravel()
        if X.ndim != 2:
            raise DataError("features must form a 2-D matrix")
        if X.shape[0] == 0:
            raise DataError("no samples")
        if not np.isfinite(X).all():
            raise DataError("features contain NaN or infinite values")
        if y.shape[0] != X.shape[0]:
            raise DataError(
                f"targets length {y.shape[0]} != n_samples {X.shape[0]}"
            )
        if not np.isfinite(y).all():
            raise DataError("targets contain NaN or infinite values")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", y)
        if self.query_groups is not None:
            qid = check_query_groups(self.query_groups, X.shape[0])
            qid.setflags(write=False)
            object.__setattr__(self, "query_groups", qid)

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]


@dataclass(frozen=True)
class HoldoutSplit:
    """Disjoint train/holdout index sets covering all samples."""

    train_indices: np.ndarray
    holdout_indices: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))


def _parse_cell(text, row, column):
    try:
        return float(text)
    except ValueError:
        raise DataError(
            f"non-numeric cell {text!r} at row {row}, column {column}"
        ) from None


def load_csv(path, target_column=None, has_header=True):
    """Load a CSV file into a :class:`Dataset`.

    Parameters
    ----------
    path : str
        File to read.
    target_column : str or int or None
        Column holding the targets; a name when the file has a header,
        otherwise a 0-based index. ``None`` treats every column as a
        feature and fills targets with zeros (prediction-only data).
    has_header : bool
        Whether the first line is a header row.
    """
    try:
        handle = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc.strerror}") from None
    with handle:
        reader = csv.reader(handle)
        rows = [row for row in reader if row]
    if has_header:
        if not rows:
            raise DataError("no samples")
        header = [name.strip() for name in rows[0]]
        rows = rows[1:]
    else:
        header = None
    if not rows:
        raise DataError("no samples")

    n_columns = len(rows[0])
    if header is not None and len(header) != n_columns:
        raise DataError("header width does not match data width")

    target_idx = None
    if target_column is not None:
        if header is not None and str(target_column) in header:
            target_idx = header.index(str(target_column))
        else:
            try:
                target_idx = int(target_column)
            except (TypeError, ValueError):
                raise DataError(
                    f"target column {target_column!r} not found"
                ) from None
            if not 0 <= target_idx < n_columns:
                raise DataError(f"target column {target_column!r} not found")

    def column_name(j):
        return header[j] if header is not None else str(j)

    matrix = np.empty((len(rows), n_columns), dtype=np.float64)
    for i, row in enumerate(rows):
        if len(row) != n_columns:
            raise DataError(
                f"row {i} has {len(row)} cells, expected {n_columns}"
            )
        for j, cell in enumerate(row):
            matrix[i, j] = _parse_cell(cell.strip(), i, column_name(j))
    if not np.isfinite(matrix).all():
        bad = np.argwhere(~np.isfinite(matrix))[0]
        raise DataError(
            f"non-finite value at row {bad[0]}, column {column_name(bad[1])}"
        )

    if target_idx is None:
        features = matrix
        targets = np.zeros(len(rows), dtype=np.float64)
        names = header if header is not None else None
        target_name = "target"
    else:
        features = np.delete(matrix, target_idx, axis=1)
        targets = matrix[:, target_idx]
        if header is not None:
            names = [h for j, h in enumerate(header) if j != target_idx]
            target_name = header[target_idx]
        else:
            names = None
            target_name = str(target_idx)
    return Dataset(features, targets, feature_names=names, target_name=target_name)


def save_csv(dataset, path):
    """Write features plus target column back to CSV.

    Reals are written with ``repr`` so reloading reproduces the matrices
    bit for bit. Query groups are not representable in CSV and are dropped.
    """
    names = dataset.feature_names
    if names is None:
        names = [f"f{j}" for j in range(dataset.n_features)]
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(",".join([*names, dataset.target_name]) + "\n")
        for i in range(dataset.n_samples):
            cells = [repr(float(v)) for v in dataset.features[i]]
            cells.append(repr(float(dataset.targets[i])))
            handle.write(",".join(cells) + "\n")


def load_libsvm(path, ranking=False):
    """Load a sparse ``<label> [qid:<q>] <index>:<value>`` text file.

    Feature indices are 1-based and must be strictly ascending within a
    line; absent features densify to 0. ``qid`` fields define query groups
    when ``ranking`` is set and are ignored with a warning otherwise.
    """
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc.strerror}") from None

    labels = []
    qids = []
    entries = []  # per line: list of (index, value), 0-based
    n_features = 0
    saw_qid = False
    with handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            labels.append(_parse_cell(tokens[0], lineno, "label"))
            qid = None
            pairs = []
            previous = 0
            for token in tokens[1:]:
                if token.startswith("qid:"):
                    saw_qid = True
                    if pairs:
                        raise DataError(
                            f"line {lineno}: qid must precede feature pairs"
                        )
                    try:
                        qid = int(token[4:])
                    except ValueError:
                        raise DataError(
                            f"line {lineno}: malformed qid field {token!r}"
                        ) from None
                    continue
                idx_text, sep, val_text = token.partition(":")
                if not sep:
                    raise DataError(
                        f"line {lineno}: malformed pair {token!r}"
                    )
                try:
                    idx = int(idx_text)
                    val = float(val_text)
                except ValueError:
                    raise DataError(
                        f"line {lineno}: malformed pair {token!r}"
                    ) from None
                if idx <= previous:
                    raise DataError(f"line {lineno}: indices not ascending")
                previous = idx
                pairs.append((idx - 1, val))
            if pairs:
                n_features = max(n_features, pairs[-1][0] + 1)
            entries.append(pairs)
            qids.append(qid)

    if not entries:
        raise DataError("no samples")
    if saw_qid and not ranking:
        warnings.warn("qid fields present but ranking flag not set; ignored")
    if ranking and any(q is None for q in qids):
        raise DataError("ranking flag set but some lines have no qid")

    features = np.zeros((len(entries), n_features), dtype=np.float64)
    for i, pairs in enumerate(entries):
        for j, v in pairs:
            features[i, j] = v
    targets = np.asarray(labels, dtype=np.float64)
    groups = np.asarray(qids, dtype=np.int64) if ranking else None
    if ranking and (targets < 0).any():
        raise DataError("relevance grades must be nonnegative")
    try:
        return Dataset(features, targets, query_groups=groups)
    except ValueError as exc:
        raise DataError(str(exc)) from None


def split_indices(n_samples, fraction, random_state, query_groups=None):
    """Seeded uniform split of ``range(n_samples)`` into train/holdout.

    With query groups, whole groups go to one side and the holdout grows
    greedily (in shuffled group order) until it reaches ``fraction`` of the
    samples. Without groups the holdout has exactly
    ``round(fraction * n_samples)`` entries.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("holdout fraction must lie in (0, 1)")
    rng = check_random_state(random_state)
    if query_groups is None:
        n_holdout = int(round(fraction * n_samples))
        if n_holdout == 0:
            raise ValueError("holdout fraction yields an empty holdout")
        if n_holdout == n_samples:
            raise ValueError("holdout fraction yields an empty train side")
        perm = rng.permutation(n_samples)
        holdout = np.sort(perm[:n_holdout])
        train = np.sort(perm[n_holdout:])
        return HoldoutSplit(train, holdout)

    from ._validation import group_slices

    blocks = group_slices(np.asarray(query_groups, dtype=np.int64))
    order = rng.permutation(len(blocks))
    target = fraction * n_samples
    holdout_blocks = []
    taken = 0
    for b in order:
        if taken >= target:
            break
        holdout_blocks.append(blocks[b])
        taken += blocks[b][1] - blocks[b][0]
    if taken == 0:
        raise ValueError("holdout fraction yields an empty holdout")
    if taken == n_samples:
        raise ValueError("holdout fraction yields an empty train side")
    mask = np.zeros(n_samples, dtype=bool)
    for start, end in holdout_blocks:
        mask[start:end] = True
    return HoldoutSplit(np.flatnonzero(~mask), np.flatnonzero(mask))


def split_holdout(dataset, fraction, seed):
    """Split a :class:`Dataset` into train and holdout index sets."""
    return split_indices(
        dataset.n_samples, fraction, seed, query_groups=dataset.query_groups
    )
