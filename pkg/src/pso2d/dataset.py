"""CSV ingestion, nearest-neighbour imputation, stratified folds and column projection."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence, Union

import numpy as np

LabelColumn = Union[int, str]


class DatasetError(ValueError):
    """Raised for unreadable or malformed data files and invalid dataset operations."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable numeric feature matrix with class labels.

    Missing cells are stored as NaN until :func:`impute_missing` is applied.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        features = np.array(self.features, dtype=float, copy=True)
        labels = np.array(self.labels, copy=True)
        if features.ndim != 2:
            raise DatasetError("features must be a 2-D matrix")
        if labels.ndim != 1 or labels.shape[0] != features.shape[0]:
            raise DatasetError("labels must be a vector with one entry per instance")
        if features.shape[0] < 2:
            raise DatasetError("a dataset needs at least 2 instances")
        if features.shape[1] < 1:
            raise DatasetError("a dataset needs at least 1 feature")
        names = tuple(self.feature_names) or tuple(f"f{j + 1}" for j in range(features.shape[1]))
        if len(names) != features.shape[1]:
            raise DatasetError("feature_names length does not match the feature count")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[1]

    @property
    def N(self) -> int:
        return self.features.shape[0]

    @cached_property
    def _encoded(self) -> tuple[np.ndarray, np.ndarray]:
        classes, codes = np.unique(self.labels, return_inverse=True)
        codes = codes.astype(np.intp)
        codes.setflags(write=False)
        return classes, codes

    @property
    def classes(self) -> np.ndarray:
        """Sorted distinct label values; class index i refers to ``classes[i]``."""
        return self._encoded[0]

    @property
    def codes(self) -> np.ndarray:
        """Labels as integer class indexes into :attr:`classes`."""
        return self._encoded[1]

    @property
    def m(self) -> int:
        return len(self.classes)

    def missing_count(self) -> int:
        return int(np.isnan(self.features).sum())

    def equals(self, other: "Dataset") -> bool:
        return (
            self.feature_names == other.feature_names
            and np.array_equal(self.features, other.features, equal_nan=True)
            and np.array_equal(self.labels, other.labels)
        )


@dataclass(frozen=True)
class FoldAssignment:
    fold_of: np.ndarray
    k: int

    def test_index(self, f: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == f)

    def train_index(self, f: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != f)


def _parse_number(cell: str) -> float | None:
    try:
        return float(cell)
    except ValueError:
        return None


def _coerce_labels(raw: Sequence[str]) -> np.ndarray:
    try:
        values = [int(v) for v in raw]
        return np.array(values)
    except ValueError:
        pass
    try:
        return np.array([float(v) for v in raw])
    except ValueError:
        return np.array(raw, dtype=str)


def load_dataset(path: str | Path, label_column: LabelColumn = "last",
                 missing_token: str = "?") -> Dataset:
    """Read a comma-delimited table with one label column.

    ``label_column`` is ``"last"``, ``"first"``, a column index (negative
    allowed) or a header name. A header row is detected when its non-label
    cells are not all numeric. Cells equal to ``missing_token`` become NaN.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [[c.strip() for c in row] for row in csv.reader(fh) if any(c.strip() for c in row)]
    except (OSError, UnicodeDecodeError) as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DatasetError(f"{path} is empty")
    width = len(rows[0])
    if width < 2:
        raise DatasetError(f"{path}: need at least one feature column and one label column")
    for r, row in enumerate(rows):
        if len(row) != width:
            raise DatasetError(f"{path}: row {r + 1} has {len(row)} cells, expected {width}")

    def looks_like_header(row: list[str], label_idx: int | None) -> bool:
        cells = [c for i, c in enumerate(row) if i != label_idx]
        return any(c != missing_token and _parse_number(c) is None for c in cells)

    header: list[str] | None = None
    if isinstance(label_column, str) and label_column not in ("last", "first"):
        if label_column not in rows[0]:
            raise DatasetError(f"{path}: label column {label_column!r} not found in header")
        header = rows[0]
        label_idx = header.index(label_column)
    else:
        if label_column == "last":
            label_idx = width - 1
        elif label_column == "first":
            label_idx = 0
        else:
            label_idx = int(label_column)
            if not -width <= label_idx < width:
                raise DatasetError(f"{path}: label column index {label_column} out of range")
            label_idx %= width
        if looks_like_header(rows[0], label_idx):
            header = rows[0]

    body = rows[1:] if header is not None else rows
    if len(body) < 2:
        raise DatasetError(f"{path}: need at least 2 data rows, found {len(body)}")

    feat_cols = [i for i in range(width) if i != label_idx]
    features = np.empty((len(body), len(feat_cols)))
    for r, row in enumerate(body):
        for j, c in enumerate(feat_cols):
            cell = row[c]
            if cell == missing_token or cell == "":
                features[r, j] = np.nan
                continue
            value = _parse_number(cell)
            if value is None:
                line = r + (2 if header is not None else 1)
                raise DatasetError(f"{path}: non-numeric feature cell {cell!r} at line {line}")
            features[r, j] = value
    labels = _coerce_labels([row[label_idx] for row in body])
    if header is not None:
        names = tuple(header[c] for c in feat_cols)
    else:
        names = tuple(f"f{j + 1}" for j in range(len(feat_cols)))
    return Dataset(features, labels, names)


def impute_missing(d: Dataset) -> Dataset:
    """Fill NaN cells from the nearest fully observed instance.

    Distance is Euclidean over the recipient's observed features; ties go to
    the donor with the lowest instance index.
    """
    X = d.features
    missing = np.isnan(X)
    if not missing.any():
        return d
    complete = ~missing.any(axis=1)
    donors = np.flatnonzero(complete)
    if donors.size == 0:
        raise DatasetError("no fully observed instance is available as an imputation donor")
    out = X.copy()
    for i in np.flatnonzero(~complete):
        observed = ~missing[i]
        if not observed.any():
            raise DatasetError(f"instance {i} has every feature missing")
        diff = X[donors][:, observed] - X[i, observed]
        dist = np.einsum("ij,ij->i", diff, diff)
        donor = donors[int(np.argmin(dist))]  # argmin returns the first minimum
        out[i, missing[i]] = X[donor, missing[i]]
    return Dataset(out, d.labels, d.feature_names)


def normalize_minmax(d: Dataset) -> Dataset:
    """Rescale each column to [0, 1]; constant columns map to 0."""
    X = d.features
    lo = np.nanmin(X, axis=0)
    span = np.nanmax(X, axis=0) - lo
    span[span == 0] = 1.0
    return Dataset((X - lo) / span, d.labels, d.feature_names)


def stratified_folds(d: Dataset, k: int, rng: np.random.Generator) -> FoldAssignment:
    """Assign instances to ``k`` folds so each class is spread as evenly as possible.

    Instances of each class are shuffled and dealt round-robin; the dealing
    position carries over from one class to the next so that fold sizes stay
    balanced as well.
    """
    if k < 2:
        raise DatasetError(f"fold count must be at least 2, got {k}")
    if k > d.N:
        raise DatasetError(f"fold count {k} exceeds the instance count {d.N}")
    fold_of = np.empty(d.N, dtype=np.intp)
    offset = 0
    for c in range(d.m):
        members = rng.permutation(np.flatnonzero(d.codes == c))
        fold_of[members] = (offset + np.arange(members.size)) % k
        offset = (offset + members.size) % k
    fold_of.setflags(write=False)
    return FoldAssignment(fold_of, k)


def as_mask(bits, n: int | None = None) -> np.ndarray:
    mask = np.asarray(bits).astype(bool)
    if mask.ndim != 1:
        raise DatasetError("a subset mask must be a 1-D bit vector")
    if n is not None and mask.size != n:
        raise DatasetError(f"mask length {mask.size} does not match feature count {n}")
    return mask


def project(d: Dataset, mask) -> Dataset:
    """Keep only the masked feature columns, in their original order."""
    mask = as_mask(mask, d.n)
    if not mask.any():
        raise DatasetError("cannot project onto an empty feature subset")
    names = tuple(name for name, keep in zip(d.feature_names, mask) if keep)
    return Dataset(d.features[:, mask], d.labels, names)
