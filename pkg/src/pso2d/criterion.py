"""Wrapper criterion: mean k-fold cross-validated error of a feature subset."""
from __future__ import annotations

import threading
import time

import numpy as np

from .classifiers import ClassifierKind, knn_vote, nb_predict_codes
from .dataset import Dataset, FoldAssignment, as_mask

# Per-feature pairwise distance tables are cached below this many bytes.
DISTANCE_TABLE_LIMIT = 256 * 2**20


class CriterionError(ValueError):
    pass


class CriterionContext:
    """Fixed (dataset, folds, classifier) triple that scores subsets.

    Every :meth:`evaluate_subset` call counts as one function evaluation,
    memo hit or not, and its wall time is added to :attr:`eval_time`.
    """

    def __init__(self, dataset: Dataset, folds: FoldAssignment,
                 classifier: ClassifierKind = ClassifierKind(), memoize: bool = False):
        if folds.fold_of.shape != (dataset.N,):
            raise CriterionError(
                f"fold assignment covers {folds.fold_of.size} instances, dataset has {dataset.N}")
        if dataset.missing_count():
            raise CriterionError("dataset still has missing values; impute first")
        self.dataset = dataset
        self.folds = folds
        self.classifier = classifier
        self.memoize = memoize
        self.fe_counter = 0
        self.eval_time = 0.0
        self.memo: dict[bytes, float] = {}
        self._lock = threading.Lock()

        X, y = dataset.features, dataset.codes
        self._splits = []
        for f in range(folds.k):
            test = folds.test_index(f)
            train = folds.train_index(f)
            if test.size == 0:
                continue
            if classifier.tag == "knn" and classifier.k > train.size:
                raise CriterionError(f"k={classifier.k} exceeds training fold size {train.size}")
            self._splits.append((train, test, X[train], y[train], X[test], y[test]))
        self._k = folds.k
        self._tables = None
        if classifier.tag == "knn" and dataset.n * dataset.N**2 * 8 <= DISTANCE_TABLE_LIMIT:
            diff = X.T[:, :, None] - X.T[:, None, :]
            self._tables = diff * diff

    def _distance(self, idx: np.ndarray) -> np.ndarray:
        X = self.dataset.features
        d = np.zeros((self.dataset.N, self.dataset.N))
        for j in idx:
            if self._tables is not None:
                d += self._tables[j]
            else:
                diff = X[:, j, None] - X[None, :, j]
                d += diff * diff
        return d

    def _score(self, mask: np.ndarray) -> float:
        m = self.dataset.m
        total = 0.0
        if self.classifier.tag == "nb":
            for _, _, Xtr, ytr, Xte, yte in self._splits:
                pred = nb_predict_codes(Xtr[:, mask], ytr, Xte[:, mask], m)
                total += np.count_nonzero(pred != yte) / yte.size
        else:
            dist = self._distance(np.flatnonzero(mask))
            for train, test, _, ytr, _, yte in self._splits:
                pred = knn_vote(dist[np.ix_(test, train)], ytr, self.classifier.k, m)
                total += np.count_nonzero(pred != yte) / yte.size
        return total / self._k

    def _check(self, mask) -> np.ndarray:
        try:
            mask = as_mask(mask, self.dataset.n)
        except ValueError as exc:
            raise CriterionError(str(exc)) from exc
        if not mask.any():
            raise CriterionError("empty feature subset evaluated; optimizer positions must hold >= 1 feature")
        return mask

    def evaluate_subset(self, mask) -> float:
        """Mean CV error of the classifier restricted to ``mask``."""
        start = time.perf_counter()
        mask = self._check(mask)
        key = np.packbits(mask).tobytes() if self.memoize else None
        value = None
        if key is not None:
            with self._lock:
                value = self.memo.get(key)
        if value is None:
            value = self._score(mask)
            if key is not None:
                with self._lock:
                    self.memo[key] = value
        elapsed = time.perf_counter() - start
        with self._lock:
            self.fe_counter += 1
            self.eval_time += elapsed
        return value

    def evaluate_full_set(self) -> float:
        """All-features baseline J(U); not counted as a function evaluation."""
        return self._score(np.ones(self.dataset.n, dtype=bool))

    __call__ = evaluate_subset
