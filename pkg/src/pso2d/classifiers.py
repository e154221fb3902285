"""Gaussian Naive Bayes and k-nearest-neighbour induction, plus error rate."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .dataset import Dataset

VAR_FLOOR_SCALE = 1e-9
_LOG_2PI = float(np.log(2.0 * np.pi))


class ClassifierError(ValueError):
    pass


@dataclass(frozen=True)
class ClassifierKind:
    tag: Literal["nb", "knn"] = "nb"
    k: int = 5

    def __post_init__(self):
        if self.tag not in ("nb", "knn"):
            raise ClassifierError(f"unknown classifier {self.tag!r}; expected 'nb' or 'knn'")
        if self.tag == "knn" and self.k < 1:
            raise ClassifierError(f"k must be >= 1, got {self.k}")

    def __str__(self) -> str:
        return "NB" if self.tag == "nb" else f"{self.k}-NN"


def _check_pair(train: Dataset, test: Dataset) -> None:
    if train.n != test.n:
        raise ClassifierError(f"feature-count mismatch: train has {train.n}, test has {test.n}")


def nb_predict_codes(X_train: np.ndarray, y_train: np.ndarray, X_test: np.ndarray,
                     n_classes: int) -> np.ndarray:
    """Gaussian NB on integer class codes; returns predicted codes.

    Classes absent from ``y_train`` are never predicted. Posterior ties go
    to the lowest class code.
    """
    if X_train.shape[0] == 0:
        raise ClassifierError("empty training set")
    counts = np.bincount(y_train, minlength=n_classes).astype(float)
    present = np.flatnonzero(counts)
    onehot = (y_train[:, None] == present[None, :]).astype(float)
    cnt = counts[present]
    means = (onehot.T @ X_train) / cnt[:, None]
    resid = X_train - means[np.searchsorted(present, y_train)]
    var = (onehot.T @ (resid * resid)) / cnt[:, None]
    floor = VAR_FLOOR_SCALE * (X_train.var(axis=0) + 1e-12)
    var = np.maximum(var, floor)

    log_prior = np.log(cnt / X_train.shape[0])
    log_norm = -0.5 * (_LOG_2PI + np.log(var)).sum(axis=1)
    # (M, C, n) is small at these dataset sizes
    diff = X_test[:, None, :] - means[None, :, :]
    log_lik = log_norm[None, :] - 0.5 * (diff * diff / var[None, :, :]).sum(axis=2)
    return present[np.argmax(log_prior[None, :] + log_lik, axis=1)]


def sq_distances(X_test: np.ndarray, X_train: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, accumulated feature by feature.

    The fixed left-to-right accumulation order keeps results bit-identical to
    the precomputed per-feature tables used by the criterion.
    """
    d = np.zeros((X_test.shape[0], X_train.shape[0]))
    for j in range(X_test.shape[1]):
        diff = X_test[:, j, None] - X_train[None, :, j]
        d += diff * diff
    return d


def knn_vote(dist: np.ndarray, y_train: np.ndarray, k: int, n_classes: int) -> np.ndarray:
    """Majority vote over the k nearest training points for each row of ``dist``.

    Distance ties keep the lower training index (stable sort); vote ties go
    to the class of the nearest neighbour among the tied classes.
    """
    if k < 1:
        raise ClassifierError(f"k must be >= 1, got {k}")
    if k > dist.shape[1]:
        raise ClassifierError(f"k={k} exceeds the training-set size {dist.shape[1]}")
    order = np.argsort(dist, axis=1, kind="stable")[:, :k]
    neigh = y_train[order]
    counts = np.zeros((dist.shape[0], n_classes), dtype=np.intp)
    rows = np.arange(dist.shape[0])
    for j in range(k):
        counts[rows, neigh[:, j]] += 1
    tied = counts == counts.max(axis=1, keepdims=True)
    first = np.argmax(tied[rows[:, None], neigh], axis=1)
    return neigh[rows, first]


def nb_classify(train: Dataset, test: Dataset) -> np.ndarray:
    """Predict test labels with per-class Gaussian likelihoods and frequency priors."""
    _check_pair(train, test)
    codes = nb_predict_codes(train.features, train.codes, test.features, train.m)
    return train.classes[codes]


def knn_classify(train: Dataset, test: Dataset, k: int = 5) -> np.ndarray:
    """Predict test labels by unweighted Euclidean k-NN majority vote."""
    _check_pair(train, test)
    dist = sq_distances(test.features, train.features)
    return train.classes[knn_vote(dist, train.codes, k, train.m)]


def classify(kind: ClassifierKind, train: Dataset, test: Dataset) -> np.ndarray:
    if kind.tag == "nb":
        return nb_classify(train, test)
    return knn_classify(train, test, kind.k)


def error_rate(pred, truth) -> float:
    """Fraction of misclassified instances."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ClassifierError(f"length mismatch: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise ClassifierError("cannot score an empty prediction")
    return float(np.count_nonzero(pred != truth)) / pred.size
