"""Shared fixtures-as-functions for the test suite."""
from __future__ import annotations

from itertools import product
from pathlib import Path

import numpy as np

from pso2d.classifiers import ClassifierKind
from pso2d.criterion import CriterionContext
from pso2d.dataset import Dataset, stratified_folds

DATA = Path(__file__).resolve().parent.parent / "data"


def synthetic(seed: int = 7, n_informative: int = 3, n_noise: int = 5, N: int = 200) -> Dataset:
    """Two balanced classes; informative columns carry an additive class shift."""
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], N // 2)
    shifts = np.linspace(0.9, 0.5, n_informative)
    informative = rng.normal(size=(N, n_informative)) + y[:, None] * shifts
    noise = rng.normal(size=(N, n_noise))
    return Dataset(np.hstack([informative, noise]), y)


def all_masks(n: int):
    for bits in product([False, True], repeat=n):
        if any(bits):
            yield np.array(bits)


def oracle_optimum(ctx: CriterionContext) -> float:
    """Exhaustive minimum of the criterion over every non-empty mask (not FE-counted)."""
    return min(ctx._score(m) for m in all_masks(ctx.dataset.n))


def context(d: Dataset, kind: ClassifierKind = ClassifierKind(), fold_seed: int = 0,
            k: int = 10, memoize: bool = False) -> CriterionContext:
    return CriterionContext(d, stratified_folds(d, k, np.random.default_rng(fold_seed)), kind, memoize)
