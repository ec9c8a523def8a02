"""
m-fold cross-validation over a grid of regularization constants.

The trainer is pluggable so the same driver runs the plaintext learner
or the private training protocol.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import pandas as pd

from .dataset import LabeledDataset
from .logistic import DEFAULT_ETA, DEFAULT_MAX_ITERS, DEFAULT_TOL, Model, train_batch
from .metrics import auc

logger = logging.getLogger(__name__)

Trainer = Callable[[LabeledDataset, float], Model]


@dataclass
class CrossValidationResult:
    """
    Selected regularization constant and the per-fold AUC table.

    Attributes:
        best_lambda (float): Grid value with the highest mean AUC
        table (pd.DataFrame): Columns reg_lambda, fold, auc
    """
    best_lambda: float
    table: pd.DataFrame

    def mean_auc(self) -> pd.Series:
        return self.table.groupby('reg_lambda')['auc'].mean()


def assign_folds(labels: np.ndarray, folds: int, seed: Optional[int] = None) -> np.ndarray:
    """
    Stratified fold ids: each class is shuffled and dealt round-robin.

    Returns:
        np.ndarray: Fold id in [0, folds) per instance
    """
    rng = np.random.default_rng(seed)
    fold_ids = np.empty(labels.size, dtype=np.int64)
    for label in (1, -1):
        members = np.flatnonzero(labels == label)
        members = members[rng.permutation(members.size)]
        fold_ids[members] = np.arange(members.size) % folds
    return fold_ids


def cross_validate(dataset: LabeledDataset, folds: int, lambda_grid: Sequence[float],
                   seed: Optional[int] = None, trainer: Optional[Trainer] = None,
                   eta: float = DEFAULT_ETA, tol: float = DEFAULT_TOL,
                   max_iters: int = DEFAULT_MAX_ITERS,
                   fold_ids: Optional[Sequence[int]] = None) -> CrossValidationResult:
    """
    Pick the regularization constant with the best mean held-out AUC.

    Args:
        dataset (LabeledDataset): Data to split
        folds (int): Number of folds m >= 2
        lambda_grid (Sequence[float]): Candidate regularization constants
        seed (int, optional): Seed for the fold assignment
        trainer (Callable, optional): (train_set, reg_lambda) -> Model; batch ascent by default
        eta, tol, max_iters: Settings of the default trainer
        fold_ids (Sequence[int], optional): Explicit fold assignment

    Returns:
        CrossValidationResult: Ties in mean AUC go to the smaller lambda

    Raises:
        ValueError: If m < 2, the grid is empty or a fold lacks a class
    """
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    if not len(lambda_grid):
        raise ValueError("lambda grid is empty")
    if trainer is None:
        def trainer(train_set: LabeledDataset, reg_lambda: float) -> Model:
            return train_batch(train_set, eta=eta, reg_lambda=reg_lambda, tol=tol, max_iters=max_iters)

    ids = (np.asarray(fold_ids, dtype=np.int64) if fold_ids is not None
           else assign_folds(dataset.labels, folds, seed))
    splits = []
    for fold in range(folds):
        held = np.flatnonzero(ids == fold)
        rest = np.flatnonzero(ids != fold)
        test_set, train_set = dataset.subset(held), dataset.subset(rest)
        if min(test_set.class_counts()) == 0 or min(train_set.class_counts()) == 0:
            raise ValueError(f"fold {fold} does not retain both classes")
        splits.append((train_set, test_set))

    rows = []
    for reg_lambda in sorted(lambda_grid):
        for fold, (train_set, test_set) in enumerate(splits):
            model = trainer(train_set, reg_lambda)
            score = auc(model.scores(test_set), test_set.labels)
            rows.append({'reg_lambda': reg_lambda, 'fold': fold, 'auc': score})
            logger.debug("lambda=%g fold=%d auc=%.5f", reg_lambda, fold, score)

    table = pd.DataFrame(rows, columns=['reg_lambda', 'fold', 'auc'])
    means = table.groupby('reg_lambda', sort=True)['auc'].mean()
    # idxmax returns the first maximum, i.e. the smallest lambda among ties
    best = float(means.idxmax())
    logger.info("Cross-validation selected lambda=%g (mean AUC %.5f)", best, means[best])
    return CrossValidationResult(best_lambda=best, table=table)
