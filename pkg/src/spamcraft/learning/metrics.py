"""
Ranking and accuracy metrics.
"""

from typing import Sequence

import numpy as np
from scipy.stats import rankdata


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """
    Area under the ROC curve via the Mann-Whitney rank statistic.

    Ties between a positive and a negative score earn half credit.

    Args:
        scores (Sequence[float]): Higher means more likely spam
        labels (Sequence[int]): Labels in {-1, +1}

    Returns:
        float: Probability a random positive outranks a random negative

    Raises:
        ValueError: If only one class is present or lengths differ
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError(f"{scores.size} scores but {labels.size} labels")
    positives = labels == 1
    num_pos = int(np.sum(positives))
    num_neg = int(labels.size - num_pos)
    if num_pos == 0 or num_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative label")
    ranks = rankdata(scores, method='average')
    rank_sum = float(np.sum(ranks[positives]))
    return (rank_sum - num_pos * (num_pos + 1) / 2.0) / (num_pos * num_neg)


def accuracy(predictions: Sequence[int], labels: Sequence[int]) -> float:
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if labels.size == 0:
        return 0.0
    return float(np.mean(predictions == labels))


def majority_baseline(labels: Sequence[int]) -> float:
    """Accuracy of always predicting the more frequent label."""
    labels = np.asarray(labels)
    if labels.size == 0:
        return 0.0
    positives = float(np.mean(labels == 1))
    return max(positives, 1.0 - positives)
