"""
Plaintext learning.

Contains labeled datasets, logistic regression (batch and online), the
AUC metric and the cross-validation driver.
"""

from .dataset import LabeledDataset, synthetic_dataset
from .logistic import (
    Model,
    gradient,
    load_model,
    log_likelihood,
    save_model,
    sigmoid_prob,
    train_batch,
    train_dense,
    train_online,
    update_weights,
)
from .metrics import accuracy, auc, majority_baseline
from .cross_validation import CrossValidationResult, cross_validate

__all__ = [
    'LabeledDataset',
    'synthetic_dataset',
    'Model',
    'gradient',
    'load_model',
    'log_likelihood',
    'save_model',
    'sigmoid_prob',
    'train_batch',
    'train_dense',
    'train_online',
    'update_weights',
    'accuracy',
    'auc',
    'majority_baseline',
    'CrossValidationResult',
    'cross_validate',
]
