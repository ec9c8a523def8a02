"""
Feature hashing into a smaller space: index i maps to i mod m.
"""

from typing import Optional

import numpy as np

from ..features.vectors import SparseBinaryVector
from ..learning.dataset import LabeledDataset
from .base_reducer import BaseReducer, ProjectionState, ReductionSpec


class HashSpaceReducer(BaseReducer):
    """
    Collapse indices modulo m; colliding features merge into one.

    A modulus at or above the source dimension is the identity: the output
    keeps dimension d rather than padding up to m.
    """

    def __init__(self, spec: Optional[ReductionSpec] = None, source_dim: Optional[int] = None,
                 target_dim: Optional[int] = None, seed: int = 0):
        if spec is None:
            spec = ReductionSpec('hashspace', source_dim, target_dim, seed)
        super().__init__(spec, name='hashspace')
        if spec.target_dim < 1:
            raise ValueError(f"hash modulus must be >= 1, got {spec.target_dim}")

    def fit(self, dataset: Optional[LabeledDataset] = None) -> ProjectionState:
        self.state = ProjectionState(spec=self.spec)
        return self.state

    def project(self, x: SparseBinaryVector) -> SparseBinaryVector:
        self._check_input(x)
        m = self.spec.hash_modulus
        if m >= x.dim:
            return SparseBinaryVector(x.indices, x.dim, trusted=True)
        return SparseBinaryVector(np.unique(x.indices % m), m, trusted=True)
