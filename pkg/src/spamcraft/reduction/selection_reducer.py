"""
Feature-subset reducers.

All three keep a sorted set of source indices and renumber the surviving
features 0..k-1:

- dfprune keeps every feature occurring in at least ``df_threshold`` documents
- uniform draws indices uniformly until k distinct ones are collected
- multinomial draws with probability proportional to document frequency
  until k distinct ones are collected
"""

from typing import Optional

import numpy as np

from ..features.vectors import SparseBinaryVector
from ..learning.dataset import LabeledDataset
from .base_reducer import BaseReducer, ProjectionState, ReductionSpec, document_frequencies

# Draws requested from the generator per refill
DRAW_BATCH = 4096


def draw_until_unique(rng: np.random.Generator, k: int, d: int,
                      p: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Draw indices with replacement until k distinct values have appeared.

    Args:
        rng (np.random.Generator): Source of draws
        k (int): Number of distinct indices wanted
        d (int): Index range [0, d)
        p (np.ndarray, optional): Draw probabilities; uniform when omitted

    Returns:
        np.ndarray: The first k distinct indices in draw order, sorted
    """
    if k == 0:
        return np.empty(0, dtype=np.int64)
    drawn = np.empty(0, dtype=np.int64)
    while True:
        batch = rng.choice(d, size=max(DRAW_BATCH, k), p=p) if p is not None \
            else rng.integers(0, d, size=max(DRAW_BATCH, k))
        drawn = np.concatenate([drawn, batch.astype(np.int64)])
        values, first = np.unique(drawn, return_index=True)
        if values.size >= k:
            in_order = values[np.argsort(first, kind='stable')]
            return np.sort(in_order[:k])


class SelectionReducer(BaseReducer):
    """
    Keep a subset of the source features.

    Use the ``method`` of the spec to choose dfprune, uniform or multinomial.
    """

    def __init__(self, spec: ReductionSpec):
        if spec.method not in ('dfprune', 'uniform', 'multinomial'):
            raise ValueError(f"SelectionReducer does not implement '{spec.method}'")
        super().__init__(spec, name=spec.method)
        self.data_independent = spec.method == 'uniform'

    def fit(self, dataset: Optional[LabeledDataset] = None) -> ProjectionState:
        """
        Select the kept feature indices.

        Args:
            dataset (LabeledDataset, optional): Required for dfprune and multinomial

        Returns:
            ProjectionState: State with sorted unique ``selected`` indices

        Raises:
            ValueError: If a needed corpus is missing or empty, or fewer than
                k features have nonzero probability
        """
        spec = self.spec
        if spec.method == 'uniform':
            rng = np.random.default_rng(spec.seed)
            selected = draw_until_unique(rng, spec.target_dim, spec.source_dim)
        else:
            if dataset is None or dataset.n == 0:
                raise ValueError(f"{spec.method} selection needs a nonempty corpus")
            if dataset.dim != spec.source_dim:
                raise ValueError(f"corpus dimension {dataset.dim} does not match {spec.source_dim}")
            df = document_frequencies(dataset)
            if spec.method == 'dfprune':
                selected = np.flatnonzero(df >= spec.df_threshold).astype(np.int64)
            else:
                support = int(np.count_nonzero(df))
                if support < spec.target_dim:
                    raise ValueError(
                        f"only {support} features have nonzero document frequency; cannot select {spec.target_dim}")
                rng = np.random.default_rng(spec.seed)
                selected = draw_until_unique(rng, spec.target_dim, spec.source_dim, p=df / df.sum())
        self.state = ProjectionState(spec=spec, selected=selected)
        self.logger.debug("%s selected %d of %d features", spec.method, selected.size, spec.source_dim)
        return self.state

    def project(self, x: SparseBinaryVector) -> SparseBinaryVector:
        self._check_input(x)
        selected = self._require_state().selected
        if selected.size == 0 or x.nnz == 0:
            return SparseBinaryVector(np.empty(0, dtype=np.int64), selected.size, trusted=True)
        pos = np.searchsorted(selected, x.indices)
        inside = pos < selected.size
        hit = np.zeros(x.nnz, dtype=bool)
        hit[inside] = selected[pos[inside]] == x.indices[inside]
        return SparseBinaryVector(pos[hit], selected.size, trusted=True)
