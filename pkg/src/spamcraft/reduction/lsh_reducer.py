"""
Random-hyperplane locality sensitive hashing.

Each of the k output bits records the side of a Gaussian hyperplane the
document falls on. Hyperplane entries are regenerated on demand from a
counter hash of (hyperplane seed, feature index), so no d x k matrix is
ever materialized.
"""

from typing import List, Optional

import numpy as np

from ..features.vectors import SparseBinaryVector
from ..learning.dataset import LabeledDataset
from .base_reducer import BaseReducer, ProjectionState, ReductionSpec

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_TWO_POW_53 = float(1 << 53)

# Hyperplanes evaluated per pass over a document
CHUNK_ROWS = 256


def splitmix64(z: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer over uint64 arrays (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over='ignore'):
        z = z + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def hyperplane_seeds(seed: int, k: int) -> List[int]:
    """One 64-bit seed per hyperplane, derived from (seed, j)."""
    base = splitmix64(np.array([seed % (1 << 64)], dtype=np.uint64))[0]
    return [int(s) for s in splitmix64(np.arange(k, dtype=np.uint64) ^ base)]


def _unit_interval(bits: np.ndarray) -> np.ndarray:
    # 53 high bits -> (0, 1]
    return ((bits >> np.uint64(11)).astype(np.float64) + 1.0) / _TWO_POW_53


def hyperplane_entries(row_seeds: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """
    Gaussian entries h_j[i] for the given hyperplane seeds and feature indices.

    Args:
        row_seeds (np.ndarray): uint64 seeds, one per hyperplane
        indices (np.ndarray): Feature indices

    Returns:
        np.ndarray: Matrix of shape (len(row_seeds), len(indices))
    """
    counters = np.asarray(indices, dtype=np.uint64) << np.uint64(1)
    rows = np.asarray(row_seeds, dtype=np.uint64)[:, None]
    u1 = _unit_interval(splitmix64(rows ^ counters))
    u2 = _unit_interval(splitmix64(rows ^ (counters | np.uint64(1))))
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


class LSHReducer(BaseReducer):
    """
    Binary signatures from k pseudo-random Gaussian hyperplanes.

    Bit j is 1 when h_j . x >= 0, so an exact tie maps to 1.
    """

    def __init__(self, spec: Optional[ReductionSpec] = None, source_dim: Optional[int] = None,
                 target_dim: Optional[int] = None, seed: int = 0):
        if spec is None:
            spec = ReductionSpec('lsh', source_dim, target_dim, seed)
        super().__init__(spec, name='lsh')
        self._row_seeds = np.empty(0, dtype=np.uint64)

    def fit(self, dataset: Optional[LabeledDataset] = None) -> ProjectionState:
        seeds = hyperplane_seeds(self.spec.seed, self.spec.target_dim)
        self.state = ProjectionState(spec=self.spec, hyperplane_seeds=seeds)
        self._row_seeds = np.array(seeds, dtype=np.uint64)
        return self.state

    def load_state(self, state: ProjectionState) -> None:
        super().load_state(state)
        self._row_seeds = np.array(state.hyperplane_seeds, dtype=np.uint64)

    def hyperplane_products(self, x: SparseBinaryVector) -> np.ndarray:
        """h_j . x for every hyperplane j."""
        self._check_input(x)
        state = self._require_state()
        k = state.output_dim
        products = np.zeros(k, dtype=np.float64)
        if x.nnz == 0:
            return products
        for start in range(0, k, CHUNK_ROWS):
            rows = self._row_seeds[start:start + CHUNK_ROWS]
            products[start:start + rows.size] = hyperplane_entries(rows, x.indices).sum(axis=1)
        return products

    def project(self, x: SparseBinaryVector) -> SparseBinaryVector:
        products = self.hyperplane_products(x)
        return SparseBinaryVector(np.flatnonzero(products >= 0.0), products.size, trusted=True)
