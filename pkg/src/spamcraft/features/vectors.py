"""
Sparse binary document vectors.
"""

from typing import Iterable, Union

import numpy as np


class SparseBinaryVector:
    """
    Presence-only feature vector stored as sorted unique indices.

    Attributes:
        indices (np.ndarray): Strictly increasing int64 indices, all < dim
        dim (int): Size of the feature space
    """

    __slots__ = ("indices", "dim")

    def __init__(self, indices: Union[Iterable[int], np.ndarray], dim: int, *, trusted: bool = False):
        """
        Build a vector, validating the index invariants.

        Args:
            indices: Feature indices; must already be sorted and unique unless
                trusted is False, in which case they are checked
            dim (int): Feature-space size
            trusted (bool): Skip validation for indices produced by np.unique
        """
        arr = np.asarray(indices, dtype=np.int64).reshape(-1)
        if dim < 0:
            raise ValueError(f"dimension must be nonnegative, got {dim}")
        if not trusted and arr.size:
            if np.any(np.diff(arr) <= 0):
                raise ValueError("indices must be strictly increasing")
            if arr[0] < 0 or arr[-1] >= dim:
                raise ValueError(f"indices must lie in [0, {dim})")
        arr.setflags(write=False)
        self.indices = arr
        self.dim = int(dim)

    @classmethod
    def from_indices(cls, indices: Iterable[int], dim: int) -> "SparseBinaryVector":
        """Sort and deduplicate arbitrary indices, then validate the range."""
        return cls(np.unique(np.asarray(list(indices), dtype=np.int64)), dim)

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim, dtype=np.float64)
        dense[self.indices] = 1.0
        return dense

    def dot(self, w: np.ndarray) -> float:
        return float(np.sum(w[self.indices]))

    def __len__(self) -> int:
        return self.nnz

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseBinaryVector):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.indices, other.indices)

    def __hash__(self) -> int:
        return hash((self.dim, self.indices.tobytes()))

    def __repr__(self) -> str:
        return f"SparseBinaryVector(nnz={self.nnz}, dim={self.dim})"

    def dump_line(self) -> str:
        """Debug dump format: space-separated sorted indices."""
        return " ".join(str(i) for i in self.indices.tolist())
