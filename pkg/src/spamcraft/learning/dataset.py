"""
Labeled datasets of sparse binary documents.

A LabeledDataset pairs SparseBinaryVector instances with labels in
{-1, +1} over a fixed dimension. It exposes a CSR design matrix for the
plaintext learner and block iteration for online training.
"""

from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from ..features.vectors import SparseBinaryVector


class LabeledDataset:
    """
    Sequence of (x_i, y_i) with every index below ``dim``.

    Attributes:
        vectors (List[SparseBinaryVector]): Documents
        labels (np.ndarray): int8 labels in {-1, +1}
        dim (int): Feature-space size d
    """

    def __init__(self, vectors: Sequence[SparseBinaryVector], labels: Sequence[int], dim: int):
        labels = np.asarray(labels, dtype=np.int8).reshape(-1)
        if len(vectors) != labels.size:
            raise ValueError(f"{len(vectors)} vectors but {labels.size} labels")
        if labels.size and not np.all(np.abs(labels) == 1):
            raise ValueError("labels must be -1 or +1")
        for x in vectors:
            if x.dim != dim:
                raise ValueError(f"vector dimension {x.dim} does not match dataset dimension {dim}")
        self.vectors: List[SparseBinaryVector] = list(vectors)
        self.labels = labels
        self.dim = int(dim)
        self._csr: Optional[sparse.csr_matrix] = None

    @classmethod
    def empty(cls, dim: int) -> "LabeledDataset":
        return cls([], [], dim)

    @classmethod
    def from_dense(cls, X: np.ndarray, y: Sequence[int]) -> "LabeledDataset":
        """Build from a 0/1 matrix; any nonzero entry counts as presence."""
        X = np.asarray(X)
        vectors = [SparseBinaryVector(np.flatnonzero(row), X.shape[1], trusted=True) for row in X]
        return cls(vectors, y, X.shape[1])

    def __len__(self) -> int:
        return len(self.vectors)

    def __iter__(self) -> Iterator[Tuple[SparseBinaryVector, int]]:
        return iter(zip(self.vectors, self.labels.tolist()))

    def __getitem__(self, i: int) -> Tuple[SparseBinaryVector, int]:
        return self.vectors[i], int(self.labels[i])

    @property
    def n(self) -> int:
        return len(self.vectors)

    def to_csr(self) -> sparse.csr_matrix:
        """n x d CSR matrix of presence indicators, cached."""
        if self._csr is None:
            indptr = np.zeros(self.n + 1, dtype=np.int64)
            indptr[1:] = np.cumsum([x.nnz for x in self.vectors])
            indices = (np.concatenate([x.indices for x in self.vectors])
                       if self.n else np.empty(0, dtype=np.int64))
            data = np.ones(indices.size, dtype=np.float64)
            self._csr = sparse.csr_matrix((data, indices, indptr), shape=(self.n, self.dim))
        return self._csr

    def to_dense(self) -> np.ndarray:
        return self.to_csr().toarray()

    def subset(self, rows: Sequence[int]) -> "LabeledDataset":
        rows = list(rows)
        return LabeledDataset([self.vectors[i] for i in rows], self.labels[rows], self.dim)

    def blocks(self, size: int) -> Iterator["LabeledDataset"]:
        """Consecutive blocks of ``size`` instances; the last block may be shorter."""
        if size < 1:
            raise ValueError(f"block size must be >= 1, got {size}")
        for start in range(0, self.n, size):
            yield self.subset(range(start, min(start + size, self.n)))

    def concat(self, other: "LabeledDataset") -> "LabeledDataset":
        if other.dim != self.dim:
            raise ValueError("cannot concatenate datasets of different dimension")
        return LabeledDataset(self.vectors + other.vectors,
                              np.concatenate([self.labels, other.labels]), self.dim)

    def split(self, parts: int) -> List["LabeledDataset"]:
        """Disjoint horizontal split into ``parts`` contiguous pieces."""
        bounds = np.linspace(0, self.n, parts + 1).astype(int)
        return [self.subset(range(bounds[k], bounds[k + 1])) for k in range(parts)]

    def class_counts(self) -> Tuple[int, int]:
        """(positives, negatives)."""
        positives = int(np.sum(self.labels == 1))
        return positives, self.n - positives

    def __repr__(self) -> str:
        pos, neg = self.class_counts()
        return f"LabeledDataset(n={self.n}, dim={self.dim}, spam={pos}, ham={neg})"


def synthetic_dataset(n: int, dim: int, density: float = 0.2, seed: Optional[int] = None,
                      noise: float = 0.0, rng: Optional[np.random.Generator] = None) -> LabeledDataset:
    """
    Random binary documents labeled by a hidden linear separator.

    Args:
        n (int): Number of documents
        dim (int): Feature-space size
        density (float): Probability each feature is present
        seed (int, optional): Seed when rng is not given
        noise (float): Fraction of labels flipped after labeling
        rng (np.random.Generator, optional): Generator to draw from

    Returns:
        LabeledDataset: Separable when noise is 0
    """
    rng = rng if rng is not None else np.random.default_rng(seed)
    X = (rng.random((n, dim)) < density).astype(np.float64)
    w_true = rng.normal(size=dim)
    scores = X @ w_true - np.median(X @ w_true)
    y = np.where(scores >= 0, 1, -1)
    if noise > 0:
        flips = rng.random(n) < noise
        y[flips] = -y[flips]
    return LabeledDataset.from_dense(X, y)
