"""
Principal component analysis from the covariance eigendecomposition.

PCA looks at the whole training corpus, so it cannot be fitted over
private data. It is kept as a plaintext baseline and refuses to feed a
protocol session.
"""

from typing import Optional, Union

import numpy as np

from ..exceptions import ConvergenceError
from ..features.vectors import SparseBinaryVector
from ..learning.dataset import LabeledDataset
from .base_reducer import BaseReducer, ProjectionState, ReductionSpec


def top_eigenspace(cov: np.ndarray, k: int) -> np.ndarray:
    """
    Orthonormal basis of the top-k eigenspace of a symmetric matrix.

    Columns are ordered by decreasing eigenvalue. Each column is signed so
    that its largest-magnitude entry is positive, which makes the basis
    reproducible. Null-space directions (k above the rank) come back as an
    orthonormal completion with eigenvalue zero.

    Raises:
        ConvergenceError: If LAPACK fails to converge
    """
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(cov)
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(f"covariance eigendecomposition failed: {e}") from e
    order = np.argsort(eigenvalues, kind='stable')[::-1][:k]
    basis = eigenvectors[:, order]
    pivots = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[pivots, np.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    return basis * signs


class PCAReducer(BaseReducer):
    """Project mean-centered documents onto the top-k covariance eigenvectors."""

    data_independent = False
    private_safe = False

    def __init__(self, spec: Optional[ReductionSpec] = None, source_dim: Optional[int] = None,
                 target_dim: Optional[int] = None, seed: int = 0):
        if spec is None:
            spec = ReductionSpec('pca', source_dim, target_dim, seed)
        super().__init__(spec, name='pca')

    def fit(self, dataset: Optional[Union[LabeledDataset, np.ndarray]] = None) -> ProjectionState:
        """
        Fit the basis on a corpus.

        Any k up to min(n, d) is accepted, including k above the rank of
        the centered corpus.

        Args:
            dataset: LabeledDataset or dense n x d matrix

        Raises:
            ValueError: If k > min(n, d)
            ConvergenceError: If the eigendecomposition fails
        """
        if dataset is None:
            raise ValueError("pca needs a corpus to fit")
        X = dataset.to_dense() if isinstance(dataset, LabeledDataset) else np.asarray(dataset, dtype=np.float64)
        n, d = X.shape
        k = self.spec.target_dim
        if d != self.spec.source_dim:
            raise ValueError(f"corpus dimension {d} does not match {self.spec.source_dim}")
        if k > min(n, d):
            raise ValueError(f"k={k} exceeds min(n, d)={min(n, d)}")
        mean = X.mean(axis=0)
        centered = X - mean
        cov = centered.T @ centered / n
        basis = top_eigenspace(cov, k) if k else np.zeros((d, 0))
        self.state = ProjectionState(spec=self.spec, basis=basis, mean=mean)
        self.logger.info("PCA captured %.6g of %.6g total variance with k=%d",
                         self.captured_variance(cov), float(np.trace(cov)), k)
        return self.state

    def captured_variance(self, cov: np.ndarray) -> float:
        basis = self._require_state().basis
        return float(np.trace(basis.T @ cov @ basis))

    def project_dense(self, X: np.ndarray) -> np.ndarray:
        """Project rows of a dense matrix (or one dense vector)."""
        state = self._require_state()
        return (np.asarray(X, dtype=np.float64) - state.mean) @ state.basis

    def project(self, x: SparseBinaryVector) -> np.ndarray:
        self._check_input(x)
        return self.project_dense(x.to_dense())

    def transform(self, dataset: LabeledDataset) -> np.ndarray:
        """Dense n x k matrix of projections; labels are unchanged and not returned."""
        return self.project_dense(dataset.to_dense())

    def reconstruct(self, Z: np.ndarray) -> np.ndarray:
        state = self._require_state()
        return Z @ state.basis.T + state.mean
