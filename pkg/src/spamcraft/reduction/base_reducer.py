"""
Base reducer class for dimensionality reduction.

Defines the interface shared by every reduction scheme: fit a
ProjectionState (possibly without looking at data), then map documents
into the reduced space. A ProjectionState serializes together with its
ReductionSpec so any party can reproduce the mapping.
"""

import json
import logging
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from ..features.vectors import SparseBinaryVector
from ..learning.dataset import LabeledDataset

METHODS = ('lsh', 'hashspace', 'dfprune', 'uniform', 'multinomial', 'pca')


@dataclass(frozen=True)
class ReductionSpec:
    """
    Parameters fully describing a reduction.

    Attributes:
        method (str): One of lsh, hashspace, dfprune, uniform, multinomial, pca
        source_dim (int): Input dimension d
        target_dim (int, optional): Output dimension k; for hashspace the
            modulus m, for dfprune decided by the threshold
        seed (int): Seed of every randomized choice
        df_threshold (int): Minimum document frequency kept by dfprune
    """
    method: str
    source_dim: int
    target_dim: Optional[int] = None
    seed: int = 0
    df_threshold: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"Reduction method '{self.method}' not found. Available: {list(METHODS)}")
        if self.source_dim < 1:
            raise ValueError(f"source dimension must be >= 1, got {self.source_dim}")
        if self.method != 'dfprune' and self.target_dim is None:
            raise ValueError(f"method '{self.method}' needs a target dimension")
        if self.target_dim is not None and self.target_dim < 0:
            raise ValueError(f"target dimension must be nonnegative, got {self.target_dim}")
        if self.method in ('uniform', 'multinomial', 'pca') and self.target_dim > self.source_dim:
            raise ValueError(f"target dimension {self.target_dim} exceeds source dimension {self.source_dim}")
        if self.df_threshold < 1:
            raise ValueError(f"document-frequency threshold must be >= 1, got {self.df_threshold}")

    @property
    def hash_modulus(self) -> Optional[int]:
        return self.target_dim if self.method == 'hashspace' else None


@dataclass
class ProjectionState:
    """
    Fitted mapping for one ReductionSpec.

    Only the fields relevant to the method are populated: hyperplane
    seeds for lsh, the sorted selected indices for the selection methods,
    basis and mean for pca.
    """
    spec: ReductionSpec
    hyperplane_seeds: List[int] = field(default_factory=list)
    selected: Optional[np.ndarray] = None
    basis: Optional[np.ndarray] = None
    mean: Optional[np.ndarray] = None

    @property
    def output_dim(self) -> int:
        if self.selected is not None:
            return int(self.selected.size)
        if self.basis is not None:
            return int(self.basis.shape[1])
        if self.spec.method == 'hashspace':
            return min(int(self.spec.target_dim), self.spec.source_dim)
        return int(self.spec.target_dim)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'spec': asdict(self.spec),
            'hyperplane_seeds': [str(s) for s in self.hyperplane_seeds],
            'selected': None if self.selected is None else self.selected.tolist(),
            'basis': None if self.basis is None else self.basis.tolist(),
            'mean': None if self.mean is None else self.mean.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ProjectionState":
        spec = ReductionSpec(**data['spec'])
        selected = data.get('selected')
        basis = data.get('basis')
        mean = data.get('mean')
        return cls(
            spec=spec,
            hyperplane_seeds=[int(s) for s in data.get('hyperplane_seeds', [])],
            selected=None if selected is None else np.asarray(selected, dtype=np.int64),
            basis=None if basis is None else np.asarray(basis, dtype=np.float64).reshape(spec.source_dim, -1),
            mean=None if mean is None else np.asarray(mean, dtype=np.float64),
        )

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as fh:
            json.dump(self.to_dict(), fh)
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ProjectionState":
        with open(path, 'r', encoding='utf-8') as fh:
            return cls.from_dict(json.load(fh))


class BaseReducer(ABC):
    """
    Abstract base class for all reducers.

    Subclasses implement fit() and project(). Data-independent reducers
    accept ``fit(None)``; only those may feed private protocol sessions.
    """

    data_independent = True
    private_safe = True

    def __init__(self, spec: ReductionSpec, name: Optional[str] = None):
        self.spec = spec
        self.name = name or spec.method
        self.state: Optional[ProjectionState] = None
        self.logger = logging.getLogger(__name__)

    @abstractmethod
    def fit(self, dataset: Optional[LabeledDataset] = None) -> ProjectionState:
        """
        Compute the projection state.

        Args:
            dataset (LabeledDataset, optional): Corpus for data-dependent methods
        Returns:
            ProjectionState: Fitted state, also kept on the reducer
        """
        pass

    @abstractmethod
    def project(self, x: SparseBinaryVector) -> Union[SparseBinaryVector, np.ndarray]:
        """Map one document into the reduced space."""
        pass

    def load_state(self, state: ProjectionState) -> None:
        if state.spec != self.spec:
            raise ValueError("projection state was fitted for a different reduction spec")
        self.state = state

    def _require_state(self) -> ProjectionState:
        if self.state is None:
            if not self.data_independent:
                raise RuntimeError(f"{self.name} reducer must be fitted before projecting")
            self.fit(None)
        return self.state

    def _check_input(self, x: SparseBinaryVector) -> None:
        if x.dim != self.spec.source_dim:
            raise ValueError(f"vector dimension {x.dim} does not match source dimension {self.spec.source_dim}")

    def transform(self, dataset: LabeledDataset) -> LabeledDataset:
        """
        Project every document, keeping labels and order.

        Args:
            dataset (LabeledDataset): Dataset over the source dimension
        Returns:
            LabeledDataset: Dataset over the reduced dimension
        """
        state = self._require_state()
        vectors = [self.project(x) for x in dataset.vectors]
        self.logger.info("Reduced %d documents from d=%d to k=%d with %s",
                         dataset.n, self.spec.source_dim, state.output_dim, self.name)
        return LabeledDataset(vectors, dataset.labels, state.output_dim)

    def get_info(self) -> Dict[str, Any]:
        """
        Return information about this reducer.
        """
        return {
            "name": self.name,
            "type": self.__class__.__name__,
            "method": self.spec.method,
            "source_dim": self.spec.source_dim,
            "target_dim": self.spec.target_dim,
            "seed": self.spec.seed,
            "data_independent": self.data_independent,
            "private_safe": self.private_safe,
        }


def document_frequencies(dataset: LabeledDataset) -> np.ndarray:
    """Number of documents containing each feature."""
    if dataset.n == 0:
        return np.zeros(dataset.dim, dtype=np.int64)
    return np.asarray(dataset.to_csr().sum(axis=0)).reshape(-1).astype(np.int64)
