"""
Plaintext logistic regression.

This is the functional reference the private training protocol must
match: sigmoid class probabilities, data log-likelihood, its gradient,
batch gradient ascent and block-wise online updates. Labels are in
{-1, +1} and features are binary.

The update rule is w <- (1 + 2*lambda) * w + eta * grad, which reduces to
w <- w + eta * grad when lambda is 0.
"""

import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np
from scipy.special import expit

from ..exceptions import DivergenceError
from ..features.vectors import SparseBinaryVector
from .dataset import LabeledDataset

logger = logging.getLogger(__name__)

DEFAULT_ETA = 0.001
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 1000


@dataclass
class Model:
    """
    Logistic regression weights plus training constants.

    Attributes:
        w (np.ndarray): Dense weight vector of length d
        eta (float): Step size, > 0
        reg_lambda (float): l2 coefficient, >= 0 (0 disables regularization)
    """
    w: np.ndarray
    eta: float = DEFAULT_ETA
    reg_lambda: float = 0.0

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64).reshape(-1)
        if self.eta <= 0:
            raise ValueError(f"step size must be positive, got {self.eta}")
        if self.reg_lambda < 0:
            raise ValueError(f"regularization must be nonnegative, got {self.reg_lambda}")
        if not np.all(np.isfinite(self.w)):
            raise DivergenceError("model weights are not finite")

    @classmethod
    def zeros(cls, dim: int, eta: float = DEFAULT_ETA, reg_lambda: float = 0.0) -> "Model":
        return cls(np.zeros(dim), eta, reg_lambda)

    @property
    def dim(self) -> int:
        return int(self.w.size)

    def scores(self, dataset: LabeledDataset) -> np.ndarray:
        """Raw margins w^T x for every document."""
        if dataset.n == 0:
            return np.zeros(0)
        return dataset.to_csr() @ self.w

    def classify(self, x: SparseBinaryVector) -> int:
        """+1 iff w^T x > 0; an exact zero margin is not spam."""
        return 1 if x.dot(self.w) > 0 else -1

    def with_weights(self, w: np.ndarray) -> "Model":
        return Model(w, self.eta, self.reg_lambda)


def _margins(w: np.ndarray, dataset: LabeledDataset) -> np.ndarray:
    if dataset.n == 0:
        return np.zeros(0)
    return dataset.labels * (dataset.to_csr() @ w)


def sigmoid_prob(w: np.ndarray, x: Union[SparseBinaryVector, np.ndarray], y: int) -> float:
    """P(y | x, w) = 1 / (1 + exp(-y * w^T x))."""
    margin = x.dot(w) if isinstance(x, SparseBinaryVector) else float(np.dot(w, x))
    return float(expit(y * margin))


def log_likelihood(w: np.ndarray, dataset: LabeledDataset) -> float:
    """L(w) = -sum_i log(1 + exp(-y_i w^T x_i)); equals -n log 2 at w = 0."""
    return -float(np.sum(np.logaddexp(0.0, -_margins(w, dataset))))


def gradient(w: np.ndarray, dataset: LabeledDataset) -> np.ndarray:
    """
    Gradient of the log-likelihood, without the step size.

    Returns:
        np.ndarray: sum_i y_i x_i / (1 + exp(y_i w^T x_i))
    """
    if dataset.n == 0:
        return np.zeros(dataset.dim)
    coef = dataset.labels * expit(-_margins(w, dataset))
    return np.asarray(dataset.to_csr().T @ coef).reshape(-1)


def update_weights(w: np.ndarray, grad: np.ndarray, eta: float, reg_lambda: float = 0.0) -> np.ndarray:
    """One ascent step: (1 + 2*lambda) * w + eta * grad."""
    if reg_lambda:
        return (1.0 + 2.0 * reg_lambda) * w + eta * grad
    return w + eta * grad


def _check_finite(w: np.ndarray, where: str) -> None:
    if not np.all(np.isfinite(w)):
        raise DivergenceError(f"weights diverged during {where}")


def train_batch(dataset: LabeledDataset, eta: float = DEFAULT_ETA, reg_lambda: float = 0.0,
                tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS,
                w0: Optional[np.ndarray] = None,
                callback: Optional[Callable[[int, np.ndarray], None]] = None) -> Model:
    """
    Batch gradient ascent from the all-zeros vector.

    Args:
        dataset (LabeledDataset): Training data
        eta (float): Step size
        reg_lambda (float): l2 coefficient
        tol (float): Stop when the max-norm weight change falls below this
        max_iters (int): Iteration cap
        w0 (np.ndarray, optional): Starting weights; zeros when omitted
        callback (Callable, optional): Called with (iteration, w) after each update

    Returns:
        Model: Trained model

    Raises:
        DivergenceError: If the weights become non-finite
    """
    if eta <= 0:
        raise ValueError(f"step size must be positive, got {eta}")
    w = np.zeros(dataset.dim) if w0 is None else np.array(w0, dtype=np.float64)
    for iteration in range(1, max_iters + 1):
        w_next = update_weights(w, gradient(w, dataset), eta, reg_lambda)
        _check_finite(w_next, f"batch iteration {iteration}")
        change = float(np.max(np.abs(w_next - w))) if w.size else 0.0
        w = w_next
        if callback is not None:
            callback(iteration, w)
        if change < tol:
            logger.debug("Batch training converged after %d iterations", iteration)
            break
    else:
        logger.debug("Batch training stopped at the iteration cap (%d)", max_iters)
    return Model(w, eta, reg_lambda)


def train_online(blocks: Iterable[LabeledDataset], eta: float = DEFAULT_ETA, reg_lambda: float = 0.0,
                 dim: Optional[int] = None, w0: Optional[np.ndarray] = None) -> Model:
    """
    Online training: one gradient update per block of K instances.

    Args:
        blocks (Iterable[LabeledDataset]): Stream of blocks, e.g. dataset.blocks(K)
        eta (float): Step size
        reg_lambda (float): l2 coefficient
        dim (int, optional): Dimension when the stream may be empty
        w0 (np.ndarray, optional): Starting weights

    Returns:
        Model: Model after consuming the stream
    """
    if eta <= 0:
        raise ValueError(f"step size must be positive, got {eta}")
    w = None if w0 is None else np.array(w0, dtype=np.float64)
    count = 0
    for block in blocks:
        if w is None:
            w = np.zeros(block.dim)
        w = update_weights(w, gradient(w, block), eta, reg_lambda)
        count += 1
        _check_finite(w, f"online block {count}")
    if w is None:
        if dim is None:
            raise ValueError("empty block stream needs an explicit dimension")
        w = np.zeros(dim)
    logger.debug("Online training consumed %d blocks", count)
    return Model(w, eta, reg_lambda)


def train_dense(X: np.ndarray, y: Sequence[int], eta: float = DEFAULT_ETA, reg_lambda: float = 0.0,
                block_size: Optional[int] = None, passes: int = 1) -> Model:
    """
    Online training on real-valued features, such as PCA projections.

    Args:
        X (np.ndarray): n x k feature matrix
        y (Sequence[int]): Labels in {-1, +1}
        block_size (int, optional): Rows per update; None updates once per pass on all rows
        passes (int): Passes over the rows
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    size = block_size or max(len(y), 1)
    w = np.zeros(X.shape[1])
    for _ in range(passes):
        for start in range(0, len(y), size):
            rows, labels = X[start:start + size], y[start:start + size]
            grad = rows.T @ (labels * expit(-labels * (rows @ w)))
            w = update_weights(w, grad, eta, reg_lambda)
            _check_finite(w, "dense training")
    return Model(w, eta, reg_lambda)


def model_to_bytes(model: Model) -> bytes:
    """Header line 'd eta reg_lambda' then d big-endian IEEE-754 doubles."""
    header = f"{model.dim} {model.eta!r} {model.reg_lambda!r}\n".encode('ascii')
    return header + model.w.astype('>f8').tobytes()


def model_from_bytes(data: bytes) -> Model:
    stream = io.BytesIO(data)
    header = stream.readline().decode('ascii').split()
    if len(header) != 3:
        raise ValueError("malformed model header")
    dim, eta, reg_lambda = int(header[0]), float(header[1]), float(header[2])
    body = stream.read()
    if len(body) != 8 * dim:
        raise ValueError(f"model body holds {len(body)} bytes, expected {8 * dim}")
    w = np.frombuffer(body, dtype='>f8').astype(np.float64)
    return Model(w, eta, reg_lambda)


def save_model(model: Model, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(model_to_bytes(model))
    return path


def load_model(path: Union[str, Path]) -> Model:
    return model_from_bytes(Path(path).read_bytes())
