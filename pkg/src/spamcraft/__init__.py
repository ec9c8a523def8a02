"""
Spamcraft: Privacy-Preserving Spam Filtering

A Python package for training and evaluating logistic-regression spam
classifiers over data held by separate parties, using Paillier encryption
and blinding, with the plaintext reference, feature pipeline and
dimensionality reduction needed to benchmark it.
"""

__version__ = "0.1.0"
__author__ = "Spamcraft contributors"

# Import main components for easy access
from .exceptions import *
from .crypto import *
from .features import *
from .learning import *
from .reduction import *
from .protocol import *
from .transport import *
from .benchmarking import *
from .config import RunConfig, load_config

__all__ = [
    "__version__",
    "__author__",
    # Configuration
    "RunConfig",
    "load_config",
    # Crypto
    "KeyPair",
    "PublicKey",
    "keygen",
    "CodecParams",
    # Features and learning
    "SparseBinaryVector",
    "FourGramExtractor",
    "ingest_corpus",
    "LabeledDataset",
    "Model",
    "train_batch",
    "train_online",
    "auc",
    # Reducer classes
    "BaseReducer",
    "LSHReducer",
    "HashSpaceReducer",
    "SelectionReducer",
    "PCAReducer",
    "get_reducer",
    # Protocols
    "BobTrainerState",
    "AliceTrainerState",
    "BobEvaluator",
    "OpCounters",
    "secure_compare",
    # Benchmarker classes
    "BaseBenchmarker",
    "ProtocolBenchmarker",
    "ReductionBenchmarker",
    "get_benchmarker",
]
