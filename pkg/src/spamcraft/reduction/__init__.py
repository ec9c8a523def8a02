"""
Dimensionality reduction module.

Contains reducers that shrink the four-gram space before training:
- Random-hyperplane LSH signatures
- Smaller hash spaces
- Document-frequency pruning
- Uniform and frequency-weighted feature sampling
- PCA (plaintext baseline only)
"""

# Import the base reducer class
from .base_reducer import BaseReducer, ProjectionState, ReductionSpec, document_frequencies

# Import specific reducer implementations
from .lsh_reducer import LSHReducer
from .hashspace_reducer import HashSpaceReducer
from .selection_reducer import SelectionReducer
from .pca_reducer import PCAReducer

__all__ = [
    'BaseReducer',
    'ProjectionState',
    'ReductionSpec',
    'document_frequencies',
    'LSHReducer',
    'HashSpaceReducer',
    'SelectionReducer',
    'PCAReducer',
]

# Reducer registry for dynamic lookup
REDUCER_REGISTRY = {
    'lsh': LSHReducer,
    'hashspace': HashSpaceReducer,
    'dfprune': SelectionReducer,
    'uniform': SelectionReducer,
    'multinomial': SelectionReducer,
    'pca': PCAReducer,
}


def get_reducer(method: str, source_dim: int, target_dim=None, seed: int = 0, df_threshold: int = 1):
    """
    Build a reducer by method name.

    Args:
        method (str): Registry key (e.g., 'lsh', 'multinomial')
        source_dim (int): Input dimension d
        target_dim (int, optional): Output dimension k (hash modulus for 'hashspace')
        seed (int): Seed of every randomized choice
        df_threshold (int): Threshold for 'dfprune'
    Returns:
        BaseReducer: An unfitted reducer for the requested method.
    Raises:
        ValueError: If the method name is not found in the registry.
    """
    reducer_cls = REDUCER_REGISTRY.get(method.lower())
    if reducer_cls is None:
        raise ValueError(f"Reducer '{method}' not found. Available: {list(REDUCER_REGISTRY.keys())}")
    spec = ReductionSpec(method.lower(), source_dim, target_dim, seed, df_threshold)
    return reducer_cls(spec)


def reducer_from_state(state: ProjectionState) -> BaseReducer:
    """Rebuild a fitted reducer from a saved projection state."""
    reducer = REDUCER_REGISTRY[state.spec.method](state.spec)
    reducer.load_state(state)
    return reducer


__all__.extend(['REDUCER_REGISTRY', 'get_reducer', 'reducer_from_state'])
