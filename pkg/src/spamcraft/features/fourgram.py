"""
Character four-gram feature extraction.

Each window of four consecutive bytes in the first ``prefix_limit`` bytes
of a document is packed big-endian into a 32-bit value and reduced modulo
the hash space. Features are presence-only.
"""

import logging
from pathlib import Path
from typing import Dict, Any, Union

import numpy as np

from .vectors import SparseBinaryVector

logger = logging.getLogger(__name__)

DEFAULT_PREFIX_LIMIT = 35 * 1024
DEFAULT_HASH_SPACE = 10 ** 6


def extract_fourgrams(document: bytes, prefix_limit: int = DEFAULT_PREFIX_LIMIT,
                      hash_space: int = DEFAULT_HASH_SPACE) -> SparseBinaryVector:
    """
    Turn raw document bytes into a binary four-gram vector.

    Args:
        document (bytes): Raw document, never decoded
        prefix_limit (int): Only this many leading bytes are read
        hash_space (int): Modulus m reducing the 2^32 four-gram space

    Returns:
        SparseBinaryVector: Sorted unique indices over dimension m
    """
    if hash_space < 1:
        raise ValueError(f"hash space must be >= 1, got {hash_space}")
    prefix = np.frombuffer(bytes(document[:prefix_limit]), dtype=np.uint8).astype(np.uint64)
    if prefix.size < 4:
        return SparseBinaryVector(np.empty(0, dtype=np.int64), hash_space, trusted=True)
    packed = (prefix[:-3] << np.uint64(24)) | (prefix[1:-2] << np.uint64(16)) \
        | (prefix[2:-1] << np.uint64(8)) | prefix[3:]
    indices = np.unique(packed % np.uint64(hash_space)).astype(np.int64)
    return SparseBinaryVector(indices, hash_space, trusted=True)


class FourGramExtractor:
    """
    Reusable extractor bound to one prefix limit and hash space.

    Attributes:
        prefix_limit (int): Bytes read per document
        hash_space (int): Feature-space size
    """

    def __init__(self, prefix_limit: int = DEFAULT_PREFIX_LIMIT, hash_space: int = DEFAULT_HASH_SPACE):
        self.prefix_limit = prefix_limit
        self.hash_space = hash_space
        self.logger = logging.getLogger(__name__)

    def extract(self, document: bytes) -> SparseBinaryVector:
        return extract_fourgrams(document, self.prefix_limit, self.hash_space)

    def extract_file(self, path: Union[str, Path]) -> SparseBinaryVector:
        with open(path, "rb") as fh:
            return self.extract(fh.read(self.prefix_limit))

    def get_info(self) -> Dict[str, Any]:
        return {
            'name': 'Character four-grams',
            'prefix_limit': self.prefix_limit,
            'hash_space': self.hash_space,
        }
