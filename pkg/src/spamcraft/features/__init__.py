"""
Feature pipeline.

Contains the sparse binary vector type, character four-gram extraction
and labeled corpus ingestion.
"""

from .vectors import SparseBinaryVector
from .fourgram import DEFAULT_HASH_SPACE, DEFAULT_PREFIX_LIMIT, FourGramExtractor, extract_fourgrams
from .corpus import CorpusManifest, dump_vectors, ingest_corpus, read_label_file

__all__ = [
    'SparseBinaryVector',
    'DEFAULT_HASH_SPACE',
    'DEFAULT_PREFIX_LIMIT',
    'FourGramExtractor',
    'extract_fourgrams',
    'CorpusManifest',
    'dump_vectors',
    'ingest_corpus',
    'read_label_file',
]
