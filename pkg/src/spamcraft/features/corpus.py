"""
Labeled corpus ingestion.

A corpus is a directory of message files plus a label file whose lines
read ``filename<TAB>spam|ham``. Documents are loaded in lexicographic
filename order; spam maps to +1 and ham to -1.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Dict, List, Optional, Tuple, Union

from ..exceptions import CorpusError
from .fourgram import DEFAULT_HASH_SPACE, DEFAULT_PREFIX_LIMIT, FourGramExtractor
from .vectors import SparseBinaryVector

if TYPE_CHECKING:
    from ..learning.dataset import LabeledDataset

logger = logging.getLogger(__name__)

LABELS = {'spam': 1, 'ham': -1}
DEFAULT_LABEL_FILE = 'labels.tsv'


@dataclass
class CorpusManifest:
    """
    Ordered records of (document path, label) plus split counts.

    Attributes:
        records (List[Tuple[Path, str]]): Paths with their spam|ham label
        counts (Dict[str, int]): Documents per label
    """
    records: List[Tuple[Path, str]] = field(default_factory=list)
    counts: Dict[str, int] = field(default_factory=lambda: {'spam': 0, 'ham': 0})

    @property
    def total(self) -> int:
        return len(self.records)

    @property
    def spam_fraction(self) -> float:
        return self.counts['spam'] / self.total if self.total else 0.0


def read_label_file(label_file: Union[str, Path]) -> Dict[str, str]:
    """
    Parse ``filename<TAB>label`` lines.

    Raises:
        CorpusError: On a malformed line, unknown label or duplicate filename
    """
    labels: Dict[str, str] = {}
    with open(label_file, 'r', encoding='utf-8') as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip('\r\n')
            if not line.strip():
                continue
            parts = line.split('\t')
            if len(parts) != 2 or not parts[0]:
                raise CorpusError(f"{label_file}:{lineno}: expected 'filename<TAB>spam|ham'")
            name, token = parts[0], parts[1].strip().lower()
            if token not in LABELS:
                raise CorpusError(f"{label_file}:{lineno}: unknown label '{parts[1]}'")
            if name in labels:
                raise CorpusError(f"{label_file}:{lineno}: duplicate filename '{name}'")
            labels[name] = token
    return labels


def ingest_corpus(root: Union[str, Path], label_file: Optional[Union[str, Path]] = None,
                  prefix_limit: int = DEFAULT_PREFIX_LIMIT, hash_space: int = DEFAULT_HASH_SPACE,
                  workers: int = 1, limit: Optional[int] = None) -> Tuple["LabeledDataset", CorpusManifest]:
    """
    Load a labeled corpus into four-gram vectors.

    Args:
        root (Union[str, Path]): Directory holding the message files
        label_file (Union[str, Path], optional): Label file; defaults to root/labels.tsv
        prefix_limit (int): Bytes read per document
        hash_space (int): Feature-space size
        workers (int): Threads used for extraction; output order is unchanged
        limit (int, optional): Keep only the first ``limit`` documents in order

    Returns:
        Tuple[LabeledDataset, CorpusManifest]: Dataset and manifest in filename order

    Raises:
        CorpusError: If a listed file is missing or the label file is malformed
    """
    root = Path(root)
    label_file = Path(label_file) if label_file is not None else root / DEFAULT_LABEL_FILE
    if not label_file.exists():
        raise CorpusError(f"label file not found: {label_file}")
    labels = read_label_file(label_file)

    names = sorted(labels)
    if limit is not None:
        names = names[:limit]
    manifest = CorpusManifest()
    for name in names:
        path = root / name
        if not path.is_file():
            raise CorpusError(f"document listed in {label_file.name} not found: {path}")
        manifest.records.append((path, labels[name]))
        manifest.counts[labels[name]] += 1

    extractor = FourGramExtractor(prefix_limit=prefix_limit, hash_space=hash_space)
    paths = [path for path, _ in manifest.records]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vectors: List[SparseBinaryVector] = list(pool.map(extractor.extract_file, paths))
    else:
        vectors = [extractor.extract_file(path) for path in paths]

    from ..learning.dataset import LabeledDataset  # learning imports features.vectors

    y = [LABELS[label] for _, label in manifest.records]
    logger.info("Ingested %d documents from %s (%d spam, %d ham)",
                manifest.total, root, manifest.counts['spam'], manifest.counts['ham'])
    return LabeledDataset(vectors, y, hash_space), manifest


def dump_vectors(dataset: "LabeledDataset", output_path: Union[str, Path]) -> Path:
    """Write one line of space-separated sorted indices per document."""
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, 'w', encoding='utf-8') as fh:
        for x in dataset.vectors:
            fh.write(x.dump_line() + '\n')
    return output_path
