"""
Tests for sparse vectors, four-gram extraction and corpus ingestion.
"""

import numpy as np
import pytest

from spamcraft.exceptions import CorpusError
from spamcraft.features import (
    FourGramExtractor,
    SparseBinaryVector,
    dump_vectors,
    extract_fourgrams,
    ingest_corpus,
    read_label_file,
)


def _write_corpus(root, docs, labels_text=None):
    root.mkdir(parents=True, exist_ok=True)
    for name, (body, _) in docs.items():
        (root / name).write_bytes(body)
    if labels_text is None:
        labels_text = "".join(f"{name}\t{label}\n" for name, (_, label) in docs.items())
    (root / "labels.tsv").write_text(labels_text, encoding="utf-8")
    return root


class TestSparseBinaryVector:
    """Index invariants and dense views."""

    def test_from_indices_sorts_and_dedups(self):
        x = SparseBinaryVector.from_indices([5, 1, 5, 3], 8)
        assert x.indices.tolist() == [1, 3, 5]
        assert x.nnz == 3
        assert len(x) == 3

    def test_unsorted_rejected(self):
        with pytest.raises(ValueError):
            SparseBinaryVector([3, 1], 8)

    def test_duplicates_rejected(self):
        with pytest.raises(ValueError):
            SparseBinaryVector([1, 1], 8)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            SparseBinaryVector([0, 8], 8)

    def test_dense_and_dot(self):
        x = SparseBinaryVector([0, 2], 4)
        assert x.to_dense().tolist() == [1.0, 0.0, 1.0, 0.0]
        assert x.dot(np.array([0.5, 10.0, -0.25, 3.0])) == pytest.approx(0.25)

    def test_equality_and_hash(self):
        a = SparseBinaryVector([1, 2], 4)
        b = SparseBinaryVector.from_indices([2, 1], 4)
        assert a == b
        assert hash(a) == hash(b)
        assert a != SparseBinaryVector([1, 2], 5)

    def test_indices_are_read_only(self):
        x = SparseBinaryVector([1, 2], 4)
        with pytest.raises(ValueError):
            x.indices[0] = 3

    def test_dump_line(self):
        assert SparseBinaryVector([0, 7, 42], 100).dump_line() == "0 7 42"


class TestFourGrams:
    """Character four-gram extraction."""

    def test_short_document_is_empty(self):
        assert extract_fourgrams(b"abc").nnz == 0
        assert extract_fourgrams(b"").nnz == 0

    def test_single_window_value(self):
        x = extract_fourgrams(b"abcd")
        assert x.indices.tolist() == [0x61626364 % 10 ** 6]
        assert x.dim == 10 ** 6

    def test_two_windows(self):
        x = extract_fourgrams(b"abcde", hash_space=1 << 32)
        assert x.indices.tolist() == sorted([0x61626364, 0x62636465])

    def test_repeated_windows_collapse(self):
        assert extract_fourgrams(b"abcdabcdabcd", hash_space=1 << 32).nnz == 4

    def test_prefix_rule(self):
        head = bytes(range(256)) * 4
        a = extract_fourgrams(head + b"tail one", prefix_limit=len(head))
        b = extract_fourgrams(head + b"another different tail", prefix_limit=len(head))
        assert a == b

    def test_cardinality_bound(self):
        doc = np.random.default_rng(3).integers(0, 256, 5000, dtype=np.uint8).tobytes()
        assert extract_fourgrams(doc, prefix_limit=1000, hash_space=50).nnz <= 50
        assert extract_fourgrams(doc, prefix_limit=100).nnz <= 97

    def test_deterministic(self):
        doc = b"Subject: cheap meds, act now!"
        assert extract_fourgrams(doc) == extract_fourgrams(doc)

    def test_invalid_hash_space(self):
        with pytest.raises(ValueError):
            extract_fourgrams(b"abcd", hash_space=0)

    def test_extractor_reads_files(self, tmp_path):
        path = tmp_path / "msg"
        path.write_bytes(b"hello world")
        extractor = FourGramExtractor(prefix_limit=8, hash_space=1000)
        assert extractor.extract_file(path) == extract_fourgrams(b"hello wo", hash_space=1000)
        assert extractor.get_info()['hash_space'] == 1000


class TestCorpus:
    """Labeled corpus ingestion."""

    def test_ingest_order_and_labels(self, tmp_path):
        root = _write_corpus(tmp_path / "c", {
            "b.eml": (b"buy cheap pills now", "spam"),
            "a.eml": (b"meeting moved to noon", "ham"),
            "c.eml": (b"WIN A PRIZE TODAY", "SPAM"),
        })
        dataset, manifest = ingest_corpus(root, hash_space=1000)
        assert [p.name for p, _ in manifest.records] == ["a.eml", "b.eml", "c.eml"]
        assert dataset.labels.tolist() == [-1, 1, 1]
        assert manifest.counts == {'spam': 2, 'ham': 1}
        assert manifest.spam_fraction == pytest.approx(2 / 3)
        assert dataset.vectors[0] == extract_fourgrams(b"meeting moved to noon", hash_space=1000)

    def test_parallel_ingest_matches_serial(self, tmp_path):
        docs = {f"m{i:03d}": (f"message number {i} body".encode(), "spam" if i % 3 else "ham")
                for i in range(30)}
        root = _write_corpus(tmp_path / "c", docs)
        serial, _ = ingest_corpus(root, hash_space=5000, workers=1)
        threaded, _ = ingest_corpus(root, hash_space=5000, workers=4)
        assert serial.vectors == threaded.vectors

    def test_limit(self, tmp_path):
        root = _write_corpus(tmp_path / "c", {f"m{i}": (b"text body", "ham") for i in range(5)})
        dataset, manifest = ingest_corpus(root, hash_space=100, limit=2)
        assert dataset.n == 2
        assert manifest.total == 2

    def test_empty_label_file(self, tmp_path):
        root = _write_corpus(tmp_path / "c", {}, labels_text="")
        dataset, manifest = ingest_corpus(root, hash_space=100)
        assert dataset.n == 0
        assert manifest.total == 0

    def test_duplicate_filename(self, tmp_path):
        root = _write_corpus(tmp_path / "c", {"a": (b"x", "ham")}, labels_text="a\tham\na\tspam\n")
        with pytest.raises(CorpusError):
            ingest_corpus(root)

    def test_unknown_label(self, tmp_path):
        root = _write_corpus(tmp_path / "c", {"a": (b"x", "ham")}, labels_text="a\tmaybe\n")
        with pytest.raises(CorpusError):
            read_label_file(root / "labels.tsv")

    def test_malformed_line(self, tmp_path):
        root = _write_corpus(tmp_path / "c", {"a": (b"x", "ham")}, labels_text="a ham\n")
        with pytest.raises(CorpusError):
            ingest_corpus(root)

    def test_missing_document(self, tmp_path):
        root = _write_corpus(tmp_path / "c", {"a": (b"x", "ham")}, labels_text="a\tham\nb\tspam\n")
        with pytest.raises(CorpusError):
            ingest_corpus(root)

    def test_missing_label_file(self, tmp_path):
        with pytest.raises(CorpusError):
            ingest_corpus(tmp_path)

    def test_dump_vectors(self, tmp_path):
        root = _write_corpus(tmp_path / "c", {"a": (b"abcd", "ham"), "b": (b"ab", "spam")})
        dataset, _ = ingest_corpus(root, hash_space=1 << 32)
        out = dump_vectors(dataset, tmp_path / "out" / "vectors.txt")
        assert out.read_text().splitlines() == [str(0x61626364), ""]
