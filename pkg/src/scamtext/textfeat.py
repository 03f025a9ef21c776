"""Unicode tokenization, uni+bigram extraction and TF-IDF vectors."""

from __future__ import annotations

import hashlib
import json
import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

FORMAT_VERSION = 1


def _mark_class() -> str:
    # `\w` rejects combining marks, which would split Bengali words at every
    # vowel sign or virama. Collect BMP mark ranges once.
    ranges, start, prev = [], None, None
    for cp in range(0x300, 0x10000):
        if unicodedata.category(chr(cp)).startswith("M"):
            if start is None:
                start = cp
            elif cp != prev + 1:
                ranges.append((start, prev))
                start = cp
            prev = cp
    if start is not None:
        ranges.append((start, prev))
    return "".join(f"\\u{a:04x}-\\u{b:04x}" if a != b else f"\\u{a:04x}" for a, b in ranges)


_TOKEN_RE = re.compile(f"(?:[^\\W_]|[{_mark_class()}])+")


def tokenize(text: str) -> list[str]:
    """Split into maximal runs of letters/digits (plus combining marks), lowercased.

    >>> tokenize("Claim your PRIZE now!!!")
    ['claim', 'your', 'prize', 'now']
    """
    return [t.lower() for t in _TOKEN_RE.findall(text)]


def extract_ngrams(tokens: Sequence[str]) -> list[str]:
    """Unigrams in order, followed by adjacent bigrams joined by one space."""
    return list(tokens) + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]


def _doc_terms(text: str) -> list[str]:
    return extract_ngrams(tokenize(text))


@dataclass(frozen=True)
class SparseVec:
    indices: np.ndarray  # int64, strictly increasing
    values: np.ndarray  # float64, no zeros
    dimension: int

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dimension)
        out[self.indices] = self.values
        return out

    def dot(self, dense: np.ndarray) -> float:
        return float(dense[self.indices] @ self.values) if self.nnz else 0.0

    @classmethod
    def from_dict(cls, entries: dict[int, float], dimension: int) -> "SparseVec":
        keys = sorted(k for k, v in entries.items() if v != 0.0)
        return cls(np.asarray(keys, dtype=np.int64),
                   np.asarray([entries[k] for k in keys], dtype=np.float64), dimension)


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]  # index -> term, lexicographic
    document_frequency: tuple[int, ...]
    n_documents: int

    def __post_init__(self):
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.terms)})

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self._index

    def index_of(self, term: str) -> int | None:
        return self._index.get(term)

    @property
    def term_to_index(self) -> dict[str, int]:
        return dict(self._index)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for t in self.terms:
            h.update(t.encode("utf-8"))
            h.update(b"\x00")
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class TfIdfModel:
    vocabulary: Vocabulary
    idf: np.ndarray
    min_df: int = 2
    normalize: bool = True
    ngram_range: tuple[int, int] = (1, 2)

    @property
    def dimension(self) -> int:
        return len(self.vocabulary)

    def transform(self, text: str) -> SparseVec:
        return transform(self, text)

    def transform_many(self, texts: Iterable[str]) -> list[SparseVec]:
        return [transform(self, t) for t in texts]

    def to_json(self) -> str:
        return json.dumps({
            "format": "scamtext.tfidf",
            "version": FORMAT_VERSION,
            "min_df": self.min_df,
            "normalize": self.normalize,
            "ngram_range": list(self.ngram_range),
            "n_documents": self.vocabulary.n_documents,
            "terms": list(self.vocabulary.terms),
            "document_frequency": list(self.vocabulary.document_frequency),
            "idf": self.idf.tolist(),
            "fingerprint": self.vocabulary.fingerprint(),
        }, ensure_ascii=False)

    @classmethod
    def from_json(cls, raw: str) -> "TfIdfModel":
        obj = json.loads(raw)
        if obj.get("format") != "scamtext.tfidf" or obj.get("version") != FORMAT_VERSION:
            raise ValueError("not a scamtext TF-IDF model document (or unsupported version)")
        vocab = Vocabulary(tuple(obj["terms"]), tuple(obj["document_frequency"]),
                           obj["n_documents"])
        return cls(vocab, np.asarray(obj["idf"], dtype=np.float64), obj["min_df"],
                   obj["normalize"], tuple(obj["ngram_range"]))


def smoothed_idf(n_documents: int, df) -> np.ndarray | float:
    return np.log((1.0 + n_documents) / (1.0 + np.asarray(df, dtype=np.float64))) + 1.0


def fit_tfidf(texts, min_df: int = 2, normalize: bool = True) -> TfIdfModel:
    """Fit vocabulary and smoothed IDF, ``ln((1+N)/(1+df)) + 1``.

    ``texts`` may be a :class:`~scamtext.corpus.LabeledCorpus` or any iterable
    of strings. Terms are indexed in code-point lexicographic order.
    """
    if hasattr(texts, "texts"):
        texts = texts.texts
    texts = list(texts)
    if not texts:
        raise ValueError("cannot fit TF-IDF on an empty corpus")
    df: Counter[str] = Counter()
    for text in texts:
        df.update(set(_doc_terms(text)))
    terms = sorted(t for t, n in df.items() if n >= min_df)
    if not terms:
        raise ValueError(f"min_df={min_df} leaves an empty vocabulary")
    counts = tuple(df[t] for t in terms)
    vocab = Vocabulary(tuple(terms), counts, len(texts))
    return TfIdfModel(vocab, smoothed_idf(len(texts), counts), min_df, normalize)


def transform(model: TfIdfModel, text: str) -> SparseVec:
    """Raw term count times IDF, then optional L2 normalization."""
    counts: Counter[int] = Counter()
    vocab = model.vocabulary
    for term in _doc_terms(text):
        idx = vocab.index_of(term)
        if idx is not None:
            counts[idx] += 1
    if not counts:
        return SparseVec(np.zeros(0, np.int64), np.zeros(0), model.dimension)
    indices = np.fromiter(sorted(counts), dtype=np.int64, count=len(counts))
    values = np.array([counts[i] for i in indices], dtype=np.float64) * model.idf[indices]
    if model.normalize:
        values = values / math.sqrt(float(values @ values))
    return SparseVec(indices, values, model.dimension)


def idf_of(model: TfIdfModel, term: str) -> float | None:
    """IDF of ``term``, or ``None`` when it is out of vocabulary."""
    idx = model.vocabulary.index_of(term)
    return None if idx is None else float(model.idf[idx])

