"""Greedy byte-pair-encoding over Unicode characters."""

from __future__ import annotations

import bisect
import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ..textfeat import tokenize

PAD, UNK = "<pad>", "<unk>"
FORMAT_VERSION = 1


def _words(texts) -> Counter:
    freq: Counter[str] = Counter()
    for text in texts:
        freq.update(tokenize(text))
    return freq


def _merge_word(symbols: list[str], a: str, b: str) -> list[str]:
    out, i = [], 0
    while i < len(symbols):
        if i + 1 < len(symbols) and symbols[i] == a and symbols[i + 1] == b:
            out.append(a + b)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


@dataclass
class BpeTokenizer:
    merges: list[tuple[str, str]]
    vocab: dict[str, int]
    max_len: int = 64
    _cache: dict = field(default_factory=dict, repr=False, compare=False)
    _ranks: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self._ranks = {}
        for r, pair in enumerate(self.merges):
            self._ranks.setdefault(tuple(pair), []).append(r)

    @property
    def pad_id(self) -> int:
        return self.vocab[PAD]

    @property
    def unk_id(self) -> int:
        return self.vocab[UNK]

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def segment(self, word: str) -> list[str]:
        """Apply the merge table, in order, to one pre-tokenized word.

        Equivalent to one pass over the table, but jumps straight to the next
        merge (ranked after the last one applied) whose pair is present.
        """
        hit = self._cache.get(word)
        if hit is None:
            symbols = list(word)
            ranks = self._ranks
            floor = -1
            while len(symbols) > 1:
                present = []
                for pair in zip(symbols, symbols[1:]):
                    later = ranks.get(pair)
                    if later and later[-1] > floor:
                        present.append(later[bisect.bisect_right(later, floor)])
                if not present:
                    break
                floor = min(present)
                symbols = _merge_word(symbols, *self.merges[floor])
            hit = self._cache[word] = symbols
        return hit

    def encode(self, text: str) -> tuple[np.ndarray, np.ndarray]:
        return encode(self, text)

    def encode_many(self, texts) -> tuple[np.ndarray, np.ndarray]:
        pairs = [encode(self, t) for t in texts]
        if not pairs:
            return np.zeros((0, self.max_len), np.int64), np.zeros((0, self.max_len), bool)
        return np.stack([p[0] for p in pairs]), np.stack([p[1] for p in pairs])

    def to_dict(self) -> dict:
        return {
            "format": "scamtext.bpe",
            "version": FORMAT_VERSION,
            "max_len": self.max_len,
            "merges": [list(m) for m in self.merges],
            "symbols": sorted(self.vocab, key=self.vocab.__getitem__),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "BpeTokenizer":
        if obj.get("format") != "scamtext.bpe" or obj.get("version") != FORMAT_VERSION:
            raise ValueError("not a scamtext BPE document (or unsupported version)")
        vocab = {s: i for i, s in enumerate(obj["symbols"])}
        return cls([tuple(m) for m in obj["merges"]], vocab, obj["max_len"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_json(cls, raw: str) -> "BpeTokenizer":
        return cls.from_dict(json.loads(raw))


def train_bpe(texts, n_merges: int = 200, max_len: int = 64) -> BpeTokenizer:
    """Learn ``n_merges`` merges, each time joining the most frequent adjacent pair.

    Word boundaries come from :func:`scamtext.textfeat.tokenize`; symbols start
    as single characters. Frequency ties go to the lexicographically smallest
    pair. ``texts`` may be a corpus or an iterable of strings.
    """
    if hasattr(texts, "texts"):
        texts = texts.texts
    texts = list(texts)
    if not texts:
        raise ValueError("cannot train BPE on an empty corpus")
    if n_merges < 0:
        raise ValueError("n_merges must be >= 0")

    freq = _words(texts)
    words = {w: list(w) for w in freq}
    base = sorted({ch for w in freq for ch in w})
    merges: list[tuple[str, str]] = []
    for _ in range(n_merges):
        pairs: Counter[tuple[str, str]] = Counter()
        for w, symbols in words.items():
            n = freq[w]
            for pair in zip(symbols, symbols[1:]):
                pairs[pair] += n
        if not pairs:
            break
        best = min(pairs.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        merges.append(best)
        a, b = best
        for w, symbols in words.items():
            if len(symbols) > 1 and a in symbols:
                words[w] = _merge_word(symbols, a, b)

    symbols = [PAD, UNK] + base
    seen = set(symbols)
    for a, b in merges:
        if a + b not in seen:
            seen.add(a + b)
            symbols.append(a + b)
    return BpeTokenizer(merges, {s: i for i, s in enumerate(symbols)}, max_len)


def encode(tok: BpeTokenizer, text: str) -> tuple[np.ndarray, np.ndarray]:
    """Ids padded/truncated to ``max_len`` and a boolean mask of real positions."""
    ids = []
    for word in tokenize(text):
        ids.extend(tok.vocab.get(s, tok.unk_id) for s in tok.segment(word))
        if len(ids) >= tok.max_len:
            break
    ids = ids[: tok.max_len]
    out = np.full(tok.max_len, tok.pad_id, dtype=np.int64)
    out[: len(ids)] = ids
    mask = np.zeros(tok.max_len, dtype=bool)
    mask[: len(ids)] = True
    return out, mask
