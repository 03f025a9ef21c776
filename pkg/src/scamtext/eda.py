"""Structural and script-based indicators of scam vs ham messages."""

from __future__ import annotations

import enum
import json
import re
import unicodedata
from dataclasses import dataclass

from .corpus import ClassLabel, LabeledCorpus

LENGTH_BIN_WIDTH = 10

_BENGALI_LO, _BENGALI_HI = 0x0980, 0x09FF
_TLDS = "com|net|org|bd|xyz|info|ly"
_URL_RE = re.compile(
    r"https?://"
    r"|(?<![^\s(\[<\"'])www\."
    rf"|(?<![\w-])[^\W_][\w-]*\.(?:{_TLDS})(?![^\W_])",
    re.IGNORECASE,
)
_DIGIT_GAP_RE = re.compile(r"(?<=\d)[ \-]+(?=\d)")
_DIGIT_RUN_RE = re.compile(r"\+?\d+")
_BD_MOBILE_RE = re.compile(r"(?:\+?88)?01[3-9]\d{8}")


class Language(str, enum.Enum):
    ENGLISH = "english"
    BANGLA = "bangla"
    CODE_MIXED = "code-mixed"


def digit_count(text: str) -> int:
    """Number of Unicode decimal digits (Bengali ০-৯ included)."""
    return sum(1 for ch in text if ch.isdecimal())


def detect_url(text: str) -> bool:
    return _URL_RE.search(text) is not None


def _ascii_digits(text: str) -> str:
    return "".join(str(unicodedata.decimal(ch)) if ch.isdecimal() else ch for ch in text)


def detect_phone(text: str) -> bool:
    """Bangladeshi mobile number (optionally +88-prefixed) or any run of >= 10 digits.

    Spaces and hyphens between digits are removed before matching, so
    ``017-1234-5678`` and ``01712 345678`` both count.
    """
    compact = _DIGIT_GAP_RE.sub("", _ascii_digits(text))
    for run in _DIGIT_RUN_RE.findall(compact):
        digits = run.lstrip("+")
        if len(digits) >= 10 or _BD_MOBILE_RE.fullmatch(run):
            return True
    return False


def _is_bengali_letter(ch: str) -> bool:
    # Vowel signs and virama are marks, but they are part of the written word.
    return (_BENGALI_LO <= ord(ch) <= _BENGALI_HI
            and unicodedata.category(ch)[0] in "LM")


def _is_latin_letter(ch: str) -> bool:
    return ch.isalpha() and ord(ch) < 0x250


def classify_language(text: str) -> Language:
    b = sum(1 for ch in text if _is_bengali_letter(ch))
    latin = sum(1 for ch in text if _is_latin_letter(ch))
    if b + latin == 0:
        return Language.ENGLISH
    r = b / (b + latin)
    if r >= 0.9:
        return Language.BANGLA
    if r <= 0.1:
        return Language.ENGLISH
    return Language.CODE_MIXED


@dataclass(frozen=True)
class StructuralFeatures:
    char_len: int
    digit_count: int
    has_url: bool
    has_phone: bool
    language: Language

    @classmethod
    def of(cls, text: str) -> "StructuralFeatures":
        return cls(len(text), digit_count(text), detect_url(text), detect_phone(text),
                   classify_language(text))


def _histogram(values: list[int], width: int) -> list[tuple[int, int]]:
    """Contiguous ``(bin_start, count)`` pairs from 0 up to the last occupied bin."""
    if not values:
        return []
    counts = [0] * (max(values) // width + 1)
    for v in values:
        counts[v // width] += 1
    return [(i * width, c) for i, c in enumerate(counts)]


@dataclass
class ClassSummary:
    label: ClassLabel
    count: int
    length_histogram: list[tuple[int, int]]
    digit_histogram: list[tuple[int, int]]
    url_rate: float
    phone_rate: float
    language_composition: dict[str, float]
    mean_length: float

    def to_dict(self) -> dict:
        return {
            "label": self.label.value,
            "count": self.count,
            "mean_length": self.mean_length,
            "url_rate": self.url_rate,
            "phone_rate": self.phone_rate,
            "language_composition": self.language_composition,
            "length_histogram": [list(p) for p in self.length_histogram],
            "digit_histogram": [list(p) for p in self.digit_histogram],
        }


def summarize(corpus: LabeledCorpus) -> dict[ClassLabel, ClassSummary]:
    """Per-class structural summary; classes absent from the corpus are omitted."""
    if len(corpus) == 0:
        raise ValueError("cannot summarize an empty corpus")
    grouped: dict[ClassLabel, list[StructuralFeatures]] = {}
    for m in corpus:
        grouped.setdefault(m.label, []).append(StructuralFeatures.of(m.text))

    out = {}
    for label in ClassLabel:
        feats = grouped.get(label)
        if not feats:
            continue
        n = len(feats)
        langs = {lang.value: sum(f.language is lang for f in feats) / n for lang in Language}
        out[label] = ClassSummary(
            label=label,
            count=n,
            length_histogram=_histogram([f.char_len for f in feats], LENGTH_BIN_WIDTH),
            digit_histogram=_histogram([f.digit_count for f in feats], 1),
            url_rate=sum(f.has_url for f in feats) / n,
            phone_rate=sum(f.has_phone for f in feats) / n,
            language_composition=langs,
            mean_length=sum(f.char_len for f in feats) / n,
        )
    return out


def summary_to_json(summary: dict[ClassLabel, ClassSummary]) -> str:
    return json.dumps({label.value: s.to_dict() for label, s in summary.items()},
                      ensure_ascii=False, indent=2)


def histogram_csv(pairs: list[tuple[int, int]]) -> str:
    return "bin_start,count\n" + "".join(f"{a},{c}\n" for a, c in pairs)
