"""Message data model, corpus I/O and the synthetic corpus generator."""

from __future__ import annotations

import csv
import enum
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class CorpusError(ValueError):
    """Raised for unreadable, malformed or invalid corpora."""


class ClassLabel(str, enum.Enum):
    HAM = "ham"
    SCAM = "scam"

    @classmethod
    def parse(cls, raw: str) -> "ClassLabel":
        try:
            return cls(raw.strip().lower())
        except ValueError:
            raise CorpusError(f"unknown label {raw!r} (expected 'ham' or 'scam')") from None

    @property
    def is_positive(self) -> bool:
        return self is ClassLabel.SCAM


@dataclass(frozen=True)
class Message:
    text: str
    label: ClassLabel


@dataclass(frozen=True)
class LabeledCorpus:
    messages: tuple[Message, ...]
    provenance: str = "loaded"

    def __len__(self) -> int:
        return len(self.messages)

    def __iter__(self):
        return iter(self.messages)

    @property
    def texts(self) -> list[str]:
        return [m.text for m in self.messages]

    @property
    def labels(self) -> list[ClassLabel]:
        return [m.label for m in self.messages]

    def subset(self, indices) -> "LabeledCorpus":
        return LabeledCorpus(tuple(self.messages[i] for i in indices), self.provenance)


# ---------------------------------------------------------------------------
# loading / saving


def _infer_format(path: Path, fmt: str | None) -> str:
    if fmt is not None:
        fmt = fmt.lower()
        if fmt not in ("csv", "jsonl"):
            raise CorpusError(f"unsupported corpus format {fmt!r}")
        return fmt
    return "csv" if path.suffix.lower() == ".csv" else "jsonl"


def _record(text, label, lineno: int) -> Message:
    if not isinstance(text, str) or not isinstance(label, str):
        raise CorpusError(f"line {lineno}: 'text' and 'label' must be strings")
    try:
        return Message(text, ClassLabel.parse(label))
    except CorpusError as exc:
        raise CorpusError(f"line {lineno}: {exc}") from None


def load_corpus(path, format: str | None = None) -> LabeledCorpus:
    """Read a labeled corpus from CSV (``text,label`` header) or JSONL.

    The format is inferred from the suffix when not given. A UTF-8 BOM is
    tolerated. Errors carry the 1-based physical line number of the bad record.
    """
    path = Path(path)
    if not path.is_file():
        raise CorpusError(f"corpus file not found: {path}")
    fmt = _infer_format(path, format)
    try:
        with open(path, encoding="utf-8-sig", newline="") as fh:
            raw = fh.read()
    except UnicodeDecodeError as exc:
        raise CorpusError(f"{path}: not valid UTF-8 ({exc})") from None

    messages: list[Message] = []
    if fmt == "jsonl":
        # only "\n" ends a record; json.dumps leaves U+0085/U+2028 unescaped
        for lineno, line in enumerate(raw.split("\n"), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict) or "text" not in obj or "label" not in obj:
                raise CorpusError(f"line {lineno}: record needs 'text' and 'label' fields")
            messages.append(_record(obj["text"], obj["label"], lineno))
    else:
        reader = csv.reader(io.StringIO(raw, newline=""))
        header = next(reader, None)
        if header is None:
            raise CorpusError(f"{path}: empty file")
        cols = [h.strip().lower() for h in header]
        if "text" not in cols or "label" not in cols:
            raise CorpusError("line 1: CSV header must contain 'text' and 'label'")
        ti, li = cols.index("text"), cols.index("label")
        for row in reader:
            lineno = reader.line_num
            if not row:
                continue
            if len(row) != len(cols):
                raise CorpusError(f"line {lineno}: expected {len(cols)} fields, got {len(row)}")
            messages.append(_record(row[ti], row[li], lineno))

    if not messages:
        raise CorpusError(f"{path}: empty file")
    return LabeledCorpus(tuple(messages), "loaded")


def dumps_corpus(corpus: LabeledCorpus, format: str = "jsonl") -> str:
    if format == "jsonl":
        return "".join(
            json.dumps({"text": m.text, "label": m.label.value}, ensure_ascii=False) + "\n"
            for m in corpus
        )
    if format == "csv":
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_ALL)
        writer.writerow(["text", "label"])
        for i, m in enumerate(corpus):
            if "\x00" in m.text:
                raise CorpusError(f"message {i}: NUL characters cannot be written to CSV; use JSONL")
            writer.writerow([m.text, m.label.value])
        return buf.getvalue()
    raise CorpusError(f"unsupported corpus format {format!r}")


def save_corpus(corpus: LabeledCorpus, path, format: str | None = None) -> None:
    path = Path(path)
    fmt = _infer_format(path, format)
    path.write_text(dumps_corpus(corpus, fmt), encoding="utf-8", newline="")


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_corpus(corpus: LabeledCorpus) -> ValidationReport:
    report = ValidationReport()
    if len(corpus) == 0:
        report.violations.append("empty corpus")
        return report
    for i, m in enumerate(corpus):
        if not m.text.strip():
            report.violations.append(f"empty text at index {i}")
    if len({m.label for m in corpus}) < 2:
        report.violations.append("single class")
    dupes = [t for t, n in Counter(corpus.texts).items() if n > 1]
    if dupes:
        report.warnings.append(f"{len(dupes)} duplicate text(s)")
    return report


def class_balance(corpus: LabeledCorpus) -> tuple[int, int]:
    """Return ``(ham_count, scam_count)``."""
    scam = sum(1 for m in corpus if m.label is ClassLabel.SCAM)
    return len(corpus) - scam, scam


# ---------------------------------------------------------------------------
# synthetic generation

# Scam ham split inferred from the per-fold confusion-matrix row sums
# (310 scam + 213 ham per fold, five folds).
REFERENCE_N_TOTAL = 2615
REFERENCE_N_SCAM = 1550


@dataclass(frozen=True)
class SynthConfig:
    n_total: int = REFERENCE_N_TOTAL
    scam_fraction: float = REFERENCE_N_SCAM / REFERENCE_N_TOTAL
    scam_phone_rate: float = 0.97
    scam_url_rate: float = 0.32
    scam_len_mean: float = 72.0
    scam_len_std: float = 22.0
    ham_len_mean: float = 55.0
    ham_len_std: float = 15.0
    bangla_fraction: float = 0.16
    codemix_fraction: float = 0.04
    ham_phone_rate: float = 0.005
    ham_url_rate: float = 0.003
    # Share of messages written with the other class's wording (scams posing
    # as transaction notices, genuine alerts that sound urgent). Phone/URL
    # incidence still follows the true class.
    overlap_fraction: float = 0.06
    seed: int = 0

    def validate(self) -> None:
        if self.n_total < 10:
            raise CorpusError("n_total must be >= 10")
        if not 0.0 < self.scam_fraction < 1.0:
            raise CorpusError("scam_fraction must lie in (0, 1)")
        for name in ("scam_phone_rate", "scam_url_rate", "bangla_fraction",
                     "codemix_fraction", "ham_phone_rate", "ham_url_rate",
                     "overlap_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise CorpusError(f"{name} must lie in [0, 1]")
        if self.bangla_fraction + self.codemix_fraction > 1.0:
            raise CorpusError("bangla_fraction + codemix_fraction must not exceed 1")
        if min(self.scam_len_std, self.ham_len_std) < 0:
            raise CorpusError("length standard deviations must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise CorpusError("seed must be a 64-bit unsigned integer")


# Template pools, version 1. Placeholders: {amt} amount, {d4} four digits.
# "taka" appears only in ham pools; urgency/action words only in scam pools.
_SCAM_EN = [
    "URGENT: your account will be blocked today.",
    "Congratulations! You won a {amt} BDT prize. Claim your reward now.",
    "Your SIM will be deactivated. Renew now to keep your number.",
    "Claim your cashback bonus of {amt} before midnight.",
    "Final notice: verify your PIN immediately.",
    "You are selected for an instant loan. Apply now.",
    "Your wallet is suspended. Verify your details now.",
    "Lucky draw winner! Claim your gift now.",
    "Urgent: renew now or lose your bonus points.",
]
_SCAM_EN_FILL = [
    "Act now!", "Offer valid today only.", "Limited time offer.",
    "Do not miss this chance.", "Reply YES to confirm.", "Hurry, claim your gift now.",
    "Verify now to avoid suspension.", "Free bonus inside!",
]
_SCAM_BN = [
    "অভিনন্দন! আপনি একটি পুরস্কার জিতেছেন।",
    "জরুরি: আপনার অ্যাকাউন্ট বন্ধ হয়ে যাবে।",
    "এখনই আপনার বোনাস সংগ্রহ করুন।",
    "আপনার সিম বন্ধ হবে, এখনই নবায়ন করুন।",
    "বিশেষ অফার! বিনামূল্যে উপহার পেতে এখনই যোগাযোগ করুন।",
]
_SCAM_BN_FILL = ["আজই শেষ সুযোগ।", "দ্রুত যোগাযোগ করুন।", "সীমিত সময়ের অফার।"]
_SCAM_PHONE = {"english": ["Call {phone}", "Contact {phone} now.", "WhatsApp {phone}"],
               "bangla": ["কল করুন {phone}", "যোগাযোগ {phone}"]}
_SCAM_URL = {"english": ["Visit {url}", "Click {url}", "Login at {url}"],
             "bangla": ["ভিজিট {url}", "লিংক {url}"]}

_HAM_EN = [
    "You have successfully sent {amt} taka.",
    "Cash In of {amt} taka completed successfully.",
    "Unusual activity detected on your account ending {d4}.",
    "Your payment of {amt} taka was received successfully.",
    "Your OTP is {d4}. Do not share it with anyone.",
    "Thank you for banking with us.",
    "Your monthly statement is ready in the app.",
    "Login activity detected from a new device.",
    "Your bill has been paid successfully.",
]
_HAM_EN_FILL = [
    "Thank you.", "Balance updated.", "Have a nice day.",
    "Transaction completed successfully.", "Keep your PIN secret.",
]
_HAM_BN = [
    "আপনার লেনদেন সফলভাবে সম্পন্ন হয়েছে।",
    "{amt_bn} টাকা আপনার অ্যাকাউন্টে জমা হয়েছে।",
    "আপনার ব্যালেন্স হালনাগাদ করা হয়েছে।",
    "আপনার বিল পরিশোধ সফল হয়েছে।",
]
_HAM_BN_FILL = ["ধন্যবাদ।", "শুভ দিন।", "পিন গোপন রাখুন।"]
_HAM_PHONE = ["Helpline {phone}"]
_HAM_URL = ["Details at {url}"]

_URL_FORMS = ["http://bit.ly/{slug}", "www.{slug}-bd.com", "{slug}.xyz/claim",
              "https://{slug}.info", "{slug}-offer.net"]
_HAM_URL_FORMS = ["https://www.bkash.com/help", "www.nagad.com.bd", "https://dbbl.com.bd/support"]
_SLUGS = ["win", "bkash-bonus", "gift24", "freecash", "nagad-pay", "promo", "reward"]
_BN_DIGITS = str.maketrans("0123456789", "০১২৩৪৫৬৭৮৯")


class _Gen:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def pick(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def digits(self, n: int) -> str:
        return "".join(str(int(d)) for d in self.rng.integers(0, 10, size=n))

    def amount(self) -> str:
        return str(int(self.rng.choice([100, 200, 500, 1000, 1500, 2000, 5000, 10000, 25000])))

    def phone(self) -> str:
        body = "01" + str(int(self.rng.integers(3, 10))) + self.digits(8)
        style = int(self.rng.integers(3))
        if style == 1:
            return "+88" + body
        if style == 2:
            return body[:5] + "-" + body[5:]
        return body

    def url(self, scam: bool = True) -> str:
        if not scam:
            return self.pick(_HAM_URL_FORMS)
        return self.pick(_URL_FORMS).format(slug=self.pick(_SLUGS))

    def fill(self, template: str) -> str:
        amt = self.amount()
        return template.format(amt=amt, amt_bn=amt.translate(_BN_DIGITS), d4=self.digits(4))


def _compose(gen: _Gen, label: ClassLabel, language: str, cfg: SynthConfig, target: int,
             mimic: bool = False) -> str:
    scam = label is ClassLabel.SCAM
    wording_scam = scam != mimic
    if wording_scam:
        en, en_fill, bn, bn_fill = _SCAM_EN, _SCAM_EN_FILL, _SCAM_BN, _SCAM_BN_FILL
    else:
        en, en_fill, bn, bn_fill = _HAM_EN, _HAM_EN_FILL, _HAM_BN, _HAM_BN_FILL
    if scam:
        phone_rate, url_rate = cfg.scam_phone_rate, cfg.scam_url_rate
    else:
        phone_rate, url_rate = cfg.ham_phone_rate, cfg.ham_url_rate

    if language == "english":
        parts, fillers = [gen.fill(gen.pick(en))], en_fill
    elif language == "bangla":
        parts, fillers = [gen.fill(gen.pick(bn))], bn_fill
    else:
        parts, fillers = [gen.fill(gen.pick(bn)), gen.fill(gen.pick(en))], en_fill + bn_fill

    # Draw both flags unconditionally so the stream layout is language-independent.
    want_phone = gen.rng.random() < phone_rate
    want_url = gen.rng.random() < url_rate
    cta_lang = "bangla" if language == "bangla" else "english"
    tail = []
    if want_url:
        pool = _SCAM_URL[cta_lang] if wording_scam else _HAM_URL
        tail.append(gen.pick(pool).format(url=gen.url(scam)))
    if want_phone:
        pool = _SCAM_PHONE[cta_lang] if wording_scam else _HAM_PHONE
        tail.append(gen.pick(pool).format(phone=gen.phone()))

    length = len(" ".join(parts + tail))
    for _ in range(8):
        filler = gen.fill(gen.pick(fillers))
        if length + 1 + len(filler) > target:
            break
        parts.append(filler)
        length += 1 + len(filler)
    return " ".join(parts + tail)


def synthesize(cfg: SynthConfig | None = None) -> LabeledCorpus:
    """Generate a deterministic labeled corpus from fixed template pools.

    Class counts are exact: ``round(n_total * scam_fraction)`` scam messages
    and the remainder ham, in a seed-determined order.
    """
    cfg = cfg or SynthConfig()
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    gen = _Gen(rng)

    n_scam = int(round(cfg.n_total * cfg.scam_fraction))
    labels = [ClassLabel.SCAM] * n_scam + [ClassLabel.HAM] * (cfg.n_total - n_scam)
    order = rng.permutation(cfg.n_total)

    messages = []
    for i in order:
        label = labels[i]
        u = rng.random()
        if u < cfg.bangla_fraction:
            language = "bangla"
        elif u < cfg.bangla_fraction + cfg.codemix_fraction:
            language = "code-mixed"
        else:
            language = "english"
        if label is ClassLabel.SCAM:
            target = rng.normal(cfg.scam_len_mean, cfg.scam_len_std)
        else:
            target = rng.normal(cfg.ham_len_mean, cfg.ham_len_std)
        target = max(10, int(round(target)))
        mimic = rng.random() < cfg.overlap_fraction
        messages.append(Message(_compose(gen, label, language, cfg, target, mimic), label))
    return LabeledCorpus(tuple(messages), "synthetic")
