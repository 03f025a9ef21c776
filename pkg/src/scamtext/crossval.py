"""Stratified k-fold cross-validation and report rendering."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import ClassLabel, LabeledCorpus, validate_corpus
from .metrics import (
    METRIC_NAMES,
    ConfusionMatrix,
    MetricsReport,
    average_precision,
    confusion,
    metrics_from_confusion,
)
from .pipeline import build_classifier

log = logging.getLogger(__name__)


class CrossValidationError(RuntimeError):
    pass


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    fold_of: np.ndarray
    seed: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)


def stratified_kfold(labels: Sequence[ClassLabel], k: int = 5, seed: int = 0) -> FoldAssignment:
    """Shuffle each class with ``seed`` and deal it round-robin into ``k`` folds.

    The deal continues where the previous class stopped, which keeps total
    fold sizes within one of each other as well.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    labels = list(labels)
    rng = np.random.default_rng(seed)
    fold_of = np.full(len(labels), -1, dtype=np.int64)
    offset = 0
    for cls in ClassLabel:
        idx = np.array([i for i, label in enumerate(labels) if label is cls], dtype=np.int64)
        if len(idx) == 0:
            continue
        if len(idx) < k:
            raise ValueError(f"class {cls.value!r} has {len(idx)} members, fewer than k={k}")
        idx = idx[rng.permutation(len(idx))]
        fold_of[idx] = (offset + np.arange(len(idx))) % k
        offset = (offset + len(idx)) % k
    return FoldAssignment(k, fold_of, seed)


# ---------------------------------------------------------------------------
# summary types


def _mean_std(reports: list[MetricsReport]) -> tuple[dict, dict]:
    mean, std = {}, {}
    for name in METRIC_NAMES:
        values = [getattr(r, name) for r in reports]
        if any(v is None for v in values):
            mean[name] = std[name] = None
            continue
        arr = np.array(values, dtype=np.float64)
        mean[name] = float(arr.mean())
        std[name] = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return mean, std


@dataclass
class ModelCv:
    per_fold: list[MetricsReport]
    per_fold_confusion: list[ConfusionMatrix]
    mean: dict = field(init=False)
    std: dict = field(init=False)

    def __post_init__(self):
        self.mean, self.std = _mean_std(self.per_fold)

    @property
    def confusion_sum(self) -> ConfusionMatrix:
        total = ConfusionMatrix()
        for c in self.per_fold_confusion:
            total = total + c
        return total

    @property
    def pooled(self) -> MetricsReport:
        """Metrics of the summed confusion matrix (each message tested once)."""
        return metrics_from_confusion(self.confusion_sum)

    def to_dict(self) -> dict:
        return {
            "per_fold": [{**r.to_dict(), "confusion": c.to_dict()}
                         for r, c in zip(self.per_fold, self.per_fold_confusion)],
            "mean": self.mean,
            "std": self.std,
            "confusion_sum": self.confusion_sum.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ModelCv":
        folds = obj["per_fold"]
        return cls([MetricsReport.from_dict(f) for f in folds],
                   [ConfusionMatrix(**f["confusion"]) for f in folds])


@dataclass
class CvSummary:
    models: dict[str, ModelCv]

    def to_dict(self) -> dict:
        return {name: m.to_dict() for name, m in self.models.items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, raw: str) -> "CvSummary":
        return cls({name: ModelCv.from_dict(m) for name, m in json.loads(raw).items()})


# ---------------------------------------------------------------------------
# harness


def run_cv(corpus: LabeledCorpus, k: int = 5, seed: int = 0,
           roster: Sequence = ("logreg", "svm", "ensemble"), **model_options) -> CvSummary:
    """Cross-validate every roster entry on identical folds.

    Roster entries are model names (see :data:`scamtext.pipeline.MODEL_NAMES`)
    or ``(name, factory)`` pairs where ``factory()`` returns an unfitted
    classifier. TF-IDF and BPE are fitted on the training folds only.
    ``model_options`` are forwarded to :func:`build_classifier`.
    """
    report = validate_corpus(corpus)
    if not report.ok:
        raise CrossValidationError("invalid corpus: " + "; ".join(report.violations))
    entries = []
    for entry in roster:
        if isinstance(entry, str):
            entries.append((entry, lambda name=entry: build_classifier(name, seed=seed, **model_options)))
        else:
            entries.append(tuple(entry))
    if len({name for name, _ in entries}) != len(entries):
        raise ValueError("duplicate model names in roster")

    labels = corpus.labels
    texts = corpus.texts
    folds = stratified_kfold(labels, k, seed)
    results = {name: ([], []) for name, _ in entries}
    for f in range(k):
        tr, te = folds.train_indices(f), folds.test_indices(f)
        tr_texts, tr_labels = [texts[i] for i in tr], [labels[i] for i in tr]
        te_texts, te_labels = [texts[i] for i in te], [labels[i] for i in te]
        cache: dict = {}
        for name, factory in entries:
            try:
                clf = factory()
                clf.fit(tr_texts, tr_labels, cache=cache)
                scores = np.asarray(clf.scores(te_texts), dtype=np.float64)
                preds = [ClassLabel.SCAM if s >= clf.threshold else ClassLabel.HAM for s in scores]
                cm = confusion(te_labels, preds)
                ap = (average_precision(scores, te_labels)
                      if ClassLabel.SCAM in te_labels else None)
            except Exception as exc:
                raise CrossValidationError(f"fold {f}, model {name!r}: {exc}") from exc
            results[name][0].append(metrics_from_confusion(cm, ap))
            results[name][1].append(cm)
            log.info("fold %d %s acc=%.4f", f, name, results[name][0][-1].accuracy)
    return CvSummary({name: ModelCv(r, c) for name, (r, c) in results.items()})


# ---------------------------------------------------------------------------
# rendering

DISPLAY_NAMES = {
    "logreg": "Logistic Regression",
    "svm": "Linear SVM",
    "ensemble": "Ensemble",
    "transformer": "Transformer",
    "constant-scam": "Constant (scam)",
}


def _pct(mean, std) -> str:
    if mean is None:
        return "n/a"
    return f"{100 * mean:.2f} ± {100 * std:.2f}"


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    line = lambda r: "  ".join(c.ljust(w) if i == 0 else c.rjust(w)
                               for i, (c, w) in enumerate(zip(r, widths)))
    rule = "-" * len(line(header))
    return "\n".join([rule, line(header), rule, *map(line, rows), rule])


def render_text(summary: CvSummary) -> str:
    perf = []
    conf = []
    for name, m in summary.models.items():
        label = DISPLAY_NAMES.get(name, name)
        perf.append([label, _pct(m.mean["accuracy"], m.std["accuracy"]),
                     _pct(m.mean["macro_f1"], m.std["macro_f1"]),
                     _pct(m.mean["pr_auc"], m.std["pr_auc"])])
        c, pooled = m.confusion_sum, m.pooled
        conf.append([label, str(c.tn), str(c.fp), str(c.fn), str(c.tp),
                     f"{100 * pooled.f1_scam:.2f}", f"{100 * pooled.f1_ham:.2f}"])
    first = _table(["Model", "Accuracy (%)", "F1 Macro (%)", "PR-AUC (%)"], perf)
    second = _table(["Model", "TN", "FP", "FN", "TP", "Scam F1 (%)", "Ham F1 (%)"], conf)
    return ("Cross-validation performance (mean ± std %)\n" + first
            + "\n\nConfusion summary (summed over folds)\n" + second + "\n")


def render_csv(summary: CvSummary) -> str:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["model", "fold", "metric", "value"])
    for name, m in summary.models.items():
        for fold, (r, c) in enumerate(zip(m.per_fold, m.per_fold_confusion)):
            for metric, value in {**r.to_dict(), **c.to_dict()}.items():
                writer.writerow([name, fold, metric, "" if value is None else repr(value)])
    return buf.getvalue()


def render_report(summary: CvSummary, format: str = "text") -> str:
    if format == "json":
        return summary.to_json()
    if format == "csv":
        return render_csv(summary)
    if format in ("text", "text-table"):
        return render_text(summary)
    raise ValueError(f"unknown report format {format!r}")
