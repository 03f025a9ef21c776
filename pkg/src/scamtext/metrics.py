"""Confusion matrices, per-class/macro metrics and step-wise average precision.

Scam is the positive class; ham is the negative class.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Sequence

import numpy as np

from .corpus import ClassLabel


@dataclass(frozen=True)
class ConfusionMatrix:
    tn: int = 0
    fp: int = 0
    fn: int = 0
    tp: int = 0

    def __post_init__(self):
        if min(self.tn, self.fp, self.fn, self.tp) < 0:
            raise ValueError("confusion counts must be non-negative")

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tn + other.tn, self.fp + other.fp,
                               self.fn + other.fn, self.tp + other.tp)

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp

    @property
    def errors(self) -> int:
        return self.fp + self.fn

    def to_dict(self) -> dict[str, int]:
        return asdict(self)


def confusion(y_true: Sequence[ClassLabel], y_pred: Sequence[ClassLabel]) -> ConfusionMatrix:
    if len(y_true) != len(y_pred):
        raise ValueError(f"length mismatch: {len(y_true)} truths vs {len(y_pred)} predictions")
    if not y_true:
        raise ValueError("need at least one prediction")
    tn = fp = fn = tp = 0
    for t, p in zip(y_true, y_pred):
        if t is ClassLabel.SCAM:
            if p is ClassLabel.SCAM:
                tp += 1
            else:
                fn += 1
        elif p is ClassLabel.SCAM:
            fp += 1
        else:
            tn += 1
    return ConfusionMatrix(tn, fp, fn, tp)


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def _f1(p: float, r: float) -> float:
    return _ratio(2 * p * r, p + r)


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision_scam: float
    recall_scam: float
    f1_scam: float
    precision_ham: float
    recall_ham: float
    f1_ham: float
    macro_f1: float
    pr_auc: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "MetricsReport":
        return cls(**{f.name: obj.get(f.name) for f in fields(cls)})


METRIC_NAMES = tuple(f.name for f in fields(MetricsReport))


def metrics_from_confusion(c: ConfusionMatrix, pr_auc: float | None = None) -> MetricsReport:
    """Accuracy, per-class precision/recall/F1 and macro F1; 0 for 0/0."""
    if c.total == 0:
        raise ValueError("empty confusion matrix")
    p_s, r_s = _ratio(c.tp, c.tp + c.fp), _ratio(c.tp, c.tp + c.fn)
    p_h, r_h = _ratio(c.tn, c.tn + c.fn), _ratio(c.tn, c.tn + c.fp)
    f_s, f_h = _f1(p_s, r_s), _f1(p_h, r_h)
    return MetricsReport(
        accuracy=(c.tp + c.tn) / c.total,
        precision_scam=p_s, recall_scam=r_s, f1_scam=f_s,
        precision_ham=p_h, recall_ham=r_h, f1_ham=f_h,
        macro_f1=(f_s + f_h) / 2,
        pr_auc=pr_auc,
    )


@dataclass(frozen=True)
class PrCurve:
    """(recall, precision) points at each distinct score threshold, high to low."""

    recall: np.ndarray
    precision: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.recall.tolist(), self.precision.tolist()))


def pr_curve(scores: Sequence[float], labels: Sequence[ClassLabel]) -> PrCurve:
    """Precision/recall after admitting each group of tied scores, highest first."""
    scores = np.asarray(scores, dtype=np.float64)
    if len(scores) != len(labels):
        raise ValueError("scores and labels differ in length")
    pos = np.array([label is ClassLabel.SCAM for label in labels], dtype=np.float64)
    n_pos = pos.sum()
    if n_pos == 0:
        raise ValueError("precision-recall needs at least one scam example")
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], pos[order]
    tp = np.cumsum(y)
    # last index of each tie group
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    seen = ends + 1.0
    return PrCurve(tp[ends] / n_pos, tp[ends] / seen)


def average_precision(scores, labels=None) -> float:
    """Step-wise AP, ``sum_n (R_n - R_{n-1}) * P_n`` over threshold groups.

    Accepts either a :class:`PrCurve` or ``(scores, labels)``.
    """
    curve = scores if isinstance(scores, PrCurve) else pr_curve(scores, labels)
    recall_steps = np.diff(np.r_[0.0, curve.recall])
    return float(recall_steps @ curve.precision)
