"""Logistic regression and hinge-loss linear SVM trained by primal SGD.

Both learners share one optimizer. Weights are stored dense as ``scale * v``
so that L2 weight decay costs O(1) per step while sparse gradient updates
touch only the active coordinates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import ClassLabel
from .textfeat import SparseVec, Vocabulary

FORMAT_VERSION = 1
KINDS = ("logreg", "svm")


def sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    kind: str
    vocab_fingerprint: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown linear model kind {self.kind!r}")

    @property
    def dimension(self) -> int:
        return len(self.weights)

    def to_json(self) -> str:
        return json.dumps({
            "format": "scamtext.linear",
            "version": FORMAT_VERSION,
            "kind": self.kind,
            "bias": self.bias,
            "weights": self.weights.tolist(),
            "vocab_fingerprint": self.vocab_fingerprint,
        })

    @classmethod
    def from_dict(cls, obj: dict) -> "LinearModel":
        if obj.get("format") != "scamtext.linear" or obj.get("version") != FORMAT_VERSION:
            raise ValueError("not a scamtext linear model document (or unsupported version)")
        return cls(np.asarray(obj["weights"], dtype=np.float64), float(obj["bias"]),
                   obj["kind"], obj.get("vocab_fingerprint"))

    @classmethod
    def from_json(cls, raw: str) -> "LinearModel":
        return cls.from_dict(json.loads(raw))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 30
    l2_lambda: float = 1e-4
    seed: int = 0
    class_weighting: bool = False
    full_batch: bool = False

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.l2_lambda < 0:
            raise ValueError("l2_lambda must be non-negative")


# ---------------------------------------------------------------------------
# losses and gradients (dense, full batch; used for checks and batch mode)


def _targets(y: Sequence[ClassLabel]) -> np.ndarray:
    return np.array([1.0 if label is ClassLabel.SCAM else 0.0 for label in y])


def logreg_loss_grad(w: np.ndarray, b: float, X: np.ndarray, t: np.ndarray,
                     l2_lambda: float = 0.0, sample_weight: np.ndarray | None = None):
    """Mean binary cross-entropy + (lambda/2)|w|^2 and its gradient.

    ``t`` holds 0/1 targets with scam = 1. Returns ``(loss, grad_w, grad_b)``.
    """
    sw = np.ones(len(t)) if sample_weight is None else sample_weight
    z = X @ w + b
    # log(1 + e^z) - t z, stable for both signs of z
    loss = np.mean(sw * (np.logaddexp(0.0, z) - t * z)) + 0.5 * l2_lambda * (w @ w)
    p = 0.5 * (1.0 + np.tanh(0.5 * z))
    r = sw * (p - t) / len(t)
    return float(loss), X.T @ r + l2_lambda * w, float(r.sum())


def hinge_loss_grad(w: np.ndarray, b: float, X: np.ndarray, t: np.ndarray,
                    l2_lambda: float = 0.0, sample_weight: np.ndarray | None = None):
    """Mean hinge loss max(0, 1 - s(w.x + b)) with s in {-1,+1}, plus L2.

    Points with margin >= 1 contribute a zero subgradient.
    """
    sw = np.ones(len(t)) if sample_weight is None else sample_weight
    s = 2.0 * t - 1.0
    margin = s * (X @ w + b)
    active = margin < 1.0
    loss = np.mean(sw * np.maximum(0.0, 1.0 - margin)) + 0.5 * l2_lambda * (w @ w)
    r = np.where(active, -s * sw, 0.0) / len(t)
    return float(loss), X.T @ r + l2_lambda * w, float(r.sum())


# ---------------------------------------------------------------------------
# training


def _check_inputs(X: Sequence[SparseVec], y: Sequence[ClassLabel]) -> int:
    if len(X) != len(y):
        raise ValueError(f"got {len(X)} vectors but {len(y)} labels")
    if len(X) < 2:
        raise ValueError("need at least two training examples")
    if len(set(y)) < 2:
        raise ValueError("training data must contain both classes")
    dims = {x.dimension for x in X}
    if len(dims) != 1:
        raise ValueError(f"dimension mismatch among inputs: {sorted(dims)}")
    return dims.pop()


def _sample_weights(t: np.ndarray, on: bool) -> np.ndarray:
    if not on:
        return np.ones(len(t))
    n_pos = t.sum()
    n_neg = len(t) - n_pos
    return np.where(t == 1.0, len(t) / (2.0 * n_pos), len(t) / (2.0 * n_neg))


def _step_residual(kind: str, z: float, target: float) -> float:
    """d(loss)/dz for one example."""
    if kind == "logreg":
        return sigmoid(z) - target
    s = 2.0 * target - 1.0
    return -s if s * z < 1.0 else 0.0


def sgd_step(kind: str, w: np.ndarray, b: float, x: SparseVec, target: float,
             learning_rate: float, l2_lambda: float = 0.0) -> tuple[np.ndarray, float]:
    """One plain SGD update on a single example, returned as new ``(w, b)``.

    Reference form of the update the trainers apply; the bias is not decayed.
    """
    z = x.dot(w) + b
    g = _step_residual(kind, z, target)
    w = (1.0 - learning_rate * l2_lambda) * w
    if g != 0.0 and x.nnz:
        w[x.indices] -= learning_rate * g * x.values
    return w, b - learning_rate * g


@dataclass
class LossTrace:
    """Regularized training loss recorded after every epoch."""

    losses: list[float] = field(default_factory=list)


def _train(kind: str, X: Sequence[SparseVec], y: Sequence[ClassLabel], cfg: TrainConfig,
           trace: LossTrace | None = None) -> LinearModel:
    dim = _check_inputs(X, y)
    t = _targets(y)
    sw = _sample_weights(t, cfg.class_weighting)
    lr, lam = cfg.learning_rate, cfg.l2_lambda
    loss_grad = logreg_loss_grad if kind == "logreg" else hinge_loss_grad

    if cfg.full_batch:
        dense = np.vstack([x.to_dense() for x in X])
        w, b = np.zeros(dim), 0.0
        for _ in range(cfg.epochs):
            loss, gw, gb = loss_grad(w, b, dense, t, lam, sw)
            if trace is not None:
                trace.losses.append(loss)
            w = w - lr * gw
            b -= lr * gb
        if trace is not None:
            trace.losses.append(loss_grad(w, b, dense, t, lam, sw)[0])
        return LinearModel(w, float(b), kind)

    # Visit examples in a content-defined order so the result does not depend
    # on how the caller happened to order the training set.
    canon = sorted(range(len(X)), key=lambda i: (t[i], X[i].indices.tobytes(), X[i].values.tobytes()))
    X = [X[i] for i in canon]
    t, sw = t[canon], sw[canon]

    rng = np.random.default_rng(cfg.seed)
    v = np.zeros(dim)
    scale = 1.0
    b = 0.0
    decay = 1.0 - lr * lam
    if decay <= 0:
        raise ValueError("learning_rate * l2_lambda must be < 1")
    for _ in range(cfg.epochs):
        for i in rng.permutation(len(X)):
            x = X[i]
            z = scale * x.dot(v) + b
            g = sw[i] * _step_residual(kind, z, t[i])
            scale *= decay
            if g != 0.0 and x.nnz:
                v[x.indices] -= (lr * g / scale) * x.values
            b -= lr * g
            if scale < 1e-9:
                v *= scale
                scale = 1.0
        if trace is not None:
            w = scale * v
            dense_loss = 0.0
            for xi, ti, wi in zip(X, t, sw):
                z = xi.dot(w) + b
                if kind == "logreg":
                    dense_loss += wi * (np.logaddexp(0.0, z) - ti * z)
                else:
                    dense_loss += wi * max(0.0, 1.0 - (2 * ti - 1) * z)
            trace.losses.append(dense_loss / len(X) + 0.5 * lam * float(w @ w))
    if not np.all(np.isfinite(v)):
        raise FloatingPointError("training diverged (non-finite weights)")
    return LinearModel(scale * v, float(b), kind)


def train_logreg(X, y, cfg: TrainConfig | None = None, trace: LossTrace | None = None) -> LinearModel:
    """Minimise mean BCE + (lambda/2)|w|^2; scam is the positive class."""
    return _train("logreg", X, y, cfg or TrainConfig(), trace)


def train_svm(X, y, cfg: TrainConfig | None = None, trace: LossTrace | None = None) -> LinearModel:
    """Minimise mean hinge loss + (lambda/2)|w|^2 with scam = +1."""
    return _train("svm", X, y, cfg or TrainConfig(), trace)


# ---------------------------------------------------------------------------
# scoring


def _check_dim(m: LinearModel, x: SparseVec) -> None:
    if x.dimension != m.dimension:
        raise ValueError(f"vector dimension {x.dimension} != model dimension {m.dimension}")


def margin(m: LinearModel, x: SparseVec) -> float:
    _check_dim(m, x)
    return x.dot(m.weights) + m.bias


def decision_score(m: LinearModel, x: SparseVec) -> float:
    """Sigmoid probability for logreg, raw margin for the SVM."""
    z = margin(m, x)
    return sigmoid(z) if m.kind == "logreg" else z


def predict(m: LinearModel, x: SparseVec) -> ClassLabel:
    s = decision_score(m, x)
    threshold = 0.5 if m.kind == "logreg" else 0.0
    return ClassLabel.SCAM if s >= threshold else ClassLabel.HAM


@dataclass
class EnsembleModel:
    logreg: LinearModel
    svm: LinearModel

    def __post_init__(self):
        if self.logreg.dimension != self.svm.dimension:
            raise ValueError("ensemble members must share one feature space")
        if self.logreg.kind != "logreg" or self.svm.kind != "svm":
            raise ValueError("ensemble needs one logreg and one svm member")

    @property
    def dimension(self) -> int:
        return self.logreg.dimension

    def to_json(self) -> str:
        return json.dumps({
            "format": "scamtext.ensemble",
            "version": FORMAT_VERSION,
            "logreg": json.loads(self.logreg.to_json()),
            "svm": json.loads(self.svm.to_json()),
        })

    @classmethod
    def from_json(cls, raw: str) -> "EnsembleModel":
        obj = json.loads(raw)
        if obj.get("format") != "scamtext.ensemble":
            raise ValueError("not a scamtext ensemble document")
        return cls(LinearModel.from_dict(obj["logreg"]), LinearModel.from_dict(obj["svm"]))


def ensemble_score(e: EnsembleModel, x: SparseVec) -> float:
    """Equal-weight soft vote of logreg probability and sigmoid(SVM margin)."""
    return 0.5 * (decision_score(e.logreg, x) + sigmoid(margin(e.svm, x)))


def ensemble_predict(e: EnsembleModel, x: SparseVec) -> ClassLabel:
    return ClassLabel.SCAM if ensemble_score(e, x) >= 0.5 else ClassLabel.HAM


def top_features(m: LinearModel, vocab: Vocabulary, k: int = 20,
                 direction: str = "scam") -> list[tuple[str, float]]:
    """Largest weights (scam) descending, or smallest (ham) ascending.

    Ties are broken by term in code-point order.
    """
    if len(vocab) != m.dimension:
        raise ValueError(f"vocabulary size {len(vocab)} != model dimension {m.dimension}")
    if k < 1:
        raise ValueError("k must be >= 1")
    sign = {"scam": -1.0, "ham": 1.0}.get(direction)
    if sign is None:
        raise ValueError(f"direction must be 'scam' or 'ham', got {direction!r}")
    ranked = sorted(range(m.dimension), key=lambda i: (sign * m.weights[i], vocab.terms[i]))
    return [(vocab.terms[i], float(m.weights[i])) for i in ranked[:k]]
