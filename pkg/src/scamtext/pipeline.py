"""Text-in, score-out classifiers used by cross-validation and the CLI.

Every classifier exposes ``fit(texts, labels, cache=None)``, ``scores(texts)``
and ``predict(texts)``. Higher scores mean "more likely scam". ``cache`` is a
plain dict shared by the classifiers of one CV fold so that TF-IDF and the
linear members of the ensemble are fitted once per fold.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from . import linear
from .corpus import ClassLabel
from .textfeat import TfIdfModel, fit_tfidf
from .transformer import bpe
from .transformer import model as tfm

MODEL_NAMES = ("logreg", "svm", "ensemble", "transformer", "constant-scam")

# Plain SGD at lr=1e-3 barely moves the toy encoder in 10 epochs; 0.1 trains it.
TRANSFORMER_DEFAULTS = {"learning_rate": 0.1, "epochs": 10, "optimizer": "sgd"}


def _labels_from_scores(scores: np.ndarray, threshold: float) -> list[ClassLabel]:
    return [ClassLabel.SCAM if s >= threshold else ClassLabel.HAM for s in scores]


class ConstantClassifier:
    """Predicts one class for every message (analytic baseline)."""

    threshold = 0.5

    def __init__(self, label: ClassLabel = ClassLabel.SCAM):
        self.label = label

    def fit(self, texts, labels, cache=None):
        return self

    def scores(self, texts) -> np.ndarray:
        return np.full(len(texts), 1.0 if self.label is ClassLabel.SCAM else 0.0)

    def predict(self, texts):
        return _labels_from_scores(self.scores(texts), self.threshold)


def _tfidf(texts, min_df: int, cache: dict | None) -> tuple[TfIdfModel, list]:
    key = ("tfidf", min_df)
    if cache is not None and key in cache:
        return cache[key]
    model = fit_tfidf(texts, min_df=min_df)
    hit = (model, model.transform_many(texts))
    if cache is not None:
        cache[key] = hit
    return hit


def _linear(kind: str, X, labels, cfg: linear.TrainConfig, cache: dict | None):
    key = ("linear", kind, cfg)
    if cache is not None and key in cache:
        return cache[key]
    trainer = linear.train_logreg if kind == "logreg" else linear.train_svm
    m = trainer(X, labels, cfg)
    if cache is not None:
        cache[key] = m
    return m


class LinearClassifier:
    """TF-IDF features followed by logistic regression or a linear SVM."""

    def __init__(self, kind: str, min_df: int = 2, train_config: linear.TrainConfig | None = None):
        if kind not in linear.KINDS:
            raise ValueError(f"unknown linear kind {kind!r}")
        self.kind = kind
        self.min_df = min_df
        self.train_config = train_config or linear.TrainConfig()
        self.threshold = 0.5 if kind == "logreg" else 0.0
        self.tfidf: TfIdfModel | None = None
        self.model: linear.LinearModel | None = None

    def fit(self, texts, labels, cache=None):
        self.tfidf, X = _tfidf(texts, self.min_df, cache)
        self.model = _linear(self.kind, X, labels, self.train_config, cache)
        self.model = replace(self.model, vocab_fingerprint=self.tfidf.vocabulary.fingerprint())
        return self

    def scores(self, texts) -> np.ndarray:
        return np.array([linear.decision_score(self.model, self.tfidf.transform(t)) for t in texts])

    def predict(self, texts):
        return _labels_from_scores(self.scores(texts), self.threshold)


class EnsembleClassifier:
    """Soft vote of the logreg probability and sigmoid of the SVM margin."""

    threshold = 0.5

    def __init__(self, min_df: int = 2, train_config: linear.TrainConfig | None = None):
        self.min_df = min_df
        self.train_config = train_config or linear.TrainConfig()
        self.tfidf: TfIdfModel | None = None
        self.model: linear.EnsembleModel | None = None

    def fit(self, texts, labels, cache=None):
        self.tfidf, X = _tfidf(texts, self.min_df, cache)
        fp = self.tfidf.vocabulary.fingerprint()
        lr = replace(_linear("logreg", X, labels, self.train_config, cache), vocab_fingerprint=fp)
        svm = replace(_linear("svm", X, labels, self.train_config, cache), vocab_fingerprint=fp)
        self.model = linear.EnsembleModel(lr, svm)
        return self

    def scores(self, texts) -> np.ndarray:
        return np.array([linear.ensemble_score(self.model, self.tfidf.transform(t)) for t in texts])

    def predict(self, texts):
        return _labels_from_scores(self.scores(texts), self.threshold)


class TransformerClassifier:
    """BPE subwords into the small encoder; score is the scam-class probability."""

    threshold = 0.5

    def __init__(self, n_merges: int = 200, max_len: int = 64, **config):
        self.n_merges = n_merges
        self.max_len = max_len
        self.config_overrides = config
        self.tokenizer: bpe.BpeTokenizer | None = None
        self.config: tfm.TransformerConfig | None = None
        self.params: tfm.Params | None = None
        self.loss_trace: list[float] = []

    def _encode(self, texts):
        ids, mask = self.tokenizer.encode_many(texts)
        # messages with no tokens are represented by a single unknown symbol
        empty = ~mask.any(axis=1)
        ids[empty, 0] = self.tokenizer.unk_id
        mask[empty, 0] = True
        return ids, mask

    def fit(self, texts, labels, cache=None):
        self.tokenizer = bpe.train_bpe(texts, self.n_merges, self.max_len)
        self.config = tfm.TransformerConfig(vocab_size=self.tokenizer.vocab_size,
                                            max_len=self.max_len, **self.config_overrides)
        ids, mask = self._encode(texts)
        y = np.array([1 if label is ClassLabel.SCAM else 0 for label in labels])
        self.params, self.loss_trace = tfm.train(tfm.init_params(self.config), self.config,
                                                 ids, mask, y)
        return self

    def scores(self, texts) -> np.ndarray:
        if len(texts) == 0:
            return np.zeros(0)
        ids, mask = self._encode(texts)
        return tfm.predict_proba(self.params, self.config, ids, mask)[:, 1]

    def predict(self, texts):
        return _labels_from_scores(self.scores(texts), self.threshold)


def build_classifier(name: str, seed: int = 0, min_df: int = 2,
                     train_config: linear.TrainConfig | None = None,
                     transformer_options: dict | None = None):
    train_config = replace(train_config or linear.TrainConfig(), seed=seed)
    if name in linear.KINDS:
        return LinearClassifier(name, min_df, train_config)
    if name == "ensemble":
        return EnsembleClassifier(min_df, train_config)
    if name == "transformer":
        opts = {"seed": seed, **TRANSFORMER_DEFAULTS, **(transformer_options or {})}
        return TransformerClassifier(**opts)
    if name == "constant-scam":
        return ConstantClassifier(ClassLabel.SCAM)
    raise ValueError(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}")
