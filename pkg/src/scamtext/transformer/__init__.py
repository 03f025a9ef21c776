"""Subword tokenizer and a small encoder-only transformer classifier."""

from .bpe import BpeTokenizer, encode, train_bpe
from .model import (
    TransformerConfig,
    forward,
    grad_check,
    init_params,
    loss_and_grad,
    positional_encoding,
    predict_proba,
    train,
)

__all__ = [
    "BpeTokenizer", "TransformerConfig", "encode", "forward", "grad_check", "init_params",
    "loss_and_grad", "positional_encoding", "predict_proba", "train", "train_bpe",
]
