"""Bangla-English financial scam message classification toolkit."""

from .corpus import ClassLabel, LabeledCorpus, Message, SynthConfig, load_corpus, synthesize

__version__ = "0.1.0"

__all__ = ["ClassLabel", "LabeledCorpus", "Message", "SynthConfig", "load_corpus", "synthesize"]
