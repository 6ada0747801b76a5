"""Contrastive signal-language pretraining and retrieval."""

from . import contrastive, dataset, encoders, evaluation, numerics, retrieval  # noqa: F401

__version__ = "0.1.0"
