"""Weakly supervised text classification from label names alone.

The pipeline probes a masked language model with a cloze prompt to
collect per-document signal words, grounds them in static token
representations, assigns similarity-based pseudo labels, filters
category-ambiguous words, and jointly trains a latent-class word model
with a document classifier.
"""

__version__ = "0.1.0"

from .errors import (
    CannotSampleError,
    ClozeClassError,
    DivergenceError,
    MissingArtifactError,
    ParseError,
    TransportError,
    UnresolvableWordsError,
    ValidationError,
)

__all__ = [
    "CannotSampleError",
    "ClozeClassError",
    "DivergenceError",
    "MissingArtifactError",
    "ParseError",
    "TransportError",
    "UnresolvableWordsError",
    "ValidationError",
    "__version__",
]
