"""Trainable parameters and training hyperparameters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError


@dataclass
class TrainConfig:
    """Hyperparameters for pseudo labeling and joint training.

    Defaults follow the reference configuration: top-20 predictions,
    ratio threshold 2, similarity threshold 0.6, 5 signal words per step,
    10 negative samples.
    """

    k: int = 20
    t: float = 2.0
    gamma: float = 0.6
    signal_words_per_step: int = 5
    negatives: int = 10
    latent_dim: int = 64
    max_len: int = 64
    learning_rate: float = 0.05
    epochs: int = 30
    batch_size: int = 16
    seed: int = 1
    pretrain_epochs: int = 20
    pretrain_learning_rate: float = 0.1
    word_init: str = "random"  # "random" or "sr"

    def __post_init__(self):
        for name in (
            "k",
            "signal_words_per_step",
            "negatives",
            "latent_dim",
            "max_len",
            "epochs",
            "batch_size",
            "pretrain_epochs",
        ):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be a positive count")
        if self.t < 1:
            raise ValidationError("t must be >= 1")
        if not -1.0 <= self.gamma <= 1.0:
            raise ValidationError("gamma must lie in [-1, 1]")
        if self.word_init not in ("random", "sr"):
            raise ValidationError(f"unknown word_init {self.word_init!r}")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ModelParams:
    """Category vectors, signal-word embeddings, classifier parameters.

    The class prior is a fixed uniform distribution and is never trained.
    """

    category_vectors: np.ndarray  # (C, d)
    word_embeddings: np.ndarray  # (V, d)
    classifier_params: np.ndarray  # flat
    prior: np.ndarray = field(default=None)  # (C,)

    def __post_init__(self):
        if self.prior is None:
            c = self.category_vectors.shape[0]
            self.prior = np.full(c, 1.0 / c, dtype=np.float64)

    @property
    def num_classes(self) -> int:
        return self.category_vectors.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.word_embeddings.shape[0]

    @property
    def latent_dim(self) -> int:
        return self.category_vectors.shape[1]

    def check_finite(self) -> bool:
        return (
            np.all(np.isfinite(self.category_vectors))
            and np.all(np.isfinite(self.word_embeddings))
            and np.all(np.isfinite(self.classifier_params))
        )


def init_params(
    num_classes: int,
    vocab_size: int,
    latent_dim: int,
    classifier_params: np.ndarray,
    rng: np.random.Generator,
    word_vectors: np.ndarray | None = None,
) -> ModelParams:
    """Category vectors and word embeddings start uniform in [-0.5/d, 0.5/d].

    `word_vectors` overrides the word-embedding init (static-representation
    seeding); it must already have shape (vocab_size, latent_dim).
    """
    scale = 0.5 / latent_dim
    category = rng.uniform(-scale, scale, size=(num_classes, latent_dim))
    words = rng.uniform(-scale, scale, size=(vocab_size, latent_dim))
    if word_vectors is not None:
        if word_vectors.shape != (vocab_size, latent_dim):
            raise ValidationError(
                f"word init shape {word_vectors.shape} != ({vocab_size}, {latent_dim})"
            )
        words = np.array(word_vectors, dtype=np.float64)
    return ModelParams(
        category_vectors=category,
        word_embeddings=words,
        classifier_params=np.asarray(classifier_params, dtype=np.float64),
    )
