"""Word distribution learner: exact softmax and its negative-sampling form."""

from __future__ import annotations

import numpy as np
from scipy.special import log_expit, logsumexp

from ..errors import ValidationError
from .params import ModelParams


def _check_index(name: str, idx: int, bound: int) -> None:
    if not 0 <= idx < bound:
        raise ValidationError(f"{name} {idx} out of range [0, {bound})")


def word_logprob_exact(word_index: int, class_index: int, params: ModelParams) -> float:
    """log p(word | class) under the full softmax over the signal vocabulary.

    Normalizes the class vector's inner products against every vocabulary
    embedding with a stable log-sum-exp.
    """
    _check_index("word index", word_index, params.vocab_size)
    _check_index("class index", class_index, params.num_classes)
    scores = params.word_embeddings @ params.category_vectors[class_index]
    return float(scores[word_index] - logsumexp(scores))


def word_logprob_ns(
    word_index: int,
    class_index: int,
    negative_indices,
    params: ModelParams,
) -> float:
    """Negative-sampling approximation of log p(word | class).

    log sigma(v_c . w) plus log sigma(-v_c . w') summed over the noise
    words; logsigmoid is computed as -softplus(-x) for stability.
    """
    _check_index("word index", word_index, params.vocab_size)
    _check_index("class index", class_index, params.num_classes)
    negative_indices = np.asarray(negative_indices, dtype=np.int64)
    if negative_indices.size and (
        negative_indices.min() < 0 or negative_indices.max() >= params.vocab_size
    ):
        raise ValidationError("negative index out of vocabulary range")
    v = params.category_vectors[class_index]
    pos = float(params.word_embeddings[word_index] @ v)
    neg = params.word_embeddings[negative_indices] @ v
    return float(log_expit(pos) + log_expit(-neg).sum())
