"""Negative-sampled evidence lower bound and its analytic gradients.

Each training step pairs one document with one of its signal words. The
step contribution is the expectation under the classifier's class
distribution of the negative-sampled word log-probability plus the log
prior, plus the classifier entropy. The class expectation is computed
exactly (summed over all classes, never sampled); one negative set is
drawn per step and shared across classes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit

from ..errors import ValidationError
from .classifiers import DocFeatures, softmax
from .params import ModelParams

Q_FLOOR = 1e-12  # entropy clamp so 0 log 0 contributes exactly 0


@dataclass(frozen=True)
class BatchItem:
    """One document with its sampled (signal word, negative set) steps."""

    features: DocFeatures
    steps: tuple[tuple[int, np.ndarray], ...]


@dataclass
class Grads:
    category_vectors: np.ndarray
    word_embeddings: np.ndarray
    classifier: np.ndarray


def elbo_term(
    q: np.ndarray,
    word_index: int,
    negative_indices,
    params: ModelParams,
) -> float:
    """Objective contribution of a single (document, signal word) step.

    sum_c q_c [logprob_ns(word, c) + log prior_c] - sum_c q_c log q_c.
    """
    q = np.asarray(q, dtype=np.float64)
    if abs(q.sum() - 1.0) > 1e-9:
        raise ValidationError("q must sum to 1")
    negs = np.asarray(negative_indices, dtype=np.int64)
    v = params.category_vectors  # (C, d)
    pos = v @ params.word_embeddings[word_index]  # (C,)
    neg = v @ params.word_embeddings[negs].T  # (C, N)
    logprob = log_expit(pos) + log_expit(-neg).sum(axis=1)
    qc = np.clip(q, Q_FLOOR, None)
    entropy = -float(q @ np.log(qc))
    return float(q @ (logprob + np.log(params.prior))) + entropy


def _step_forward(params: ModelParams, word_index: int, negs: np.ndarray):
    v = params.category_vectors
    pos = v @ params.word_embeddings[word_index]
    neg = v @ params.word_embeddings[negs].T
    logprob = log_expit(pos) + log_expit(-neg).sum(axis=1)
    return pos, neg, logprob


def batch_objective(batch, params: ModelParams, classifier) -> float:
    """Objective value over a batch of items (no gradients)."""
    total = 0.0
    log_prior = np.log(params.prior)
    for item in batch:
        z, _ = classifier.logits(item.features, params.classifier_params)
        q = softmax(z)
        qc = np.clip(q, Q_FLOOR, None)
        entropy = -float(q @ np.log(qc))
        for word_index, negs in item.steps:
            _, _, logprob = _step_forward(params, word_index, np.asarray(negs))
            total += float(q @ (logprob + log_prior)) + entropy
    return total


def batch_objective_and_grads(batch, params: ModelParams, classifier):
    """Objective value and exact gradients for ascent.

    Gradients flow into category vectors, the positive and negative word
    embeddings, and the classifier parameters via both the expectation
    and the entropy term.
    """
    grads = Grads(
        category_vectors=np.zeros_like(params.category_vectors),
        word_embeddings=np.zeros_like(params.word_embeddings),
        classifier=np.zeros_like(params.classifier_params),
    )
    total = 0.0
    log_prior = np.log(params.prior)
    v = params.category_vectors
    for item in batch:
        z, cache = classifier.logits(item.features, params.classifier_params)
        q = softmax(z)
        qc = np.clip(q, Q_FLOOR, None)
        log_q = np.log(qc)
        entropy = -float(q @ log_q)
        g_q = np.zeros_like(q)  # d(objective)/dq accumulated over steps
        for word_index, negs in item.steps:
            negs = np.asarray(negs, dtype=np.int64)
            pos, neg, logprob = _step_forward(params, word_index, negs)
            contrib = logprob + log_prior
            total += float(q @ contrib) + entropy
            g_q += contrib - log_q - 1.0

            # d logsigmoid(x)/dx = sigmoid(-x)
            w_pos = q * expit(-pos)  # (C,)
            grads.category_vectors += np.outer(
                w_pos, params.word_embeddings[word_index]
            )
            grads.word_embeddings[word_index] += w_pos @ v

            w_neg = q[:, None] * expit(neg)  # (C, N)
            grads.category_vectors -= w_neg @ params.word_embeddings[negs]
            # negatives may repeat; scatter-add keeps duplicates additive
            np.add.at(grads.word_embeddings, negs, -(w_neg.T @ v))

        # softmax Jacobian: dz_i = q_i (g_i - sum_c q_c g_c)
        dz = q * (g_q - float(q @ g_q))
        classifier.backward(cache, dz, params.classifier_params, grads.classifier)
    return total, grads
