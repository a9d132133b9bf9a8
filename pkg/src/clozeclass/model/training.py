"""Classifier pretraining and joint gradient-ascent training.

Determinism contract: every random decision flows from a single seed
through named SeedSequence children, so the standalone pretraining stage
and the pretraining run inside train() draw identical numbers, and two
runs with the same seed produce bitwise-identical parameters.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from ..errors import DivergenceError, ValidationError
from .classifiers import ClassifierSpec, DocFeatures, make_classifier, softmax
from .objective import BatchItem, batch_objective, batch_objective_and_grads
from .params import ModelParams, TrainConfig, init_params
from .vocab import SignalVocab, sample_negatives

log = logging.getLogger(__name__)

LOSS_FLOOR = 1e-12

# named SeedSequence children, in spawn order
_STREAMS = ("classifier_init", "pretrain", "latent_init", "loop", "eval")


def seed_generators(seed: int) -> dict[str, np.random.Generator]:
    """One independent generator per named training stream."""
    children = np.random.SeedSequence(seed).spawn(len(_STREAMS))
    return {
        name: np.random.default_rng(child)
        for name, child in zip(_STREAMS, children)
    }


@dataclass(frozen=True)
class TrainItem:
    """One document ready for training.

    `signal_indices` are vocabulary indices of the document's surviving
    signal words; documents with none are used for pretraining only.
    """

    doc_id: str
    features: DocFeatures
    signal_indices: tuple[int, ...]


@dataclass(frozen=True)
class PretrainResult:
    classifier_params: np.ndarray
    losses: tuple[float, ...]  # mean cross-entropy per epoch


@dataclass(frozen=True)
class TrainResult:
    params: ModelParams
    epoch_elbos: tuple[float, ...]  # running per-step mean during each epoch
    eval_elbos: tuple[float, ...]  # frozen-negative full-set mean after each epoch
    epoch_seconds: tuple[float, ...]
    pretrain_losses: tuple[float, ...]


def pretrain_classifier(
    features: list[DocFeatures],
    labels: list[int],
    spec: ClassifierSpec,
    config: TrainConfig,
    rng_init: np.random.Generator,
    rng_shuffle: np.random.Generator,
) -> PretrainResult:
    """Fit the classifier to pseudo labels by mini-batch gradient descent."""
    if not features:
        raise ValidationError("cannot pretrain on an empty pseudo-labeled set")
    if len(features) != len(labels):
        raise ValidationError("features and labels length mismatch")
    for label in labels:
        if not 0 <= label < spec.num_classes:
            raise ValidationError(f"pseudo label {label} out of range")
    classifier = make_classifier(spec)
    params = classifier.init_params(rng_init)
    labels = np.asarray(labels, dtype=np.int64)
    losses = []
    for _ in range(config.pretrain_epochs):
        order = rng_shuffle.permutation(len(features))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            chunk = order[start : start + config.batch_size]
            grad = np.zeros_like(params)
            for i in chunk:
                z, cache = classifier.logits(features[i], params)
                probs = softmax(z)
                epoch_loss -= float(
                    np.log(max(probs[labels[i]], LOSS_FLOOR))
                )
                dz = probs.copy()
                dz[labels[i]] -= 1.0
                classifier.backward(cache, dz, params, grad)
            params -= config.pretrain_learning_rate * grad / len(chunk)
        losses.append(epoch_loss / len(features))
    return PretrainResult(classifier_params=params, losses=tuple(losses))


def _trainable(items) -> list[TrainItem]:
    return [item for item in items if item.signal_indices]


def _frozen_eval_batch(
    items: list[TrainItem], vocab: SignalVocab, config: TrainConfig, rng
) -> list[BatchItem]:
    """Negatives for every (document, signal word) pair, drawn once.

    The same sets are reused after every epoch so the per-epoch average
    objective is comparable across epochs.
    """
    batch = []
    for item in items:
        steps = tuple(
            (idx, sample_negatives(vocab, config.negatives, idx, rng))
            for idx in item.signal_indices
        )
        batch.append(BatchItem(features=item.features, steps=steps))
    return batch


def train(
    items: list[TrainItem],
    vocab: SignalVocab,
    spec: ClassifierSpec,
    config: TrainConfig,
    pretrain_features: list[DocFeatures] | None = None,
    pretrain_labels: list[int] | None = None,
    pretrained: PretrainResult | None = None,
    word_vectors: np.ndarray | None = None,
) -> TrainResult:
    """Joint gradient ascent on the word model and document classifier.

    The classifier starts from `pretrained` when given (the standalone
    pretraining stage produces it); otherwise the pseudo-labeled subset
    must arrive as `pretrain_features`/`pretrain_labels` and pretraining
    runs here. Either path yields identical parameters for the same
    seed, because each random stream has its own seed child.
    """
    trainable = _trainable(items)
    if not trainable:
        raise ValidationError("no document has surviving signal words to train on")
    if config.word_init == "sr" and word_vectors is None:
        raise ValidationError(
            "word_init 'sr' requires static-representation word vectors"
        )
    rngs = seed_generators(config.seed)

    if pretrained is None:
        if pretrain_features is None or pretrain_labels is None:
            raise ValidationError(
                "either pretrained classifier params or a pseudo-labeled "
                "pretraining set is required"
            )
        pretrained = pretrain_classifier(
            pretrain_features,
            pretrain_labels,
            spec,
            config,
            rngs["classifier_init"],
            rngs["pretrain"],
        )

    params = init_params(
        num_classes=spec.num_classes,
        vocab_size=len(vocab),
        latent_dim=config.latent_dim,
        classifier_params=np.array(pretrained.classifier_params, dtype=np.float64),
        rng=rngs["latent_init"],
        word_vectors=word_vectors if config.word_init == "sr" else None,
    )
    classifier = make_classifier(spec)
    eval_batch = _frozen_eval_batch(trainable, vocab, config, rngs["eval"])
    eval_steps = sum(len(b.steps) for b in eval_batch)

    loop_rng = rngs["loop"]
    r = config.signal_words_per_step
    epoch_elbos, eval_elbos, epoch_seconds = [], [], []
    for epoch in range(config.epochs):
        started = time.monotonic()
        order = loop_rng.permutation(len(trainable))
        epoch_value, epoch_steps = 0.0, 0
        for batch_start in range(0, len(order), config.batch_size):
            chunk = order[batch_start : batch_start + config.batch_size]
            batch = []
            for i in chunk:
                item = trainable[i]
                idxs = item.signal_indices
                if len(idxs) > r:
                    # R signal words per document per epoch, without replacement
                    picks = loop_rng.choice(len(idxs), size=r, replace=False)
                    chosen = [idxs[p] for p in picks]
                else:
                    chosen = list(idxs)
                steps = tuple(
                    (idx, sample_negatives(vocab, config.negatives, idx, loop_rng))
                    for idx in chosen
                )
                batch.append(BatchItem(features=item.features, steps=steps))
            value, grads = batch_objective_and_grads(batch, params, classifier)
            n_steps = sum(len(b.steps) for b in batch)
            scale = config.learning_rate / n_steps
            params.category_vectors += scale * grads.category_vectors
            params.word_embeddings += scale * grads.word_embeddings
            params.classifier_params += scale * grads.classifier
            if not np.isfinite(value) or not params.check_finite():
                ids = ", ".join(trainable[i].doc_id for i in chunk)
                raise DivergenceError(
                    f"non-finite objective or parameters in epoch {epoch}, "
                    f"batch starting at {batch_start} (docs: {ids}); "
                    f"objective={value!r}"
                )
            epoch_value += value
            epoch_steps += n_steps
        epoch_elbos.append(epoch_value / epoch_steps)
        eval_elbos.append(
            batch_objective(eval_batch, params, classifier) / eval_steps
        )
        epoch_seconds.append(time.monotonic() - started)
        log.debug(
            "epoch %d: mean objective %.6f (frozen eval %.6f)",
            epoch,
            epoch_elbos[-1],
            eval_elbos[-1],
        )
    return TrainResult(
        params=params,
        epoch_elbos=tuple(epoch_elbos),
        eval_elbos=tuple(eval_elbos),
        epoch_seconds=tuple(epoch_seconds),
        pretrain_losses=pretrained.losses,
    )


def predict(
    features_list, spec: ClassifierSpec, params: ModelParams
) -> np.ndarray:
    """Most probable class per document; ties go to the lowest index."""
    classifier = make_classifier(spec)
    out = np.empty(len(features_list), dtype=np.int64)
    for i, feats in enumerate(features_list):
        z, _ = classifier.logits(feats, params.classifier_params)
        out[i] = int(np.argmax(softmax(z)))
    return out
