"""Joint word-distribution and document-classifier model.

The word model scores signal words against trainable per-class vectors;
the document classifier maps token-embedding features to a class
distribution. Both are trained together by stochastic gradient ascent on
a negative-sampled evidence lower bound, with hand-derived analytic
gradients throughout.
"""

from .classifiers import ClassifierSpec, DocFeatures, build_features, classify, make_classifier
from .checkpoint import load_checkpoint, save_checkpoint
from .objective import BatchItem, batch_objective, batch_objective_and_grads, elbo_term
from .params import ModelParams, TrainConfig, init_params
from .training import PretrainResult, TrainResult, predict, pretrain_classifier, train
from .vocab import SignalVocab, sample_negatives
from .worddist import word_logprob_exact, word_logprob_ns

__all__ = [
    "BatchItem",
    "ClassifierSpec",
    "DocFeatures",
    "ModelParams",
    "PretrainResult",
    "SignalVocab",
    "TrainConfig",
    "TrainResult",
    "batch_objective",
    "batch_objective_and_grads",
    "build_features",
    "classify",
    "elbo_term",
    "init_params",
    "load_checkpoint",
    "make_classifier",
    "predict",
    "pretrain_classifier",
    "sample_negatives",
    "save_checkpoint",
    "train",
    "word_logprob_exact",
    "word_logprob_ns",
]
