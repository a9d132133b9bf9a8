"""Document classifiers over token-embedding features.

Two interchangeable parameterizations: mean-pooling followed by a linear
softmax layer, and a convolutional sentence classifier (per-window 1-D
convolutions, ReLU, max-over-time pooling, concatenation, affine,
softmax). Both expose logits plus an analytic backward pass through a
single flat parameter vector so the training loop stays generic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ValidationError

MEANPOOL_SOFTMAX = "meanpool"
CONV_CLASSIFIER = "conv"


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    num_classes: int
    feature_dim: int
    max_len: int
    windows: tuple[int, ...] = (2, 3, 4, 5)
    filters_per_window: int = 100

    def __post_init__(self):
        if self.kind not in (MEANPOOL_SOFTMAX, CONV_CLASSIFIER):
            raise ValidationError(f"unknown classifier kind {self.kind!r}")
        if self.num_classes < 2:
            raise ValidationError("classifier needs at least 2 output classes")
        if self.kind == CONV_CLASSIFIER:
            if len(set(self.windows)) != len(self.windows) or any(
                w < 1 for w in self.windows
            ):
                raise ValidationError("windows must be distinct positive integers")
            if self.filters_per_window < 1:
                raise ValidationError("filters_per_window must be >= 1")
            if self.max_len < max(self.windows):
                raise ValidationError(
                    f"max_len {self.max_len} shorter than the widest window "
                    f"{max(self.windows)}"
                )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "num_classes": self.num_classes,
            "feature_dim": self.feature_dim,
            "max_len": self.max_len,
            "windows": list(self.windows),
            "filters_per_window": self.filters_per_window,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClassifierSpec":
        return cls(
            kind=d["kind"],
            num_classes=d["num_classes"],
            feature_dim=d["feature_dim"],
            max_len=d["max_len"],
            windows=tuple(d.get("windows", (2, 3, 4, 5))),
            filters_per_window=d.get("filters_per_window", 100),
        )


@dataclass(frozen=True)
class DocFeatures:
    """Token embeddings truncated or zero-padded to a fixed length."""

    matrix: np.ndarray  # (max_len, feature_dim), padding rows exactly zero
    length: int

    def __post_init__(self):
        if self.length > self.matrix.shape[0]:
            raise ValidationError(
                f"true length {self.length} exceeds padded length {self.matrix.shape[0]}"
            )
        if self.length < self.matrix.shape[0]:
            if np.any(self.matrix[self.length :]):
                raise ValidationError("padding rows must be exactly zero")


def build_features(vectors, max_len: int) -> DocFeatures:
    """Stack per-token vectors into a (max_len, dim) matrix."""
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2:
        raise ValidationError(f"expected (tokens, dim) vectors, got shape {vectors.shape}")
    n, dim = vectors.shape
    length = min(n, max_len)
    matrix = np.zeros((max_len, dim), dtype=np.float64)
    matrix[:length] = vectors[:length]
    return DocFeatures(matrix=matrix, length=length)


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max()
    e = np.exp(shifted)
    return e / e.sum()


class MeanPoolSoftmax:
    """softmax(W . meanpool(features) + b), pooling over the true length only."""

    def __init__(self, spec: ClassifierSpec):
        self.spec = spec
        self.n_params = spec.num_classes * spec.feature_dim + spec.num_classes

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        # Linear softmax has no symmetry to break; zero start is exact.
        return np.zeros(self.n_params, dtype=np.float64)

    def _views(self, params: np.ndarray):
        c, d = self.spec.num_classes, self.spec.feature_dim
        return params[: c * d].reshape(c, d), params[c * d :]

    def logits(self, feats: DocFeatures, params: np.ndarray):
        if feats.length == 0:
            raise ValidationError("cannot classify a document of true length 0")
        w, b = self._views(params)
        pooled = feats.matrix[: feats.length].mean(axis=0)
        return w @ pooled + b, pooled

    def backward(
        self, cache, dz: np.ndarray, params: np.ndarray, grad_out: np.ndarray
    ) -> None:
        pooled = cache
        c, d = self.spec.num_classes, self.spec.feature_dim
        gw = grad_out[: c * d].reshape(c, d)
        gw += np.outer(dz, pooled)
        grad_out[c * d :] += dz


class ConvClassifier:
    """Per-window 1-D conv, ReLU, max-over-time pooling, affine, softmax.

    Parameter layout: for each window h in order, filters (n_f, h, D)
    then bias (n_f); finally the affine W (C, total_filters) and b (C).
    """

    def __init__(self, spec: ClassifierSpec):
        self.spec = spec
        self.total_filters = len(spec.windows) * spec.filters_per_window
        n = 0
        self.offsets = []
        for h in spec.windows:
            f_size = spec.filters_per_window * h * spec.feature_dim
            self.offsets.append((n, n + f_size, n + f_size + spec.filters_per_window))
            n += f_size + spec.filters_per_window
        self.affine_offset = n
        n += spec.num_classes * self.total_filters + spec.num_classes
        self.n_params = n

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        params = np.zeros(self.n_params, dtype=np.float64)
        spec = self.spec
        for (start, f_end, _), h in zip(self.offsets, spec.windows):
            fan_in = h * spec.feature_dim
            bound = 1.0 / np.sqrt(fan_in)
            params[start:f_end] = rng.uniform(-bound, bound, size=f_end - start)
        # conv biases and the affine layer stay zero
        return params

    def _window_views(self, params: np.ndarray, w_idx: int):
        spec = self.spec
        start, f_end, end = self.offsets[w_idx]
        h = spec.windows[w_idx]
        filters = params[start:f_end].reshape(spec.filters_per_window, h * spec.feature_dim)
        bias = params[f_end:end]
        return filters, bias

    def _affine_views(self, params: np.ndarray):
        c = self.spec.num_classes
        start = self.affine_offset
        w = params[start : start + c * self.total_filters].reshape(c, self.total_filters)
        b = params[start + c * self.total_filters :]
        return w, b

    def logits(self, feats: DocFeatures, params: np.ndarray):
        if feats.length == 0:
            raise ValidationError("cannot classify a document of true length 0")
        spec = self.spec
        pooled_all = np.empty(self.total_filters, dtype=np.float64)
        caches = []
        for w_idx, h in enumerate(spec.windows):
            filters, bias = self._window_views(params, w_idx)
            positions = spec.max_len - h + 1
            # only windows overlapping real tokens compete in the pooling;
            # a document shorter than the window keeps its single leading window
            valid = min(max(feats.length - h + 1, 1), positions)
            views = sliding_window_view(feats.matrix, (h, spec.feature_dim))[
                :valid, 0
            ].reshape(valid, h * spec.feature_dim)
            pre = views @ filters.T + bias  # (valid, n_f)
            act = np.maximum(pre, 0.0)
            argmax = act.argmax(axis=0)
            seg = slice(
                w_idx * spec.filters_per_window, (w_idx + 1) * spec.filters_per_window
            )
            pooled_all[seg] = act[argmax, np.arange(spec.filters_per_window)]
            caches.append((views, pre, argmax))
        w, b = self._affine_views(params)
        return w @ pooled_all + b, (caches, pooled_all)

    def backward(
        self, cache, dz: np.ndarray, params: np.ndarray, grad_out: np.ndarray
    ) -> None:
        caches, pooled_all = cache
        spec = self.spec
        c = spec.num_classes
        start = self.affine_offset
        gw = grad_out[start : start + c * self.total_filters].reshape(
            c, self.total_filters
        )
        gw += np.outer(dz, pooled_all)
        grad_out[start + c * self.total_filters :] += dz
        w_params, _ = self._affine_views(params)
        d_pooled = w_params.T @ dz  # (total_filters,)
        cols = np.arange(spec.filters_per_window)
        for w_idx, h in enumerate(spec.windows):
            views, pre, argmax = caches[w_idx]
            seg = slice(
                w_idx * spec.filters_per_window, (w_idx + 1) * spec.filters_per_window
            )
            # gradient routes through the (first) argmax position, blocked
            # where the pooled pre-activation was clipped by the ReLU
            alive = pre[argmax, cols] > 0.0
            weights = np.where(alive, d_pooled[seg], 0.0)
            start_f, f_end, end = self.offsets[w_idx]
            g_filters = grad_out[start_f:f_end].reshape(
                spec.filters_per_window, h * spec.feature_dim
            )
            g_filters += weights[:, None] * views[argmax]
            grad_out[f_end:end] += weights


def make_classifier(spec: ClassifierSpec):
    if spec.kind == MEANPOOL_SOFTMAX:
        return MeanPoolSoftmax(spec)
    return ConvClassifier(spec)


def classify(feats: DocFeatures, spec: ClassifierSpec, params: np.ndarray) -> np.ndarray:
    """Class probability distribution for one document."""
    clf = make_classifier(spec)
    z, _ = clf.logits(feats, np.asarray(params, dtype=np.float64))
    return softmax(z)
