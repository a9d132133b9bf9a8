"""Threshold-gated pseudo labels from label-word similarity.

A document's signal-word vectors are averaged into one vector, compared
against each class name's vector by cosine similarity, and the argmax
class is assigned iff its similarity strictly exceeds the threshold.
The same machinery without the threshold is the similarity baseline
predictor.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import LabelSchema
from .embeddings import EmbeddingStore, cosine, phrase_sr
from .errors import ParseError, UnresolvableWordsError, ValidationError
from .signals import SignalSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PseudoLabel:
    doc_id: str
    class_index: int
    similarity: float


def doc_signal_vector(signals: SignalSet, store: EmbeddingStore) -> np.ndarray:
    """Mean static representation over the document's signal words."""
    if not signals.words:
        raise ValidationError(f"document {signals.doc_id!r} has an empty signal set")
    return phrase_sr(signals.word_list(), store)


def class_vectors(schema: LabelSchema, store: EmbeddingStore) -> list[np.ndarray]:
    vecs = []
    for idx, words in enumerate(schema.classes):
        try:
            vecs.append(phrase_sr(words, store))
        except UnresolvableWordsError as exc:
            raise UnresolvableWordsError(
                f"class {idx} ({' '.join(words)!r}) has no resolvable name word"
            ) from exc
    return vecs


def _similarities(doc_vec: np.ndarray, cls_vecs) -> np.ndarray:
    return np.array([cosine(doc_vec, cv) for cv in cls_vecs], dtype=np.float64)


def assign_pseudo_labels(
    signal_sets, store: EmbeddingStore, schema: LabelSchema, gamma: float
) -> list[PseudoLabel]:
    """Label each document with its argmax-similarity class iff similarity > gamma.

    Documents with no resolvable signal words, or whose best similarity
    fails the strict threshold, are omitted. Exact argmax ties go to the
    lowest class index.
    """
    if not -1.0 <= gamma <= 1.0:
        raise ValidationError(f"gamma must lie in [-1, 1], got {gamma}")
    cls_vecs = class_vectors(schema, store)
    labels = []
    for ss in signal_sets:
        if not ss.words:
            logger.debug("document %s: empty signal set, unlabeled", ss.doc_id)
            continue
        try:
            doc_vec = doc_signal_vector(ss, store)
        except UnresolvableWordsError:
            logger.debug("document %s: no resolvable signals, unlabeled", ss.doc_id)
            continue
        sims = _similarities(doc_vec, cls_vecs)
        best = int(np.argmax(sims))
        if sims[best] > gamma:
            labels.append(
                PseudoLabel(doc_id=ss.doc_id, class_index=best, similarity=float(sims[best]))
            )
    return labels


def predict_by_similarity(
    signal_sets, store: EmbeddingStore, schema: LabelSchema
) -> list[int]:
    """Argmax-similarity class per document, no threshold.

    Documents without resolvable signals get the deterministic default
    class 0 with a warning.
    """
    cls_vecs = class_vectors(schema, store)
    preds = []
    for ss in signal_sets:
        try:
            if not ss.words:
                raise UnresolvableWordsError("empty signal set")
            doc_vec = doc_signal_vector(ss, store)
        except UnresolvableWordsError:
            logger.warning(
                "document %s: no resolvable signals, defaulting to class 0", ss.doc_id
            )
            preds.append(0)
            continue
        sims = _similarities(doc_vec, cls_vecs)
        preds.append(int(np.argmax(sims)))
    return preds


def write_pseudo_labels(labels, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for pl in labels:
            rec = {"doc_id": pl.doc_id, "class": pl.class_index, "similarity": pl.similarity}
            fh.write(json.dumps(rec) + "\n")


def read_pseudo_labels(path) -> list[PseudoLabel]:
    path = Path(path)
    out = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(path, lineno, f"invalid JSON ({exc.msg})") from exc
            out.append(
                PseudoLabel(
                    doc_id=rec["doc_id"],
                    class_index=int(rec["class"]),
                    similarity=float(rec["similarity"]),
                )
            )
    return out
