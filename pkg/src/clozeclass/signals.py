"""Supervision-signal acquisition.

A document's signal words come either from a masked-LM queried with a
cloze prompt appended to the document (MLM mode), or from the document's
own nouns and proper nouns (Doc mode).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .corpus import Document
from .errors import ParseError, ValidationError

logger = logging.getLogger(__name__)

MASK = "[MASK]"
DEFAULT_TEMPLATE_SUFFIX = "This article is talking about [MASK]."

SOURCE_MLM = "mlm"
SOURCE_DOC = "doc"

# Penn Treebank noun tags plus universal POS equivalents.
_NOUN_TAGS = {"NOUN", "PROPN"}


@dataclass(frozen=True)
class PromptTemplate:
    """Cloze suffix appended to a document; must contain exactly one mask."""

    suffix: str = DEFAULT_TEMPLATE_SUFFIX

    def __post_init__(self):
        if self.suffix.count(MASK) != 1:
            raise ValidationError(
                f"template must contain exactly one {MASK} placeholder: {self.suffix!r}"
            )


@dataclass(frozen=True)
class SignalSet:
    """Per-document supervision words.

    Words are unique; in MLM mode they are sorted by descending score and
    capped at k. Doc-mode scores are None.
    """

    doc_id: str
    source: str
    words: tuple[tuple[str, Optional[float]], ...] = field(default_factory=tuple)

    def word_list(self) -> list[str]:
        return [w for w, _ in self.words]

    def __len__(self) -> int:
        return len(self.words)


def build_prompt(doc_text: str, template: PromptTemplate = PromptTemplate()) -> str:
    """Join document text and the cloze template with a single space.

    A terminal "." is inserted when the document does not already end a
    sentence, so the template reads as a following sentence. Wrapper
    tokens ([CLS]/[SEP]) are the inference service's responsibility.
    """
    text = doc_text.strip()
    if not text:
        raise ValidationError("cannot build a prompt from empty document text")
    if not text.endswith((".", "!", "?")):
        text += "."
    return f"{text} {template.suffix}"


def is_noun_tag(tag: str) -> bool:
    return tag in _NOUN_TAGS or tag.startswith("NN")


def normalize_prediction(token: str, cased: bool = False) -> Optional[str]:
    """Normalize one raw MLM prediction; None means the token is dropped.

    Sub-word continuation pieces, tokens without any alphabetic character
    (punctuation, numerals), and tokens shorter than 2 characters are not
    usable as topic words.
    """
    token = token.strip()
    if token.startswith("##"):
        return None
    if not cased:
        token = token.lower()
    if len(token) < 2:
        return None
    if not any(ch.isalpha() for ch in token):
        return None
    return token


def acquire_mlm_signals(doc: Document, client, k: int) -> SignalSet:
    """Top-k masked-LM predictions for the document, normalized and deduplicated.

    `client` must expose ``predictions(doc) -> list[(token, score)]``
    sorted by descending score (it may supply more than k raw candidates
    so dropped predictions can be replaced by the next-ranked ones) and a
    ``cased`` attribute. Duplicates after normalization keep the first,
    highest-scoring occurrence.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    raw = client.predictions(doc)
    cased = bool(getattr(client, "cased", False))
    picked: dict[str, float] = {}
    for token, score in sorted(raw, key=lambda ts: -ts[1]):
        word = normalize_prediction(token, cased=cased)
        if word is None or word in picked:
            continue
        picked[word] = float(score)
        if len(picked) == k:
            break
    if not picked:
        logger.warning("document %s: no usable MLM predictions", doc.id)
    return SignalSet(
        doc_id=doc.id, source=SOURCE_MLM, words=tuple(picked.items())
    )


def extract_doc_signals(doc: Document) -> SignalSet:
    """All nouns and proper nouns of the document, lowercased, deduplicated.

    Document order is preserved; requires POS-annotated tokens.
    """
    if doc.tokens is None:
        raise ValidationError(
            f"document {doc.id!r} has no POS tokens; run the pos stage "
            "(or provide 'tokens' in the corpus file) before doc-mode signals"
        )
    seen: dict[str, None] = {}
    for surface, tag in doc.tokens:
        if is_noun_tag(tag):
            seen.setdefault(surface.lower())
    return SignalSet(
        doc_id=doc.id,
        source=SOURCE_DOC,
        words=tuple((w, None) for w in seen),
    )


def write_signal_sets(signal_sets, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for ss in signal_sets:
            rec = {
                "doc_id": ss.doc_id,
                "source": ss.source,
                "words": [[w, s] for w, s in ss.words],
            }
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def read_signal_sets(path) -> list[SignalSet]:
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
            if rec.get("source") not in (SOURCE_MLM, SOURCE_DOC):
                raise ParseError(path, lineno, f"bad source {rec.get('source')!r}")
            words = tuple(
                (w, None if s is None else float(s)) for w, s in rec["words"]
            )
            out.append(SignalSet(doc_id=rec["doc_id"], source=rec["source"], words=words))
    return out
