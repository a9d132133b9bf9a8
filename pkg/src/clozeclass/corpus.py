"""Corpus, label schema, and line-delimited record IO.

Every pipeline artifact is line-delimited JSON (one object per line) so
each stage stays resumable and diffable. Corpus records carry
``id``/``text`` plus optional ``label`` and ``tokens`` ([surface, pos]
pairs); schema files are plain text with one class per line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import ParseError, ValidationError


@dataclass(frozen=True)
class Document:
    """One text unit with optional gold label and POS-annotated tokens."""

    id: str
    text: str
    gold_label: Optional[int] = None
    tokens: Optional[tuple[tuple[str, str], ...]] = None


@dataclass(frozen=True)
class LabelSchema:
    """Ordered classes; each class name is a tuple of lowercase words."""

    classes: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if len(self.classes) < 2:
            raise ValidationError(
                f"label schema needs at least 2 classes, got {len(self.classes)}"
            )
        names = [" ".join(words) for words in self.classes]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate class name in label schema")

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def class_name(self, index: int) -> str:
        return " ".join(self.classes[index])

    def all_words(self) -> list[str]:
        """Every word appearing in any class name, in schema order, deduplicated."""
        seen: dict[str, None] = {}
        for words in self.classes:
            for w in words:
                seen.setdefault(w)
        return list(seen)


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...]
    schema: LabelSchema

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def by_id(self) -> dict[str, Document]:
        return {d.id: d for d in self.documents}


def load_label_schema(path) -> LabelSchema:
    """Read a schema file: one class per line, multi-word names space-separated.

    Names are lowercased and split into component words; the zero-based
    line position becomes the class index.
    """
    path = Path(path)
    classes = []
    seen = set()
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        words = tuple(line.lower().split())
        if words in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate class line {line!r}")
        seen.add(words)
        classes.append(words)
    if len(classes) < 2:
        raise ValidationError(
            f"{path}: schema must list at least 2 classes, found {len(classes)}"
        )
    return LabelSchema(classes=tuple(classes))


def _parse_document(path, lineno, obj, schema: LabelSchema) -> Document:
    if not isinstance(obj, dict):
        raise ParseError(path, lineno, "record is not an object")
    doc_id = obj.get("id")
    if not isinstance(doc_id, str) or not doc_id:
        raise ParseError(path, lineno, "missing or empty 'id'")
    text = obj.get("text")
    if not isinstance(text, str):
        raise ParseError(path, lineno, "missing 'text'")
    if not text.strip():
        raise ValidationError(f"{path}:{lineno}: document {doc_id!r} has empty text")
    label = obj.get("label")
    if label is not None:
        if not isinstance(label, int) or isinstance(label, bool):
            raise ParseError(path, lineno, f"label must be an integer, got {label!r}")
        if not 0 <= label < schema.num_classes:
            raise ValidationError(
                f"{path}:{lineno}: label {label} out of range for "
                f"{schema.num_classes}-class schema"
            )
    tokens = obj.get("tokens")
    parsed_tokens = None
    if tokens is not None:
        parsed = []
        for item in tokens:
            if not isinstance(item, (list, tuple)) or len(item) != 2:
                raise ParseError(path, lineno, f"malformed token entry {item!r}")
            surface, pos = item
            if not isinstance(surface, str) or not surface:
                raise ValidationError(
                    f"{path}:{lineno}: empty token surface in document {doc_id!r}"
                )
            parsed.append((surface, str(pos)))
        parsed_tokens = tuple(parsed)
    return Document(id=doc_id, text=text, gold_label=label, tokens=parsed_tokens)


def load_corpus(path, schema: LabelSchema) -> Corpus:
    """Load a line-delimited corpus file, preserving file order.

    Gold labels are validated against the schema range; duplicate ids and
    whitespace-only texts are rejected.
    """
    path = Path(path)
    documents = []
    ids = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(path, lineno, f"invalid JSON ({exc.msg})") from exc
            doc = _parse_document(path, lineno, obj, schema)
            if doc.id in ids:
                raise ValidationError(f"{path}:{lineno}: duplicate id {doc.id!r}")
            ids.add(doc.id)
            documents.append(doc)
    return Corpus(documents=tuple(documents), schema=schema)


def document_record(doc: Document) -> dict:
    rec = {"id": doc.id, "text": doc.text}
    if doc.gold_label is not None:
        rec["label"] = doc.gold_label
    if doc.tokens is not None:
        rec["tokens"] = [[s, p] for s, p in doc.tokens]
    return rec


def save_corpus(corpus: Corpus, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for doc in corpus.documents:
            fh.write(json.dumps(document_record(doc), ensure_ascii=False) + "\n")


def save_label_schema(schema: LabelSchema, path) -> None:
    Path(path).write_text(
        "".join(" ".join(words) + "\n" for words in schema.classes), encoding="utf-8"
    )
