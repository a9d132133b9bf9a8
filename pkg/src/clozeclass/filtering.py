"""Category-indicative filtering of signal words.

For each word, the category-indicative index is its share of all
signal-word occurrences within one pseudo-labeled class; the
category-indicative ratio divides the largest class share by the second
largest. Words whose ratio falls below a threshold are considered
non-discriminative and removed from every signal set.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ValidationError
from .signals import SignalSet

INFINITE = math.inf


@dataclass(frozen=True)
class CiiTable:
    """Per-(class, word) occurrence counts and the derived index values.

    Occurrences count one per (pseudo-labeled document, signal word)
    pair; signal sets are deduplicated, so per-document multiplicity is 1.
    A class with zero signal occurrences is empty and its index values
    are treated as 0.
    """

    num_classes: int
    counts: dict[tuple[int, str], int]
    class_totals: tuple[int, ...]

    def cii(self, class_index: int, word: str) -> float:
        total = self.class_totals[class_index]
        if total == 0:
            return 0.0
        return self.counts.get((class_index, word), 0) / total

    def is_empty_class(self, class_index: int) -> bool:
        return self.class_totals[class_index] == 0

    def words(self) -> list[str]:
        seen: dict[str, None] = {}
        for (_, word), n in self.counts.items():
            if n > 0:
                seen.setdefault(word)
        return list(seen)


@dataclass(frozen=True)
class CirEntry:
    word: str
    cir: float  # >= 1.0, or INFINITE when the second-max index is exactly 0
    argmax_class: int
    runnerup_class: int


@dataclass(frozen=True)
class CirTable:
    entries: dict[str, CirEntry]

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def cir(self, word: str) -> float:
        return self.entries[word].cir

    def __len__(self) -> int:
        return len(self.entries)


def compute_cii(signal_sets, pseudo_labels, num_classes: int | None = None) -> CiiTable:
    """Count signal-word occurrences per pseudo-labeled class.

    Unlabeled documents contribute nothing. Every pseudo-labeled doc_id
    must have a signal set. Pass `num_classes` when some classes may have
    received no pseudo label at all; they are then tracked as empty.
    """
    by_doc = {}
    for ss in signal_sets:
        if ss.doc_id in by_doc:
            raise ValidationError(f"duplicate signal set for document {ss.doc_id!r}")
        by_doc[ss.doc_id] = ss
    label_of = {}
    seen_classes = 0
    for pl in pseudo_labels:
        if pl.doc_id in label_of:
            raise ValidationError(f"duplicate pseudo label for document {pl.doc_id!r}")
        label_of[pl.doc_id] = pl.class_index
        seen_classes = max(seen_classes, pl.class_index + 1)
    if num_classes is None:
        num_classes = seen_classes
    elif num_classes < seen_classes:
        raise ValidationError(
            f"num_classes={num_classes} but pseudo labels reach class {seen_classes - 1}"
        )

    counts: dict[tuple[int, str], int] = {}
    totals = [0] * num_classes
    for ss in signal_sets:
        c = label_of.get(ss.doc_id)
        if c is None:
            continue
        for word in ss.word_list():
            counts[(c, word)] = counts.get((c, word), 0) + 1
            totals[c] += 1
    missing = [d for d in label_of if d not in by_doc]
    if missing:
        raise ValidationError(
            f"pseudo-labeled documents without signal sets: {missing[:5]!r}"
        )
    return CiiTable(num_classes=num_classes, counts=counts, class_totals=tuple(totals))


def compute_cir(cii: CiiTable) -> CirTable:
    """Max class index over second-max class index per word.

    INFINITE when the second maximum is exactly 0; ties at the top give
    exactly 1.0. Words with no occurrence in any class are excluded.
    """
    entries: dict[str, CirEntry] = {}
    words = cii.words()
    if words and cii.num_classes < 2:
        raise ValidationError("the ratio needs at least 2 classes")
    for word in words:
        values = [cii.cii(c, word) for c in range(cii.num_classes)]
        argmax = max(range(len(values)), key=lambda c: (values[c], -c))
        rest = [(v, c) for c, v in enumerate(values) if c != argmax]
        second_val, runnerup = max(rest, key=lambda vc: (vc[0], -vc[1]))
        top = values[argmax]
        if second_val == 0.0:
            ratio = INFINITE
        else:
            ratio = top / second_val
        entries[word] = CirEntry(
            word=word, cir=ratio, argmax_class=argmax, runnerup_class=runnerup
        )
    return CirTable(entries=entries)


def filter_signals(signal_sets, cir: CirTable, t: float) -> list[SignalSet]:
    """Drop every signal word with ratio below t from every set.

    INFINITE always survives; word order within sets is preserved; sets
    may become empty. Words absent from the table (never seen in a
    pseudo-labeled document) carry no evidence and are kept.
    """
    if t < 1:
        raise ValidationError(f"threshold t must be >= 1, got {t}")
    out = []
    for ss in signal_sets:
        kept = tuple(
            (w, s) for w, s in ss.words if w not in cir or cir.cir(w) >= t
        )
        out.append(SignalSet(doc_id=ss.doc_id, source=ss.source, words=kept))
    return out


def write_cir_report(cir: CirTable, t: float, path) -> None:
    """One record per word: ratio ("inf" for INFINITE), argmax class, kept flag."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for entry in cir.entries.values():
            rec = {
                "word": entry.word,
                "cir": "inf" if math.isinf(entry.cir) else entry.cir,
                "argmax_class": entry.argmax_class,
                "kept": bool(entry.cir >= t),
            }
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
