"""Static word representations averaged from contextual embeddings.

A word's static representation is the arithmetic mean of its contextual
embedding over every corpus occurrence; words never occurring in the
corpus fall back to the service's context-free token embedding. Phrase
vectors average member word vectors.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .errors import UnresolvableWordsError, ValidationError

logger = logging.getLogger(__name__)

_MAGIC = b"CLZEMB01"


@dataclass(frozen=True)
class StoreEntry:
    vector: np.ndarray  # float64, length dim
    occurrence_count: int  # 0 marks a fallback entry
    fallback: bool


@dataclass(frozen=True)
class EmbeddingStore:
    """Read-only word-vector store built once per corpus.

    `excluded` lists words of interest resolvable neither in the corpus
    nor by the service; they go into the build report.
    """

    dim: int
    entries: dict[str, StoreEntry]
    layer: str = "final"
    excluded: tuple[str, ...] = field(default_factory=tuple)

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def vector(self, word: str) -> np.ndarray:
        return self.entries[word].vector

    def words(self) -> list[str]:
        return list(self.entries)

    def save(self, path) -> None:
        """Binary layout: magic, dim, entry count, layer string, then
        length-prefixed word + occurrence count + little-endian float32
        vector per entry. A plain-text index lands next to it."""
        path = Path(path)
        with path.open("wb") as fh:
            fh.write(_MAGIC)
            layer_b = self.layer.encode("utf-8")
            fh.write(struct.pack("<IIH", self.dim, len(self.entries), len(layer_b)))
            fh.write(layer_b)
            for word, entry in self.entries.items():
                wb = word.encode("utf-8")
                fh.write(struct.pack("<H", len(wb)))
                fh.write(wb)
                fh.write(struct.pack("<I", entry.occurrence_count))
                fh.write(entry.vector.astype("<f4").tobytes())
        index_lines = [
            f"{word}\t{e.occurrence_count}\t{int(e.fallback)}"
            for word, e in self.entries.items()
        ]
        Path(str(path) + ".idx").write_text(
            "\n".join(index_lines) + ("\n" if index_lines else ""), encoding="utf-8"
        )

    @classmethod
    def load(cls, path) -> "EmbeddingStore":
        path = Path(path)
        data = path.read_bytes()
        if data[: len(_MAGIC)] != _MAGIC:
            raise ValidationError(f"{path}: not an embedding store file")
        off = len(_MAGIC)
        dim, count, layer_len = struct.unpack_from("<IIH", data, off)
        off += struct.calcsize("<IIH")
        layer = data[off : off + layer_len].decode("utf-8")
        off += layer_len
        entries: dict[str, StoreEntry] = {}
        vec_bytes = 4 * dim
        for _ in range(count):
            (wlen,) = struct.unpack_from("<H", data, off)
            off += 2
            word = data[off : off + wlen].decode("utf-8")
            off += wlen
            (occ,) = struct.unpack_from("<I", data, off)
            off += 4
            vec = np.frombuffer(data, dtype="<f4", count=dim, offset=off).astype(
                np.float64
            )
            off += vec_bytes
            entries[word] = StoreEntry(
                vector=vec, occurrence_count=occ, fallback=occ == 0
            )
        return cls(dim=dim, entries=entries, layer=layer)


def build_static_representations(
    corpus: Corpus, words_of_interest, embed_client, cased: bool = False
) -> EmbeddingStore:
    """Average each word's contextual embedding over all corpus occurrences.

    `embed_client` must expose ``embed(text) -> (tokens, vectors)`` and
    ``token_embed(word) -> vector | None`` plus `dim` and `layer`
    attributes. Occurrence matching is case-insensitive unless `cased`.
    Accumulation is double precision with a single final divide.
    """
    targets: dict[str, None] = {}
    for w in words_of_interest:
        key = w if cased else w.lower()
        targets.setdefault(key)
    if not targets:
        raise ValidationError("words_of_interest must be non-empty")

    dim = int(embed_client.dim)
    sums = {w: np.zeros(dim, dtype=np.float64) for w in targets}
    counts = dict.fromkeys(targets, 0)
    for doc in corpus:
        tokens, vectors = embed_client.embed(doc.text)
        for tok, vec in zip(tokens, vectors):
            key = tok if cased else tok.lower()
            if key in sums:
                sums[key] += np.asarray(vec, dtype=np.float64)
                counts[key] += 1

    entries: dict[str, StoreEntry] = {}
    excluded = []
    for word in targets:
        if counts[word] > 0:
            entries[word] = StoreEntry(
                vector=sums[word] / counts[word],
                occurrence_count=counts[word],
                fallback=False,
            )
            continue
        vec = embed_client.token_embed(word)
        if vec is None:
            excluded.append(word)
            continue
        entries[word] = StoreEntry(
            vector=np.asarray(vec, dtype=np.float64), occurrence_count=0, fallback=True
        )
    if excluded:
        logger.info("embedding store build excluded %d words", len(excluded))
    return EmbeddingStore(
        dim=dim,
        entries=entries,
        layer=str(getattr(embed_client, "layer", "final")),
        excluded=tuple(excluded),
    )


def write_build_report(store: EmbeddingStore, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for word in store.excluded:
            fh.write(json.dumps({"word": word, "excluded": True}) + "\n")


def phrase_sr(words, store: EmbeddingStore) -> np.ndarray:
    """Mean of the member words' static representations.

    Unresolvable member words are skipped with a log line; a phrase with
    no resolvable member at all is an error.
    """
    vectors = []
    for w in words:
        if w in store:
            vectors.append(store.vector(w))
        else:
            logger.debug("phrase word %r not in store, skipped", w)
    if not vectors:
        raise UnresolvableWordsError(
            f"no word of phrase {list(words)!r} resolves in the store"
        )
    return np.mean(np.stack(vectors), axis=0)


def cosine(u, v) -> float:
    """Cosine similarity in [-1, 1]; zero-norm inputs are degenerate."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValidationError(f"shape mismatch {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValidationError("cosine of a zero-norm vector is undefined")
    return float(np.dot(u, v) / (nu * nv))
