import numpy as np
import pytest

from clozeclass.embeddings import EmbeddingStore, StoreEntry
from clozeclass.signals import SOURCE_DOC, SOURCE_MLM, SignalSet


def make_store(vectors: dict, layer: str = "final") -> EmbeddingStore:
    """EmbeddingStore from a plain word -> vector mapping."""
    dims = {len(v) for v in vectors.values()}
    assert len(dims) == 1, "all vectors must share one dimensionality"
    entries = {
        word: StoreEntry(
            vector=np.asarray(vec, dtype=np.float64),
            occurrence_count=1,
            fallback=False,
        )
        for word, vec in vectors.items()
    }
    return EmbeddingStore(dim=dims.pop(), entries=entries, layer=layer)


def make_set(doc_id: str, words, source: str = SOURCE_MLM) -> SignalSet:
    """SignalSet from bare words; scores descend in MLM mode."""
    if source == SOURCE_DOC:
        pairs = tuple((w, None) for w in words)
    else:
        pairs = tuple(
            (w, round(0.9 - 0.01 * i, 6)) for i, w in enumerate(words)
        )
    return SignalSet(doc_id=doc_id, source=source, words=pairs)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
