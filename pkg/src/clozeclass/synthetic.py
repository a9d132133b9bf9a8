"""Planted-topic synthetic corpus with mock service caches.

Generates a 3-class corpus whose classes use disjoint topic
vocabularies, plus cache files in the real client formats, so the full
pipeline runs offline end to end: topic words drive both the mock
mask-fill predictions and the mock embeddings, cross-class filler words
give the ratio filter something to remove, and a few junk predictions
exercise normalization and the fallback/exclusion paths.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .signals import DEFAULT_TEMPLATE_SUFFIX

DIM = 16
TRAIN_DOCS = 600
TEST_DOCS = 300

TOPICS = {
    "sports": (
        "sports game team season players coach match win league stadium "
        "tournament score goal championship fans racing tennis soccer "
        "basketball athletes"
    ).split(),
    "business": (
        "business market shares profit investors trade economy bank prices "
        "deal sales growth revenue stocks merger exports earnings currency "
        "billion finance"
    ).split(),
    "science": (
        "science researchers study telescope galaxy experiment physics "
        "laboratory species genome theory data satellite chemistry energy "
        "discovery scientists climate fossil spacecraft"
    ).split(),
}

# fillers shared by every class: the ratio filter should drop these
FILLERS = "report week group people world today officials country".split()

# predicted by the mock mask filler but never present in any document:
# their representations must come from the context-free fallback
FALLBACK_WORDS = {
    "sports": "athletics",
    "business": "commerce",
    "science": "research",
}

# junk predictions: pieces and short tokens vanish in normalization,
# "the" survives it but appears for every class, "zzzunknown" resolves
# nowhere and lands in the build report
JUNK_PREDICTIONS = ["##ing", "##s", ".", "a", "12", "the", "zzzunknown"]

MLM_META = {
    "model": "mock-mlm-uncased",
    "cased": False,
    "dim": DIM,
    "layer": "final",
    "input_budget": 128,
}
EMBED_META = {
    "model": "mock-embed",
    "cased": False,
    "dim": DIM,
    "layer": "final",
    "input_budget": 4096,
}

CONFIG_TEMPLATE = """\
corpus: train.jsonl
test_corpus: test.jsonl
schema: classes.txt
workdir: artifacts
cache_dir: caches
signal_source: mlm
classifier:
  kind: meanpool
train:
  k: 20
  t: 2.0
  gamma: 0.6
  signal_words_per_step: 5
  negatives: 10
  latent_dim: 32
  max_len: 64
  learning_rate: 0.05
  epochs: 10
  batch_size: 16
  pretrain_epochs: 10
  pretrain_learning_rate: 0.1
  seed: {seed}
"""


def _word_rng(tag: str) -> np.random.Generator:
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


class _MockModel:
    """Deterministic word vectors clustered by topic."""

    def __init__(self):
        centers_rng = np.random.default_rng(20240601)
        self.centers = {
            name: _unit(centers_rng.normal(size=DIM))
            for name in TOPICS
        }
        mean_center = _unit(sum(self.centers.values()))
        self.base: dict[str, np.ndarray] = {}
        for name, words in TOPICS.items():
            for word in words:
                offset = _word_rng("base:" + word).normal(size=DIM)
                self.base[word] = _unit(self.centers[name] + 0.25 * offset)
        for word in FILLERS + ["the"]:
            offset = _word_rng("base:" + word).normal(size=DIM)
            self.base[word] = _unit(mean_center + 0.4 * offset)
        for name, word in FALLBACK_WORDS.items():
            offset = _word_rng("base:" + word).normal(size=DIM)
            self.base[word] = _unit(self.centers[name] + 0.25 * offset)

    def occurrence_vector(self, word: str, position: int) -> np.ndarray:
        jitter = _word_rng(f"ctx:{word}|{position}").normal(size=DIM)
        return self.base[word] + 0.05 * jitter


def _make_doc_words(class_name: str, rng: np.random.Generator) -> list[str]:
    topic = TOPICS[class_name]
    length = int(rng.integers(12, 29))
    words = []
    for _ in range(length):
        if rng.random() < 0.8:
            words.append(topic[int(rng.integers(len(topic)))])
        else:
            words.append(FILLERS[int(rng.integers(len(FILLERS)))])
    return words


def _mlm_predictions(
    class_name: str, doc_words: list[str], rng: np.random.Generator
) -> list[list]:
    topic = set(TOPICS[class_name])
    seen: dict[str, None] = {}
    for w in doc_words:
        if w in topic:
            seen.setdefault(w)
    predictions = []
    score = 0.90
    for w in seen:
        predictions.append([w, round(score, 6)])
        score -= 0.02
    if rng.random() < 0.5:
        predictions.append([FALLBACK_WORDS[class_name], 0.30])
    for w in dict.fromkeys(w for w in doc_words if w in FILLERS):
        predictions.append([w, round(0.20 - 0.01 * len(predictions), 6)])
    n_junk = int(rng.integers(2, len(JUNK_PREDICTIONS) + 1))
    for i, w in enumerate(JUNK_PREDICTIONS[:n_junk]):
        predictions.append([w, round(0.05 - 0.002 * i, 6)])
    return predictions


def _mlm_key(doc_id: str, k: int) -> str:
    return json.dumps(
        [doc_id, DEFAULT_TEMPLATE_SUFFIX, k, MLM_META["model"]], sort_keys=True
    )


def _text_key(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def generate(out_dir: str | Path, seed: int = 7) -> Path:
    """Write corpus, schema, caches, and config; returns the config path."""
    out = Path(out_dir)
    if out.exists() and any(out.iterdir()):
        raise ValidationError(f"output directory {out} is not empty")
    (out / "caches").mkdir(parents=True, exist_ok=True)
    model = _MockModel()
    class_names = list(TOPICS)
    rng = np.random.default_rng(seed)

    (out / "classes.txt").write_text(
        "\n".join(class_names) + "\n", encoding="utf-8"
    )

    mlm_lines = [json.dumps({"meta": MLM_META}, sort_keys=True)]
    embed_lines = [json.dumps({"meta": EMBED_META}, sort_keys=True)]
    embedded: set[str] = set()

    def embed_record(text: str) -> None:
        if text in embedded:
            return
        embedded.add(text)
        tokens = text.rstrip(".").split()
        vectors = [
            [round(float(x), 6) for x in model.occurrence_vector(w, i)]
            for i, w in enumerate(tokens)
        ]
        embed_lines.append(
            json.dumps(
                {
                    "key": "embed:" + _text_key(text),
                    "tokens": tokens,
                    "vectors": vectors,
                },
                sort_keys=True,
            )
        )

    def make_split(n_docs: int, prefix: str, with_gold: bool) -> list[dict]:
        records = []
        for i in range(n_docs):
            cls = i % len(class_names)
            words = _make_doc_words(class_names[cls], rng)
            text = " ".join(words) + "."
            record = {"id": f"{prefix}{i:04d}", "text": text}
            if with_gold:
                record["label"] = cls
            records.append(record)
            embed_record(text)
            if prefix == "train-":
                predictions = _mlm_predictions(class_names[cls], words, rng)
                mlm_lines.append(
                    json.dumps(
                        {
                            "key": _mlm_key(record["id"], 20),
                            "doc_id": record["id"],
                            "template": DEFAULT_TEMPLATE_SUFFIX,
                            "k": 20,
                            "model": MLM_META["model"],
                            "words": predictions,
                        },
                        sort_keys=True,
                    )
                )
        return records

    train_records = make_split(TRAIN_DOCS, "train-", with_gold=False)
    test_records = make_split(TEST_DOCS, "test-", with_gold=True)

    for word in list(FALLBACK_WORDS.values()) + ["the"]:
        embed_lines.append(
            json.dumps(
                {
                    "key": "token:" + word,
                    "word": word,
                    "vector": [round(float(x), 6) for x in model.base[word]],
                },
                sort_keys=True,
            )
        )
    embed_lines.append(
        json.dumps(
            {"key": "token:zzzunknown", "word": "zzzunknown", "vector": None},
            sort_keys=True,
        )
    )

    (out / "train.jsonl").write_text(
        "\n".join(json.dumps(r) for r in train_records) + "\n", encoding="utf-8"
    )
    (out / "test.jsonl").write_text(
        "\n".join(json.dumps(r) for r in test_records) + "\n", encoding="utf-8"
    )
    (out / "caches" / "mlm.jsonl").write_text(
        "\n".join(mlm_lines) + "\n", encoding="utf-8"
    )
    (out / "caches" / "embed.jsonl").write_text(
        "\n".join(embed_lines) + "\n", encoding="utf-8"
    )
    config_path = out / "config.yaml"
    config_path.write_text(CONFIG_TEMPLATE.format(seed=seed), encoding="utf-8")
    return config_path
