"""Resumable staged pipeline with manifest-based skipping.

Stages run in a fixed linear order; each writes its artifacts atomically
and records input, config, and output hashes in a manifest. A stage
whose recorded hashes all still match is skipped unless forced.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import struct
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .clients import EmbedClient, MaskFillClient, PosClient
from .config import PipelineConfig
from .corpus import Corpus, LabelSchema, load_corpus, load_label_schema
from .embeddings import (
    EmbeddingStore,
    build_static_representations,
    write_build_report,
)
from .errors import MissingArtifactError, ValidationError
from .filtering import compute_cii, compute_cir, filter_signals, write_cir_report
from .metrics import format_metrics_report, score, write_metrics
from .model.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .model.classifiers import ClassifierSpec, build_features
from .model.params import ModelParams
from .model.training import (
    PretrainResult,
    TrainItem,
    predict,
    pretrain_classifier,
    seed_generators,
    train,
)
from .model.vocab import SignalVocab
from .pseudo import read_pseudo_labels, write_pseudo_labels, assign_pseudo_labels
from .signals import (
    SOURCE_DOC,
    SOURCE_MLM,
    acquire_mlm_signals,
    extract_doc_signals,
    read_signal_sets,
    write_signal_sets,
)

log = logging.getLogger(__name__)

STAGES = (
    "signals",
    "embed",
    "pseudo",
    "filter",
    "pretrain",
    "train",
    "predict",
    "eval",
)

# artifact file names under the workdir
ARTIFACTS = {
    "signals": ("signals.jsonl",),
    "embed": ("store.bin", "store.bin.idx", "build_report.jsonl"),
    "pseudo": ("pseudo.jsonl",),
    "filter": ("filtered.jsonl", "cir_report.jsonl"),
    "pretrain": ("pretrain.bin",),
    "train": ("model.bin", "train_log.txt"),
    "predict": ("predictions.jsonl",),
    "eval": ("metrics.json", "metrics.txt"),
}

# which stage produces each artifact a later stage needs
_PRODUCER = {
    name: stage for stage, names in ARTIFACTS.items() for name in names
}

_PRETRAIN_MAGIC = b"CLZPRE01"


@contextmanager
def atomic_output(final: Path):
    """Yield a temp path, then move it into place on success."""
    final.parent.mkdir(parents=True, exist_ok=True)
    tmp = final.with_name(final.name + ".tmp")
    yield tmp
    os.replace(tmp, final)


def _hash_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _hash_obj(obj) -> str:
    return hashlib.sha256(
        json.dumps(obj, sort_keys=True).encode("utf-8")
    ).hexdigest()


class Paths:
    """Resolved artifact locations for one pipeline run."""

    def __init__(self, config: PipelineConfig):
        self.workdir = Path(config.workdir)
        self.manifest = self.workdir / "manifest.json"
        self.mlm_cache = Path(config.cache_dir) / "mlm.jsonl"
        self.embed_cache = Path(config.cache_dir) / "embed.jsonl"
        self.pos_cache = Path(config.cache_dir) / "pos.jsonl"

    def artifact(self, name: str) -> Path:
        return self.workdir / name

    def require(self, name: str) -> Path:
        path = self.artifact(name)
        if not path.exists():
            raise MissingArtifactError(_PRODUCER[name], path)
        return path


def _stage_config(config: PipelineConfig, stage: str) -> dict:
    """The slice of config a stage's output depends on."""
    train_cfg = config.train.to_dict()
    classifier = config.to_dict()["classifier"]
    if stage == "signals":
        return {"signal_source": config.signal_source, "k": config.train.k}
    if stage == "embed":
        return {}
    if stage == "pseudo":
        return {"gamma": config.train.gamma}
    if stage == "filter":
        return {"t": config.train.t}
    if stage == "pretrain":
        return {
            "classifier": classifier,
            "max_len": config.train.max_len,
            "batch_size": config.train.batch_size,
            "pretrain_epochs": config.train.pretrain_epochs,
            "pretrain_learning_rate": config.train.pretrain_learning_rate,
            "seed": config.train.seed,
        }
    if stage == "train":
        return {"classifier": classifier, "train": train_cfg}
    return {}


# ---------------------------------------------------------------------------
# shared loading helpers


def _load_schema(config: PipelineConfig) -> LabelSchema:
    if not Path(config.schema).exists():
        raise ValidationError(f"schema file {config.schema} does not exist")
    return load_label_schema(config.schema)


def _load_train_corpus(config: PipelineConfig, schema: LabelSchema) -> Corpus:
    if not Path(config.corpus).exists():
        raise ValidationError(f"corpus file {config.corpus} does not exist")
    return load_corpus(config.corpus, schema)


def _load_eval_corpus(config: PipelineConfig, schema: LabelSchema) -> Corpus:
    path = config.test_corpus or config.corpus
    if not Path(path).exists():
        raise ValidationError(f"corpus file {path} does not exist")
    return load_corpus(path, schema)


def _embed_client(config: PipelineConfig, paths: Paths) -> EmbedClient:
    return EmbedClient(
        config.endpoint, paths.embed_cache, offline=config.offline
    )


def _classifier_spec(
    config: PipelineConfig, num_classes: int, feature_dim: int
) -> ClassifierSpec:
    return ClassifierSpec(
        kind=config.classifier_kind,
        num_classes=num_classes,
        feature_dim=feature_dim,
        max_len=config.train.max_len,
        windows=config.windows,
        filters_per_window=config.filters_per_window,
    )


def _document_features(docs, client: EmbedClient, max_len: int):
    features = []
    for doc in docs:
        _, vectors = client.embed(doc.text)
        features.append(build_features(vectors, max_len))
    return features


def _save_pretrain(
    path: Path, result: PretrainResult, spec: ClassifierSpec, seed: int
) -> None:
    header = {
        "losses": list(result.losses),
        "classifier": spec.to_dict(),
        "seed": seed,
        "size": int(result.classifier_params.size),
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with atomic_output(path) as tmp:
        with open(tmp, "wb") as fh:
            fh.write(_PRETRAIN_MAGIC)
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            fh.write(
                np.ascontiguousarray(
                    result.classifier_params, dtype="<f8"
                ).tobytes()
            )


def _load_pretrain(path: Path) -> tuple[PretrainResult, ClassifierSpec]:
    with open(path, "rb") as fh:
        if fh.read(len(_PRETRAIN_MAGIC)) != _PRETRAIN_MAGIC:
            raise ValidationError(f"{path} is not a pretrained-classifier file")
        (header_len,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        params = np.frombuffer(
            fh.read(header["size"] * 8), dtype="<f8"
        ).copy()
    result = PretrainResult(
        classifier_params=params, losses=tuple(header["losses"])
    )
    return result, ClassifierSpec.from_dict(header["classifier"])


def _write_predictions(path: Path, doc_ids, preds) -> None:
    with atomic_output(path) as tmp:
        with open(tmp, "w", encoding="utf-8") as fh:
            for doc_id, pred in zip(doc_ids, preds):
                fh.write(
                    json.dumps({"doc_id": doc_id, "class": int(pred)}) + "\n"
                )


def read_predictions(path) -> dict[str, int]:
    out: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            out[record["doc_id"]] = int(record["class"])
    return out


# ---------------------------------------------------------------------------
# stage implementations


def _stage_signals(config: PipelineConfig, paths: Paths) -> None:
    schema = _load_schema(config)
    corpus = _load_train_corpus(config, schema)
    if config.signal_source == SOURCE_MLM:
        client = MaskFillClient(
            config.endpoint,
            paths.mlm_cache,
            k=config.train.k,
            offline=config.offline,
        )
        client.warm(corpus.documents, parallelism=config.parallelism)
        sets = [acquire_mlm_signals(doc, client, config.train.k) for doc in corpus]
    else:
        pos_client = None
        sets = []
        for doc in corpus:
            if doc.tokens is None:
                if pos_client is None:
                    pos_client = PosClient(
                        config.endpoint, paths.pos_cache, offline=config.offline
                    )
                doc = dataclasses.replace(
                    doc, tokens=tuple(pos_client.tags(doc.text))
                )
            sets.append(extract_doc_signals(doc))
    with atomic_output(paths.artifact("signals.jsonl")) as tmp:
        write_signal_sets(sets, tmp)


def _stage_embed(config: PipelineConfig, paths: Paths) -> None:
    schema = _load_schema(config)
    corpus = _load_train_corpus(config, schema)
    signal_sets = read_signal_sets(paths.require("signals.jsonl"))
    words: dict[str, None] = {}
    for ss in signal_sets:
        for w in ss.word_list():
            words.setdefault(w)
    for w in schema.all_words():
        words.setdefault(w)
    client = _embed_client(config, paths)
    client.warm([doc.text for doc in corpus], parallelism=config.parallelism)
    if config.test_corpus is not None:
        eval_corpus = _load_eval_corpus(config, schema)
        client.warm(
            [doc.text for doc in eval_corpus], parallelism=config.parallelism
        )
    cased = client.info().cased
    store = build_static_representations(corpus, words, client, cased=cased)
    with atomic_output(paths.artifact("store.bin")) as tmp:
        store.save(tmp)
        os.replace(
            tmp.with_name(tmp.name + ".idx"),
            paths.artifact("store.bin.idx"),
        )
    with atomic_output(paths.artifact("build_report.jsonl")) as tmp:
        write_build_report(store, tmp)


def _stage_pseudo(config: PipelineConfig, paths: Paths) -> None:
    schema = _load_schema(config)
    signal_sets = read_signal_sets(paths.require("signals.jsonl"))
    store = EmbeddingStore.load(paths.require("store.bin"))
    labels = assign_pseudo_labels(signal_sets, store, schema, config.train.gamma)
    log.info(
        "pseudo labeling covered %d of %d documents", len(labels), len(signal_sets)
    )
    with atomic_output(paths.artifact("pseudo.jsonl")) as tmp:
        write_pseudo_labels(labels, tmp)


def _stage_filter(config: PipelineConfig, paths: Paths) -> None:
    schema = _load_schema(config)
    signal_sets = read_signal_sets(paths.require("signals.jsonl"))
    labels = read_pseudo_labels(paths.require("pseudo.jsonl"))
    cii = compute_cii(signal_sets, labels, num_classes=schema.num_classes)
    cir = compute_cir(cii)
    filtered = filter_signals(signal_sets, cir, config.train.t)
    kept = sum(len(ss.words) for ss in filtered)
    total = sum(len(ss.words) for ss in signal_sets)
    log.info("filter kept %d of %d signal-word occurrences", kept, total)
    with atomic_output(paths.artifact("filtered.jsonl")) as tmp:
        write_signal_sets(filtered, tmp)
    with atomic_output(paths.artifact("cir_report.jsonl")) as tmp:
        write_cir_report(cir, config.train.t, tmp)


def _stage_pretrain(config: PipelineConfig, paths: Paths) -> None:
    schema = _load_schema(config)
    corpus = _load_train_corpus(config, schema)
    labels = read_pseudo_labels(paths.require("pseudo.jsonl"))
    if not labels:
        raise ValidationError(
            "no pseudo labels were assigned; cannot pretrain the classifier"
        )
    by_id = corpus.by_id()
    docs = []
    targets = []
    for label in labels:
        if label.doc_id not in by_id:
            raise ValidationError(
                f"pseudo label for unknown document {label.doc_id!r}"
            )
        docs.append(by_id[label.doc_id])
        targets.append(label.class_index)
    client = _embed_client(config, paths)
    spec = _classifier_spec(config, schema.num_classes, client.dim)
    features = _document_features(docs, client, config.train.max_len)
    rngs = seed_generators(config.train.seed)
    result = pretrain_classifier(
        features,
        targets,
        spec,
        config.train,
        rngs["classifier_init"],
        rngs["pretrain"],
    )
    log.info(
        "pretraining cross-entropy %.4f -> %.4f over %d epochs",
        result.losses[0],
        result.losses[-1],
        len(result.losses),
    )
    _save_pretrain(paths.artifact("pretrain.bin"), result, spec, config.train.seed)


def _stage_train(config: PipelineConfig, paths: Paths) -> None:
    schema = _load_schema(config)
    corpus = _load_train_corpus(config, schema)
    filtered = read_signal_sets(paths.require("filtered.jsonl"))
    pretrained, spec = _load_pretrain(paths.require("pretrain.bin"))
    nonempty = [ss for ss in filtered if ss.words]
    if not nonempty:
        raise ValidationError("every signal set is empty after filtering")
    vocab = SignalVocab.from_signal_sets(nonempty)
    client = _embed_client(config, paths)
    by_id = corpus.by_id()
    items = []
    for ss in filtered:
        if ss.doc_id not in by_id:
            raise ValidationError(f"signal set for unknown document {ss.doc_id!r}")
        doc = by_id[ss.doc_id]
        _, vectors = client.embed(doc.text)
        items.append(
            TrainItem(
                doc_id=doc.id,
                features=build_features(vectors, config.train.max_len),
                signal_indices=tuple(vocab.index[w] for w in ss.word_list()),
            )
        )
    word_vectors = None
    if config.train.word_init == "sr":
        store = EmbeddingStore.load(paths.require("store.bin"))
        if store.dim != config.train.latent_dim:
            raise ValidationError(
                f"word_init 'sr' needs latent_dim == store dim "
                f"({config.train.latent_dim} != {store.dim})"
            )
        missing = [w for w in vocab.words if w not in store]
        if missing:
            raise ValidationError(
                f"word_init 'sr' but {len(missing)} vocabulary words have no "
                f"static representation (first: {missing[0]!r})"
            )
        word_vectors = np.stack([store.vector(w) for w in vocab.words])
    result = train(
        items,
        vocab,
        spec,
        config.train,
        pretrained=pretrained,
        word_vectors=word_vectors,
    )
    # path-free echo: directory layout must not leak into checkpoint bytes
    config_echo = {
        "signal_source": config.signal_source,
        "classifier": config.to_dict()["classifier"],
        "train": config.train.to_dict(),
    }
    checkpoint = Checkpoint(
        params=result.params,
        vocab=vocab,
        spec=spec,
        config=config_echo,
    )
    save_checkpoint(paths.artifact("model.bin"), checkpoint)
    with atomic_output(paths.artifact("train_log.txt")) as tmp:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write("epoch\tmean_elbo\teval_elbo\tseconds\n")
            for epoch, (mean_e, eval_e, secs) in enumerate(
                zip(result.epoch_elbos, result.eval_elbos, result.epoch_seconds)
            ):
                fh.write(f"{epoch}\t{mean_e:.6f}\t{eval_e:.6f}\t{secs:.3f}\n")


def _stage_predict(config: PipelineConfig, paths: Paths) -> None:
    schema = _load_schema(config)
    corpus = _load_eval_corpus(config, schema)
    checkpoint = load_checkpoint(paths.require("model.bin"))
    client = _embed_client(config, paths)
    features = _document_features(
        corpus.documents, client, checkpoint.spec.max_len
    )
    preds = predict(features, checkpoint.spec, checkpoint.params)
    _write_predictions(
        paths.artifact("predictions.jsonl"),
        [doc.id for doc in corpus],
        preds,
    )


def _stage_eval(config: PipelineConfig, paths: Paths) -> None:
    schema = _load_schema(config)
    corpus = _load_eval_corpus(config, schema)
    predictions = read_predictions(paths.require("predictions.jsonl"))
    preds, golds = [], []
    for doc in corpus:
        if doc.gold_label is None:
            raise ValidationError(
                f"document {doc.id!r} has no gold label; cannot evaluate"
            )
        if doc.id not in predictions:
            raise ValidationError(f"no prediction for document {doc.id!r}")
        preds.append(predictions[doc.id])
        golds.append(doc.gold_label)
    metrics = score(preds, golds, schema.num_classes)
    with atomic_output(paths.artifact("metrics.json")) as tmp:
        write_metrics(metrics, tmp)
    report = format_metrics_report(metrics)
    with atomic_output(paths.artifact("metrics.txt")) as tmp:
        Path(tmp).write_text(report + "\n", encoding="utf-8")
    log.info("\n%s", report)


_STAGE_FUNCS = {
    "signals": _stage_signals,
    "embed": _stage_embed,
    "pseudo": _stage_pseudo,
    "filter": _stage_filter,
    "pretrain": _stage_pretrain,
    "train": _stage_train,
    "predict": _stage_predict,
    "eval": _stage_eval,
}


# ---------------------------------------------------------------------------
# manifest-driven orchestration


def _stage_inputs(stage: str, config: PipelineConfig, paths: Paths) -> list[Path]:
    """Files whose content determines the stage output (must exist)."""
    inputs = [Path(config.schema), Path(config.corpus)]
    if stage in ("predict", "eval") and config.test_corpus is not None:
        inputs = [Path(config.schema), Path(config.test_corpus)]
    prerequisites = {
        "signals": (),
        "embed": ("signals.jsonl",),
        "pseudo": ("signals.jsonl", "store.bin"),
        "filter": ("signals.jsonl", "pseudo.jsonl"),
        "pretrain": ("pseudo.jsonl",),
        "train": ("filtered.jsonl", "pretrain.bin"),
        "predict": ("model.bin",),
        "eval": ("predictions.jsonl",),
    }
    for name in prerequisites[stage]:
        inputs.append(paths.require(name))
    return inputs


def _load_manifest(paths: Paths) -> dict:
    if paths.manifest.exists():
        return json.loads(paths.manifest.read_text(encoding="utf-8"))
    return {}


def _write_manifest(paths: Paths, manifest: dict) -> None:
    with atomic_output(paths.manifest) as tmp:
        Path(tmp).write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


def _can_skip(stage: str, entry: dict | None, config_hash: str, inputs, paths) -> bool:
    if entry is None or entry.get("config") != config_hash:
        return False
    recorded = entry.get("inputs", {})
    current = {str(p): _hash_file(p) for p in inputs}
    if recorded != current:
        return False
    for name, digest in entry.get("outputs", {}).items():
        path = paths.artifact(name)
        if not path.exists():
            return False
        if _hash_file(path) != digest:
            log.warning(
                "artifact %s no longer matches the manifest; rebuilding", path
            )
            return False
    return True


def run_stage(stage: str, config: PipelineConfig, force: bool = False) -> bool:
    """Run one stage; returns True if it ran, False if skipped."""
    if stage not in _STAGE_FUNCS:
        raise ValidationError(
            f"unknown stage {stage!r}; expected one of {', '.join(STAGES)}"
        )
    paths = Paths(config)
    paths.workdir.mkdir(parents=True, exist_ok=True)
    inputs = _stage_inputs(stage, config, paths)
    for path in inputs:
        if not path.exists():
            raise ValidationError(f"input file {path} does not exist")
    manifest = _load_manifest(paths)
    config_hash = _hash_obj(_stage_config(config, stage))
    if not force and _can_skip(stage, manifest.get(stage), config_hash, inputs, paths):
        log.info("stage %s: inputs unchanged, skipping", stage)
        return False

    started = time.monotonic()
    _STAGE_FUNCS[stage](config, paths)
    elapsed = time.monotonic() - started
    log.info("stage %s: completed in %.1fs", stage, elapsed)

    manifest[stage] = {
        "config": config_hash,
        # hashed after the run so caches filled during it count as settled
        "inputs": {str(p): _hash_file(p) for p in inputs},
        "outputs": {
            name: _hash_file(paths.artifact(name))
            for name in ARTIFACTS[stage]
            if paths.artifact(name).exists()
        },
    }
    _write_manifest(paths, manifest)
    return True


def run_pipeline(config: PipelineConfig, force: bool = False) -> None:
    """Run every stage in order; eval requires gold labels."""
    for stage in STAGES:
        run_stage(stage, config, force=force)
