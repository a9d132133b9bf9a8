"""Byte-deterministic model checkpoints.

A checkpoint is a single binary file: magic, a length-prefixed JSON
header (sorted keys, so identical state serializes identically), then
the parameter arrays as raw little-endian float64 in header order.
Stdlib archive writers stamp timestamps into their output; this format
holds nothing that varies between identical runs.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ValidationError
from .classifiers import ClassifierSpec
from .params import ModelParams
from .vocab import SignalVocab

MAGIC = b"CLZCKPT1"

# serialized in this order, after the header
_ARRAYS = ("category_vectors", "word_embeddings", "classifier_params", "prior")


@dataclass(frozen=True)
class Checkpoint:
    params: ModelParams
    vocab: SignalVocab
    spec: ClassifierSpec
    config: dict


def save_checkpoint(path: str | Path, checkpoint: Checkpoint) -> None:
    params = checkpoint.params
    params.check_finite()
    arrays = {
        "category_vectors": params.category_vectors,
        "word_embeddings": params.word_embeddings,
        "classifier_params": params.classifier_params,
        "prior": params.prior,
    }
    header = {
        "arrays": {name: list(arrays[name].shape) for name in _ARRAYS},
        "classifier": checkpoint.spec.to_dict(),
        "config": checkpoint.config,
        "vocab": {
            "words": list(checkpoint.vocab.words),
            "frequencies": list(checkpoint.vocab.frequencies),
        },
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    out = Path(path)
    tmp = out.with_name(out.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for name in _ARRAYS:
            fh.write(np.ascontiguousarray(arrays[name], dtype="<f8").tobytes())
    tmp.replace(out)


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValidationError(f"{path} is not a checkpoint file")
        (header_len,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        arrays = {}
        for name in _ARRAYS:
            shape = tuple(header["arrays"][name])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise ValidationError(f"{path} is truncated in array {name!r}")
            arrays[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
        if fh.read(1):
            raise ValidationError(f"{path} has trailing bytes")
    params = ModelParams(
        category_vectors=arrays["category_vectors"],
        word_embeddings=arrays["word_embeddings"],
        classifier_params=arrays["classifier_params"],
        prior=arrays["prior"],
    )
    vocab = SignalVocab(
        words=tuple(header["vocab"]["words"]),
        frequencies=tuple(int(f) for f in header["vocab"]["frequencies"]),
    )
    spec = ClassifierSpec.from_dict(header["classifier"])
    return Checkpoint(params=params, vocab=vocab, spec=spec, config=header["config"])
