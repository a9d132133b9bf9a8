"""Pipeline configuration: one YAML file, env-var endpoint override."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ValidationError
from .model.classifiers import CONV_CLASSIFIER, MEANPOOL_SOFTMAX
from .model.params import TrainConfig
from .signals import SOURCE_DOC, SOURCE_MLM

ENDPOINT_ENV_VAR = "CLOZECLASS_ENDPOINT"

_TRAIN_KEYS = set(TrainConfig().__dict__)
_TOP_KEYS = {
    "corpus",
    "test_corpus",
    "schema",
    "workdir",
    "cache_dir",
    "endpoint",
    "signal_source",
    "classifier",
    "train",
    "parallelism",
}
_CLASSIFIER_KEYS = {"kind", "windows", "filters_per_window"}


@dataclass
class PipelineConfig:
    corpus: Path
    schema: Path
    workdir: Path
    cache_dir: Path
    test_corpus: Path | None = None
    endpoint: str | None = None
    signal_source: str = SOURCE_MLM
    classifier_kind: str = MEANPOOL_SOFTMAX
    windows: tuple[int, ...] = (2, 3, 4, 5)
    filters_per_window: int = 100
    train: TrainConfig = field(default_factory=TrainConfig)
    parallelism: int = 4
    offline: bool = False

    def __post_init__(self):
        if self.signal_source not in (SOURCE_MLM, SOURCE_DOC):
            raise ValidationError(
                f"signal_source must be '{SOURCE_MLM}' or '{SOURCE_DOC}', "
                f"got {self.signal_source!r}"
            )
        if self.classifier_kind not in (MEANPOOL_SOFTMAX, CONV_CLASSIFIER):
            raise ValidationError(
                f"unknown classifier kind {self.classifier_kind!r}"
            )
        if self.parallelism < 1:
            raise ValidationError("parallelism must be >= 1")

    def to_dict(self) -> dict:
        """Stable mapping for manifest hashing and artifact headers."""
        return {
            "corpus": str(self.corpus),
            "test_corpus": None if self.test_corpus is None else str(self.test_corpus),
            "schema": str(self.schema),
            "workdir": str(self.workdir),
            "cache_dir": str(self.cache_dir),
            "endpoint": self.endpoint,
            "signal_source": self.signal_source,
            "classifier": {
                "kind": self.classifier_kind,
                "windows": list(self.windows),
                "filters_per_window": self.filters_per_window,
            },
            "train": self.train.to_dict(),
            "parallelism": self.parallelism,
        }


def _check_keys(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ValidationError(
            f"unknown {where} config keys: {', '.join(sorted(unknown))}"
        )


def load_config(
    path: str | Path,
    seed: int | None = None,
    offline: bool = False,
) -> PipelineConfig:
    """Read a YAML config; relative paths resolve against the file's directory.

    `seed` overrides the configured training seed. The environment
    variable CLOZECLASS_ENDPOINT overrides the configured endpoint.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"config file {path} does not exist")
    raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValidationError(f"config file {path} must hold a mapping")
    _check_keys(raw, _TOP_KEYS, "top-level")
    for required in ("corpus", "schema"):
        if required not in raw:
            raise ValidationError(f"config is missing the {required!r} path")

    base = path.parent

    def resolve(value) -> Path:
        p = Path(value)
        return p if p.is_absolute() else base / p

    train_section = dict(raw.get("train") or {})
    _check_keys(train_section, _TRAIN_KEYS, "train")
    if seed is not None:
        train_section["seed"] = seed
    classifier_section = dict(raw.get("classifier") or {})
    _check_keys(classifier_section, _CLASSIFIER_KEYS, "classifier")

    endpoint = os.environ.get(ENDPOINT_ENV_VAR) or raw.get("endpoint")
    return PipelineConfig(
        corpus=resolve(raw["corpus"]),
        test_corpus=resolve(raw["test_corpus"]) if raw.get("test_corpus") else None,
        schema=resolve(raw["schema"]),
        workdir=resolve(raw.get("workdir", "artifacts")),
        cache_dir=resolve(raw.get("cache_dir", "caches")),
        endpoint=endpoint,
        signal_source=raw.get("signal_source", SOURCE_MLM),
        classifier_kind=classifier_section.get("kind", MEANPOOL_SOFTMAX),
        windows=tuple(classifier_section.get("windows", (2, 3, 4, 5))),
        filters_per_window=int(classifier_section.get("filters_per_window", 100)),
        train=TrainConfig(**train_section),
        parallelism=int(raw.get("parallelism", 4)),
        offline=offline,
    )
