"""HTTP clients for the inference sidecar, with replayable caches.

Every response is appended to a line-delimited cache file, so a pipeline
run can be replayed offline from its caches alone. Each cache file opens
with a meta line describing the serving model; offline mode reads only
the cache and raises a transport error on any miss.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import requests

from .errors import TransportError, ValidationError
from .signals import PromptTemplate, build_prompt

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 30.0
DEFAULT_PARALLELISM = 4
# wrapper tokens the service adds around the prompt
WRAPPER_TOKEN_MARGIN = 2

_WORD = re.compile(r"\S+")


@dataclass(frozen=True)
class ServiceInfo:
    model: str
    cased: bool
    dim: int
    layer: str
    input_budget: int

    @classmethod
    def from_dict(cls, d: dict) -> "ServiceInfo":
        return cls(
            model=d["model"],
            cased=bool(d["cased"]),
            dim=int(d["dim"]),
            layer=d["layer"],
            input_budget=int(d["input_budget"]),
        )

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "cased": self.cased,
            "dim": self.dim,
            "layer": self.layer,
            "input_budget": self.input_budget,
        }


def text_key(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def truncate_to_words(text: str, max_words: int) -> str:
    """Cut after the max_words-th whitespace-delimited word."""
    if max_words < 1:
        raise ValidationError(f"word budget must be >= 1, got {max_words}")
    end = None
    for i, match in enumerate(_WORD.finditer(text)):
        if i == max_words:
            return text[:end].rstrip()
        end = match.end()
    return text


class _CacheFile:
    """Append-only JSONL cache with a leading meta line.

    Writes are serialized; the in-memory view is loaded once and kept in
    sync with appends.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.meta: dict | None = None
        self.records: dict[str, dict] = {}
        self._lock = threading.Lock()
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                if "meta" in record:
                    self.meta = record["meta"]
                else:
                    self.records[record["key"]] = record
        log.debug("loaded %d cached records from %s", len(self.records), self.path)

    def get(self, key: str) -> dict | None:
        return self.records.get(key)

    def ensure_meta(self, meta: dict) -> None:
        with self._lock:
            if self.meta is None:
                self.meta = meta
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps({"meta": meta}, sort_keys=True) + "\n")
            elif self.meta != meta:
                raise ValidationError(
                    f"cache {self.path} was built against {self.meta}, "
                    f"the service now reports {meta}"
                )

    def append(self, key: str, record: dict) -> None:
        record = dict(record, key=key)
        with self._lock:
            self.records[key] = record
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")


class _ServiceClient:
    """Shared transport: endpoint, offline switch, info lookup."""

    def __init__(
        self,
        endpoint: str | None,
        cache_path: str | Path,
        offline: bool = False,
        timeout: float = DEFAULT_TIMEOUT,
    ):
        if not offline and not endpoint:
            raise ValidationError("online mode needs a service endpoint")
        self.endpoint = (endpoint or "").rstrip("/")
        self.offline = offline
        self.timeout = timeout
        self.cache = _CacheFile(cache_path)
        self._session = None if offline else requests.Session()
        self._info: ServiceInfo | None = None

    def _post(self, path: str, payload: dict, allow_404: bool = False) -> dict | None:
        if self.offline:
            raise TransportError(
                f"offline mode: no cached response for {path} request"
            )
        try:
            response = self._session.post(
                f"{self.endpoint}{path}", json=payload, timeout=self.timeout
            )
            if response.status_code == 400:
                raise ValidationError(
                    f"service rejected {path} request: {response.text}"
                )
            if allow_404 and response.status_code == 404:
                return None
            response.raise_for_status()
        except requests.RequestException as exc:
            raise TransportError(
                f"inference service failed at {self.endpoint}{path}: {exc}"
            ) from exc
        return response.json()

    def info(self) -> ServiceInfo:
        """Service description; served from the cache meta line offline."""
        if self._info is not None:
            return self._info
        if self.offline:
            if self.cache.meta is None:
                raise TransportError(
                    f"offline mode and cache {self.cache.path} has no meta line"
                )
            self._info = ServiceInfo.from_dict(self.cache.meta)
            return self._info
        try:
            response = self._session.get(
                f"{self.endpoint}/v1/info", timeout=self.timeout
            )
            response.raise_for_status()
        except requests.RequestException as exc:
            raise TransportError(
                f"inference service unreachable at {self.endpoint}/v1/info: {exc}"
            ) from exc
        self._info = ServiceInfo.from_dict(response.json())
        self.cache.ensure_meta(self._info.to_dict())
        return self._info


class MaskFillClient(_ServiceClient):
    """Top-k mask-fill predictions, cached per (doc_id, template, k, model).

    The service is asked for extra candidates beyond k because
    normalization downstream drops sub-word pieces and junk tokens.
    """

    OVERFETCH = 3

    def __init__(
        self,
        endpoint: str | None,
        cache_path: str | Path,
        k: int,
        template: PromptTemplate | None = None,
        offline: bool = False,
        timeout: float = DEFAULT_TIMEOUT,
    ):
        super().__init__(endpoint, cache_path, offline, timeout)
        if k < 1:
            raise ValidationError(f"k must be >= 1, got {k}")
        self.k = k
        self.template = template or PromptTemplate()

    @property
    def cased(self) -> bool:
        return self.info().cased

    def _key(self, doc_id: str, model: str) -> str:
        return json.dumps(
            [doc_id, self.template.suffix, self.k, model], sort_keys=True
        )

    def predictions(self, doc) -> list[tuple[str, float]]:
        """Raw (token, score) predictions for the document's cloze prompt."""
        if self.offline:
            info = self.info()
            record = self.cache.get(self._key(doc.id, info.model))
            if record is None:
                raise TransportError(
                    f"offline mode: no cached mask-fill response for "
                    f"document {doc.id!r}"
                )
            return [(w, float(s)) for w, s in record["words"]]
        info = self.info()
        key = self._key(doc.id, info.model)
        record = self.cache.get(key)
        if record is None:
            budget = info.input_budget - len(
                _WORD.findall(self.template.suffix)
            ) - WRAPPER_TOKEN_MARGIN
            text = truncate_to_words(doc.text, max(budget, 1))
            prompt = build_prompt(text, self.template)
            body = self._post(
                "/v1/topk", {"text": prompt, "k": self.k * self.OVERFETCH}
            )
            record = {
                "doc_id": doc.id,
                "template": self.template.suffix,
                "k": self.k,
                "model": info.model,
                "words": [
                    [p["token"], float(p["score"])] for p in body["predictions"]
                ],
            }
            self.cache.append(key, record)
        return [(w, float(s)) for w, s in record["words"]]

    def warm(self, docs, parallelism: int = DEFAULT_PARALLELISM) -> None:
        """Fetch predictions for many documents with bounded concurrency."""
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            list(pool.map(self.predictions, docs))


class EmbedClient(_ServiceClient):
    """Per-word contextual embeddings and context-free token embeddings."""

    @property
    def dim(self) -> int:
        return self.info().dim

    @property
    def layer(self) -> str:
        return self.info().layer

    def embed(self, text: str) -> tuple[list[str], np.ndarray]:
        """Word-level tokens and one embedding row per token."""
        if not text.strip():
            raise ValidationError("cannot embed empty text")
        key = "embed:" + text_key(text)
        record = self.cache.get(key)
        if record is None:
            if self.offline:
                raise TransportError(
                    "offline mode: no cached embedding for text "
                    f"starting {text[:40]!r}"
                )
            info = self.info()
            body = self._post(
                "/v1/embed", {"text": truncate_to_words(text, info.input_budget)}
            )
            record = {"tokens": body["tokens"], "vectors": body["vectors"]}
            self.cache.append(key, record)
        vectors = np.asarray(record["vectors"], dtype=np.float64)
        tokens = list(record["tokens"])
        if vectors.shape[0] != len(tokens):
            raise ValidationError(
                f"embedding cache corrupt: {len(tokens)} tokens but "
                f"{vectors.shape[0]} vectors"
            )
        return tokens, vectors

    def token_embed(self, word: str) -> np.ndarray | None:
        """Context-free embedding; None when the service knows no such token."""
        key = "token:" + word
        record = self.cache.get(key)
        if record is None:
            if self.offline:
                raise TransportError(
                    f"offline mode: no cached token embedding for {word!r}"
                )
            body = self._post("/v1/token_embed", {"word": word}, allow_404=True)
            vector = None if body is None else body["vector"]
            record = {"word": word, "vector": vector}
            self.cache.append(key, record)
        if record["vector"] is None:
            return None
        return np.asarray(record["vector"], dtype=np.float64)

    def warm(self, texts, parallelism: int = DEFAULT_PARALLELISM) -> None:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            list(pool.map(self.embed, texts))


class PosClient(_ServiceClient):
    """Part-of-speech tags for raw text, cached by text hash."""

    def tags(self, text: str) -> list[tuple[str, str]]:
        if not text.strip():
            raise ValidationError("cannot tag empty text")
        key = "pos:" + text_key(text)
        record = self.cache.get(key)
        if record is None:
            if self.offline:
                raise TransportError(
                    "offline mode: no cached POS tags for text "
                    f"starting {text[:40]!r}"
                )
            body = self._post("/v1/pos", {"text": text})
            record = {
                "tokens": [[t["token"], t["pos"]] for t in body["tokens"]]
            }
            self.cache.append(key, record)
        return [(surface, pos) for surface, pos in record["tokens"]]
