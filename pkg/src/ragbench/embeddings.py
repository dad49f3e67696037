"""Embedding backends and the similarity measure.

Two embedder kinds share one config type: ``http`` posts batches to an
external embedding service, ``deterministic_test`` is an offline
feature-hashing embedder (token unigrams and bigrams hashed into a
fixed number of signed buckets, then L2-normalized) whose output
depends only on the text, the dims, and the seed, so the whole test
suite runs without a network.

Similarity is cosine; vectors are float32 at rest, accumulation is
float64.
"""

from __future__ import annotations

import logging
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import requests

from .errors import (
    ConfigError,
    ContractViolationError,
    DimensionMismatchError,
    EmptyInputError,
    TransportError,
    ZeroVectorError,
)
from .hashing import fnv1a64, mix64

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[0-9A-Za-z]+")


@dataclass(frozen=True)
class EmbedderConfig:
    """How to turn text into vectors.

    ``endpoint_url`` and ``model_name`` apply to the http kind only.
    ``dims`` is authoritative: a service reply with any other width is
    a contract violation.
    """

    kind: str = "deterministic_test"  # "http" | "deterministic_test"
    endpoint_url: str = "http://localhost:11434"
    model_name: str = "nomic-embed-text"
    dims: int = 256
    timeout_s: float = 30.0
    max_retries: int = 2
    seed: int = 0
    batch_size: int = 64
    concurrency: int = 4

    def validate(self) -> None:
        if self.kind not in ("http", "deterministic_test"):
            raise ConfigError(f"unknown embedder kind: {self.kind!r}")
        if self.dims <= 0:
            raise ConfigError(f"dims must be positive, got {self.dims}")
        if self.timeout_s <= 0:
            raise ConfigError("timeout_s must be positive")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.batch_size <= 0 or self.concurrency <= 0:
            raise ConfigError("batch_size and concurrency must be positive")


def embed_texts(texts: list[str], cfg: EmbedderConfig) -> list[np.ndarray]:
    """Embed texts, one float32 vector of cfg.dims per input, in order.

    Raises:
        EmptyInputError: no texts, or an empty text.
        TransportError: http transport failed after all retries.
        ContractViolationError: service reply outside its contract.
    """
    cfg.validate()
    if not texts:
        raise EmptyInputError("no texts to embed")
    for i, t in enumerate(texts):
        if not t:
            raise EmptyInputError(f"text at position {i} is empty")
    if cfg.kind == "deterministic_test":
        return [_feature_hash_embed(t, cfg.dims, cfg.seed) for t in texts]
    return _embed_http(texts, cfg)


def _feature_hash_embed(text: str, dims: int, seed: int) -> np.ndarray:
    tokens = [t.lower() for t in _TOKEN_RE.findall(text)]
    feats = tokens + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
    if not feats:
        feats = ["\x00" + text]  # tokenless input still gets a direction
    acc = np.zeros(dims, dtype=np.float64)
    for f in feats:
        h = mix64(fnv1a64(f.encode("utf-8")), seed)
        acc[h % dims] += 1.0 if (h >> 32) & 1 == 0 else -1.0
    if not acc.any():  # sign cancellation across colliding buckets
        acc[fnv1a64(text.encode("utf-8")) % dims] = 1.0
    return (acc / np.linalg.norm(acc)).astype(np.float32)


def _embed_http(texts: list[str], cfg: EmbedderConfig) -> list[np.ndarray]:
    batches = [texts[i : i + cfg.batch_size] for i in range(0, len(texts), cfg.batch_size)]
    if len(batches) == 1 or cfg.concurrency == 1:
        results = [_embed_batch(b, cfg) for b in batches]
    else:
        with ThreadPoolExecutor(max_workers=cfg.concurrency) as pool:
            results = list(pool.map(lambda b: _embed_batch(b, cfg), batches))
    return [vec for batch in results for vec in batch]


def _embed_batch(batch: list[str], cfg: EmbedderConfig) -> list[np.ndarray]:
    url = cfg.endpoint_url.rstrip("/") + "/api/embed"
    payload = {"model": cfg.model_name, "input": batch}
    attempts = cfg.max_retries + 1
    last_exc: Exception | None = None
    for attempt in range(1, attempts + 1):
        try:
            resp = requests.post(url, json=payload, timeout=cfg.timeout_s)
            break
        except requests.RequestException as exc:
            last_exc = exc
            logger.warning("embed attempt %d/%d failed: %s", attempt, attempts, exc)
            if attempt < attempts:
                time.sleep(min(0.2 * attempt, 2.0))
    else:
        raise TransportError(f"embedding request to {url} failed: {last_exc}", attempts)

    if resp.status_code != 200:
        raise ContractViolationError(f"embedding service returned HTTP {resp.status_code}")
    try:
        body = resp.json()
    except ValueError as exc:
        raise ContractViolationError(f"embedding service returned non-JSON body: {exc}") from exc
    embeddings = body.get("embeddings") if isinstance(body, dict) else None
    if not isinstance(embeddings, list) or len(embeddings) != len(batch):
        raise ContractViolationError(
            f"embedding service returned {0 if not isinstance(embeddings, list) else len(embeddings)} "
            f"vectors for {len(batch)} inputs"
        )
    out = []
    for row in embeddings:
        vec = np.asarray(row, dtype=np.float32)
        if vec.ndim != 1 or vec.shape[0] != cfg.dims:
            raise ContractViolationError(
                f"embedding service returned dims {vec.shape} but config says {cfg.dims}"
            )
        out.append(vec)
    return out


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two vectors, in [-1, 1].

    Accumulates in float64. For pre-normalized vectors this equals the
    dot product.

    Raises:
        DimensionMismatchError: shapes disagree.
        ZeroVectorError: either input has zero norm.
    """
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.ndim != 1 or vb.ndim != 1 or va.shape != vb.shape:
        raise DimensionMismatchError(f"cosine: shapes {va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("cosine similarity undefined for zero-norm input")
    return float(np.dot(va, vb) / (na * nb))
