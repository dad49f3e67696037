"""Flat exact vector store over chunks with top-k cosine search.

Entries are kept sorted by chunk key (doc_id, then seq) and vectors are
L2-normalized float32, so a search is one float64 mat-vec plus a stable
sort: ties on score resolve to ascending chunk key by construction.

On-disk layout (version 1, single file, little-endian):

    header: 8s magic | u32 version | u32 dims | u64 count | u32 crc32(payload)
    per entry: u32 len + doc_id utf-8 | u32 seq | u32 len + text utf-8
               | dims * f32 vector

Loading verifies structure first (truncation reported with expected vs
actual byte counts), then the payload checksum; a bad file never yields
a partial index.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Chunk
from .embeddings import EmbedderConfig, embed_texts
from .errors import (
    DimensionMismatchError,
    DuplicateKeyError,
    EmptyInputError,
    IndexChecksumError,
    IndexFormatError,
    IndexTruncationError,
    IndexVersionError,
    InputError,
    ZeroVectorError,
)

MAGIC = b"RBVECIDX"
VERSION = 1
_HEADER = struct.Struct("<8sIIQI")
_U32 = struct.Struct("<I")


@dataclass(frozen=True)
class RetrievalHit:
    """One search result: chunk key, cosine score, chunk text."""

    chunk_key: tuple[str, int]
    score: float
    text: str


class VectorIndex:
    """Immutable flat store of (chunk key, unit vector, text) entries."""

    def __init__(self, dims: int, keys: list[tuple[str, int]], texts: list[str], matrix: np.ndarray):
        if dims <= 0:
            raise InputError(f"dims must be positive, got {dims}")
        if matrix.shape != (len(keys), dims) or len(texts) != len(keys):
            raise InputError("keys, texts, and matrix disagree on entry count or dims")
        self.dims = dims
        self.version = VERSION
        self.keys = keys
        self.texts = texts
        self.matrix = np.ascontiguousarray(matrix, dtype=np.float32)
        self._matrix64: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.keys)

    def search(self, query_vector, k: int) -> list[RetrievalHit]:
        """The k entries with highest cosine to the query, score-descending,
        ties broken by ascending chunk key. Returns min(k, len) hits."""
        if k < 1:
            raise InputError(f"k must be >= 1, got {k}")
        if len(self.keys) == 0:
            raise EmptyInputError("search on an empty index")
        q = np.asarray(query_vector, dtype=np.float64)
        if q.ndim != 1 or q.shape[0] != self.dims:
            raise DimensionMismatchError(f"query dims {q.shape} vs index dims {self.dims}")
        qn = float(np.linalg.norm(q))
        if qn == 0.0:
            raise ZeroVectorError("zero-norm query vector")
        if self._matrix64 is None:
            self._matrix64 = self.matrix.astype(np.float64)
        scores = self._matrix64 @ (q / qn)
        # stable sort on -score: equal scores keep entry order == key order
        order = np.argsort(-scores, kind="stable")[:k]
        return [
            RetrievalHit(chunk_key=self.keys[i], score=float(scores[i]), text=self.texts[i])
            for i in order
        ]

    def save(self, path: str | Path) -> None:
        """Write the version-1 single-file format; deterministic bytes for
        identical contents."""
        payload = bytearray()
        for (doc_id, seq), text, row in zip(self.keys, self.texts, self.matrix):
            doc_b = doc_id.encode("utf-8")
            text_b = text.encode("utf-8")
            payload += _U32.pack(len(doc_b))
            payload += doc_b
            payload += _U32.pack(seq)
            payload += _U32.pack(len(text_b))
            payload += text_b
            payload += row.astype("<f4").tobytes()
        crc = zlib.crc32(bytes(payload)) & 0xFFFFFFFF
        header = _HEADER.pack(MAGIC, VERSION, self.dims, len(self.keys), crc)
        Path(path).write_bytes(header + bytes(payload))


def save_index(index: VectorIndex, path: str | Path) -> None:
    index.save(path)


def build_index(chunks: list[Chunk], embedder: EmbedderConfig) -> VectorIndex:
    """Embed chunks and assemble the store.

    Entries end up sorted by chunk key; vectors are L2-normalized and
    must be finite and nonzero.
    """
    if not chunks:
        raise EmptyInputError("no chunks to index")
    seen: set[tuple[str, int]] = set()
    for c in chunks:
        if c.key in seen:
            raise DuplicateKeyError(c.key)
        seen.add(c.key)
    ordered = sorted(chunks, key=lambda c: c.key)
    vectors = embed_texts([c.text for c in ordered], embedder)
    matrix = np.stack(vectors).astype(np.float64)
    if not np.isfinite(matrix).all():
        bad = int(np.argwhere(~np.isfinite(matrix).all(axis=1))[0][0])
        raise InputError(f"non-finite vector component for chunk {ordered[bad].key}")
    norms = np.linalg.norm(matrix, axis=1)
    zero = np.argwhere(norms == 0.0)
    if zero.size:
        raise ZeroVectorError(f"zero-norm vector for chunk {ordered[int(zero[0][0])].key}")
    matrix = (matrix / norms[:, None]).astype(np.float32)
    return VectorIndex(
        dims=embedder.dims,
        keys=[c.key for c in ordered],
        texts=[c.text for c in ordered],
        matrix=matrix,
    )


def load_index(path: str | Path) -> VectorIndex:
    """Load a version-1 index file.

    Raises:
        IndexFormatError: bad magic, bad counts, or trailing bytes.
        IndexVersionError: unsupported version.
        IndexTruncationError: file ends before the declared contents.
        IndexChecksumError: payload bytes do not match the header crc.
    """
    p = Path(path)
    if not p.exists():
        raise InputError(f"index file does not exist: {p}")
    data = p.read_bytes()
    if len(data) < _HEADER.size:
        raise IndexTruncationError(_HEADER.size, len(data), "header")
    magic, version, dims, count, crc = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise IndexFormatError(f"bad magic {magic!r}, not an index file")
    if version != VERSION:
        raise IndexVersionError(f"unsupported index version {version}, expected {VERSION}")
    if dims <= 0 or count <= 0:
        raise IndexFormatError(f"header declares dims={dims}, count={count}")

    payload = data[_HEADER.size :]
    off = 0

    def take(nbytes: int, what: str) -> bytes:
        nonlocal off
        if off + nbytes > len(payload):
            raise IndexTruncationError(off + nbytes, len(payload), what)
        out = payload[off : off + nbytes]
        off += nbytes
        return out

    keys: list[tuple[str, int]] = []
    texts: list[str] = []
    rows: list[np.ndarray] = []
    vec_bytes = dims * 4
    for i in range(count):
        (doc_len,) = _U32.unpack(take(4, f"entry {i} doc_id length"))
        doc_id = take(doc_len, f"entry {i} doc_id").decode("utf-8")
        (seq,) = _U32.unpack(take(4, f"entry {i} seq"))
        (text_len,) = _U32.unpack(take(4, f"entry {i} text length"))
        text = take(text_len, f"entry {i} text").decode("utf-8")
        vec = np.frombuffer(take(vec_bytes, f"entry {i} vector"), dtype="<f4").copy()
        keys.append((doc_id, seq))
        texts.append(text)
        rows.append(vec)
    if off != len(payload):
        raise IndexFormatError(f"{len(payload) - off} trailing bytes after {count} entries")
    if zlib.crc32(payload) & 0xFFFFFFFF != crc:
        raise IndexChecksumError("payload checksum mismatch")
    return VectorIndex(dims=dims, keys=keys, texts=texts, matrix=np.stack(rows))
