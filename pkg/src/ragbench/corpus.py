"""Document loading and overlap-aware chunking.

Splits documents into bounded chunks for embedding and retrieval. The
splitter walks the text left to right: each chunk ends at the latest
boundary of the highest-priority separator that still fits the size
budget (hard character cut as the last resort), and the next chunk
starts an overlap before the previous end, snapped to a separator
boundary inside the overlap window when one exists.

Guarantees, for any input:
  - every character is covered by at least one chunk,
  - no chunk exceeds the configured budget,
  - char_start and char_end are strictly increasing,
  - chunk text is the exact slice of the source at its offsets.

Offsets count Unicode code points, not bytes.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import (
    ConfigError,
    DatasetError,
    DuplicateKeyError,
    EmptyInputError,
    InputError,
)

logger = logging.getLogger(__name__)

DEFAULT_SEPARATORS: tuple[str, ...] = ("\n\n", "\n", ". ", " ", "")


@dataclass(frozen=True)
class Document:
    """A source document: stable unique id, display title, full text."""

    doc_id: str
    title: str
    text: str


@dataclass(frozen=True)
class Chunk:
    """A contiguous span of one document; the retrieval unit.

    ``text`` always equals ``document.text[char_start:char_end]``.
    """

    doc_id: str
    seq: int
    text: str
    char_start: int
    char_end: int

    @property
    def key(self) -> tuple[str, int]:
        return (self.doc_id, self.seq)


@dataclass(frozen=True)
class ChunkingConfig:
    """Chunk budget, overlap carry, and separator priority order.

    The hierarchy is tried best-first; the mandatory trailing empty
    string is the character-level fallback.
    """

    max_chunk_chars: int = 1536
    overlap_chars: int = 256
    separator_hierarchy: tuple[str, ...] = DEFAULT_SEPARATORS

    def validate(self) -> None:
        if self.max_chunk_chars <= 0:
            raise ConfigError(f"max_chunk_chars must be positive, got {self.max_chunk_chars}")
        if not 0 <= self.overlap_chars < self.max_chunk_chars:
            raise ConfigError(
                f"overlap_chars must satisfy 0 <= overlap < max_chunk_chars, "
                f"got overlap={self.overlap_chars}, max={self.max_chunk_chars}"
            )
        if not self.separator_hierarchy or self.separator_hierarchy[-1] != "":
            raise ConfigError("separator_hierarchy must end with the empty-string fallback")
        if any(s == "" for s in self.separator_hierarchy[:-1]):
            raise ConfigError("only the last separator may be the empty string")


def chunk_document(doc: Document, cfg: ChunkingConfig | None = None) -> list[Chunk]:
    """Split one document into overlapping chunks.

    Pure function: identical inputs yield identical chunk lists.

    Raises:
        EmptyInputError: the document has no text.
        ConfigError: the config violates its invariants.
    """
    cfg = cfg or ChunkingConfig()
    cfg.validate()
    if not doc.text:
        raise EmptyInputError(f"document {doc.doc_id!r} has empty text")

    spans = _split_spans(doc.text, cfg)
    spans = _absorb_whitespace_spans(doc.text, spans, cfg.max_chunk_chars)
    return [
        Chunk(doc_id=doc.doc_id, seq=i, text=doc.text[s:e], char_start=s, char_end=e)
        for i, (s, e) in enumerate(spans)
    ]


def _split_spans(text: str, cfg: ChunkingConfig) -> list[tuple[int, int]]:
    n = len(text)
    seps = [s for s in cfg.separator_hierarchy if s]
    spans: list[tuple[int, int]] = []
    start = 0
    prev_end = 0
    while True:
        end = _pick_end(text, start, prev_end, cfg.max_chunk_chars, seps)
        spans.append((start, end))
        if end >= n:
            return spans
        start = _pick_next_start(text, start, end, cfg.overlap_chars, seps)
        prev_end = end


def _pick_end(text: str, start: int, floor: int, budget: int, seps: list[str]) -> int:
    """End offset for the chunk starting at ``start``.

    Must exceed ``floor`` (the previous chunk's end) so the walk makes
    progress. Prefers the latest boundary of the best separator within
    the budget; falls back to a hard cut at start + budget.
    """
    n = len(text)
    limit = start + budget
    if n <= limit:
        return n
    lo = max(start, floor)
    for sep in seps:
        pos = text.rfind(sep, start, limit)
        if pos != -1 and pos + len(sep) > lo:
            return pos + len(sep)
    return limit


def _pick_next_start(text: str, prev_start: int, prev_end: int, overlap: int, seps: list[str]) -> int:
    """Start offset of the chunk after span ``[prev_start, prev_end)``.

    Defaults to ``prev_end - overlap`` (exact carry); when a separator
    boundary falls inside the overlap window the start snaps to the one
    closest to the default, so the carried suffix begins cleanly.
    """
    lo = max(prev_end - overlap, prev_start + 1)
    if lo >= prev_end:
        return prev_end
    for sep in seps:
        q = text.find(sep, max(prev_start, lo - len(sep)), prev_end)
        if q != -1 and q + len(sep) < prev_end:
            return q + len(sep)
    return lo


def _absorb_whitespace_spans(
    text: str, spans: list[tuple[int, int]], budget: int
) -> list[tuple[int, int]]:
    """Merge whitespace-only spans into a neighbor when the result still
    fits the budget; otherwise keep them (coverage beats suppression)."""
    merged: list[tuple[int, int]] = []
    pending: tuple[int, int] | None = None  # whitespace span awaiting a forward merge
    for s, e in spans:
        if pending is not None:
            ps, _pe = pending
            if e - ps <= budget:
                s = ps
            else:
                merged.append(pending)
            pending = None
        if not text[s:e].strip():
            if merged and e - merged[-1][0] <= budget:
                merged[-1] = (merged[-1][0], e)
            else:
                pending = (s, e)
        else:
            merged.append((s, e))
    if pending is not None:
        merged.append(pending)
    return merged


def verify_chunks(doc: Document, chunks: list[Chunk], cfg: ChunkingConfig | None = None) -> None:
    """Assert the chunk-list invariants for one document.

    Raises InputError on the first violated invariant. Used by the CLI
    ``--verify`` flag after ingestion.
    """
    cfg = cfg or ChunkingConfig()
    if not chunks:
        raise InputError(f"document {doc.doc_id!r}: no chunks")
    prev_start, prev_end = -1, -1
    covered_to = 0
    for i, c in enumerate(chunks):
        if c.seq != i:
            raise InputError(f"document {doc.doc_id!r}: seq {c.seq} at position {i}")
        if c.char_end - c.char_start > cfg.max_chunk_chars:
            raise InputError(f"chunk {c.key} exceeds budget: {c.char_end - c.char_start}")
        if c.text != doc.text[c.char_start:c.char_end]:
            raise InputError(f"chunk {c.key} text does not match its offsets")
        if c.char_start <= prev_start or c.char_end <= prev_end:
            raise InputError(f"chunk {c.key} offsets not strictly increasing")
        if c.char_start > covered_to:
            raise InputError(
                f"coverage gap before chunk {c.key}: [{covered_to}, {c.char_start})"
            )
        covered_to = max(covered_to, c.char_end)
        prev_start, prev_end = c.char_start, c.char_end
    if chunks[0].char_start != 0 or covered_to != len(doc.text):
        raise InputError(f"document {doc.doc_id!r}: chunks do not cover [0, {len(doc.text)})")


def load_corpus(path: str | Path, format: str = "auto") -> list[Document]:
    """Load documents from a directory of UTF-8 files or a jsonl file.

    plain_dir: one document per regular file, doc_id is the relative
    path. jsonl: one JSON object per line with keys doc_id, text, and
    optional title. Records with empty text are skipped with a warning;
    structural problems (unreadable file, malformed line, duplicate id)
    raise. Result is sorted by doc_id.
    """
    p = Path(path)
    if not p.exists():
        raise InputError(f"corpus path does not exist: {p}")
    if format == "auto":
        format = "plain_dir" if p.is_dir() else "jsonl"
    if format == "plain_dir":
        docs = _load_plain_dir(p)
    elif format == "jsonl":
        docs = _load_jsonl(p)
    else:
        raise ConfigError(f"unknown corpus format: {format!r}")

    seen: set[str] = set()
    for d in docs:
        if d.doc_id in seen:
            raise DuplicateKeyError(d.doc_id)
        seen.add(d.doc_id)
    if not docs:
        raise EmptyInputError(f"no documents loaded from {p}")
    return sorted(docs, key=lambda d: d.doc_id)


def _load_plain_dir(root: Path) -> list[Document]:
    docs = []
    for f in sorted(root.rglob("*")):
        if not f.is_file() or f.name.startswith("."):
            continue
        try:
            text = f.read_text(encoding="utf-8")
        except UnicodeDecodeError as exc:
            raise InputError(f"{f}: not valid UTF-8: {exc}") from exc
        rel = f.relative_to(root).as_posix()
        if not text:
            logger.warning("skipping %s: empty text", rel)
            continue
        docs.append(Document(doc_id=rel, title=f.stem, text=text))
    return docs


def _load_jsonl(path: Path) -> list[Document]:
    docs = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: malformed JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise DatasetError(f"{path}:{lineno}: expected an object")
            doc_id = obj.get("doc_id")
            text = obj.get("text")
            if not isinstance(doc_id, str) or not doc_id:
                raise DatasetError(f"{path}:{lineno}: missing or empty doc_id")
            if not isinstance(text, str):
                raise DatasetError(f"{path}:{lineno}: missing text for doc_id {doc_id!r}")
            if not text:
                logger.warning("%s:%d: skipping doc_id %r: empty text", path, lineno, doc_id)
                continue
            docs.append(Document(doc_id=doc_id, title=str(obj.get("title", "")), text=text))
    return docs


def write_chunks_jsonl(path: str | Path, chunks: Iterable[Chunk], meta: dict | None = None) -> None:
    """Write chunks as jsonl; an optional leading meta record carries the
    producing configuration and tool version."""
    with Path(path).open("w", encoding="utf-8") as fh:
        if meta is not None:
            fh.write(json.dumps({"meta": meta}, sort_keys=True) + "\n")
        for c in chunks:
            rec = {
                "doc_id": c.doc_id,
                "seq": c.seq,
                "text": c.text,
                "char_start": c.char_start,
                "char_end": c.char_end,
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_chunks_jsonl(path: str | Path) -> tuple[list[Chunk], dict]:
    """Read a chunk file written by :func:`write_chunks_jsonl`."""
    chunks: list[Chunk] = []
    meta: dict = {}
    p = Path(path)
    if not p.exists():
        raise InputError(f"chunk file does not exist: {p}")
    with p.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{p}:{lineno}: malformed JSON: {exc}") from exc
            if "meta" in obj and lineno == 1:
                meta = obj["meta"]
                continue
            try:
                chunks.append(
                    Chunk(
                        doc_id=obj["doc_id"],
                        seq=int(obj["seq"]),
                        text=obj["text"],
                        char_start=int(obj["char_start"]),
                        char_end=int(obj["char_end"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise DatasetError(f"{p}:{lineno}: bad chunk record: {exc}") from exc
    if not chunks:
        raise EmptyInputError(f"no chunks in {p}")
    return chunks, meta
