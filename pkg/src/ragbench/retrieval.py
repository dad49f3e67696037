"""The three retrieval strategies.

no_rag returns no evidence. vanilla_rag searches with the bare
question. contextual_rag issues one query per answer option (question
plus option text), searches each, then pools the per-query top-k lists:
duplicates collapse to their best score, remembering which query
achieved it, and the pooled list is ordered by score descending with
ties on ascending chunk key.

The evidence text is the pooled chunks in that order, each prefixed by
a provenance header line ``[doc_id#seq]`` and separated by one blank
line; whole lowest-scored chunks are dropped until the text fits the
context budget.
"""

from __future__ import annotations

from dataclasses import dataclass

from .embeddings import EmbedderConfig, embed_texts
from .errors import ConfigError, EmptyInputError, InputError
from .index import RetrievalHit, VectorIndex

STRATEGY_KINDS = ("no_rag", "vanilla_rag", "contextual_rag")

BARE_QUESTION_QUERY_INDEX = 4


@dataclass(frozen=True)
class RetrievalStrategy:
    """Which strategy to run and its knobs.

    ``k_per_query`` is the per-query top-k. ``include_bare_question``
    adds the question alone as a fifth query to contextual_rag (query
    index 4); off by default. ``query_template`` forms each
    choice-conditioned query.
    """

    kind: str = "contextual_rag"
    k_per_query: int = 5
    max_context_chars: int = 12_000
    include_bare_question: bool = False
    query_template: str = "{question} {option}"

    def validate(self) -> None:
        if self.kind not in STRATEGY_KINDS:
            raise ConfigError(f"unknown retrieval strategy: {self.kind!r}")
        if self.k_per_query < 1:
            raise ConfigError(f"k_per_query must be >= 1, got {self.k_per_query}")
        if self.max_context_chars < 1:
            raise ConfigError("max_context_chars must be positive")
        if "{question}" not in self.query_template or "{option}" not in self.query_template:
            raise ConfigError("query_template needs {question} and {option} placeholders")


@dataclass(frozen=True)
class EvidenceBundle:
    """Pooled, de-duplicated evidence for one question.

    ``hits`` is everything retrieved (deduplicated, best score kept).
    ``provenance`` aligns with hits: (chunk_key, best_score, index of
    the query that achieved the best score). ``context_text`` is the
    budget-trimmed rendering.
    """

    hits: tuple[RetrievalHit, ...]
    context_text: str
    provenance: tuple[tuple[tuple[str, int], float, int], ...]


def provenance_header(chunk_key: tuple[str, int]) -> str:
    return f"[{chunk_key[0]}#{chunk_key[1]}]"


def retrieve(
    strategy: RetrievalStrategy,
    question: str,
    options: list[str],
    index: VectorIndex | None,
    embedder: EmbedderConfig,
) -> EvidenceBundle:
    """Run one strategy for one question. Pure: identical inputs give
    identical bundles.

    Raises:
        InputError: not exactly 4 non-empty options, or missing index
            for a retrieving strategy.
    """
    strategy.validate()
    if len(options) != 4:
        raise InputError(f"expected exactly 4 options, got {len(options)}")
    if any(not o for o in options):
        raise InputError("options must be non-empty")
    if not question:
        raise EmptyInputError("question is empty")

    if strategy.kind == "no_rag":
        return EvidenceBundle(hits=(), context_text="", provenance=())

    if index is None or len(index) == 0:
        raise InputError(f"strategy {strategy.kind} needs a non-empty index")

    if strategy.kind == "vanilla_rag":
        queries = [question]
        query_indices = [0]
    else:
        queries = [strategy.query_template.format(question=question, option=o) for o in options]
        query_indices = [0, 1, 2, 3]
        if strategy.include_bare_question:
            queries.append(question)
            query_indices.append(BARE_QUESTION_QUERY_INDEX)

    vectors = embed_texts(queries, embedder)

    # union keyed by chunk_key, keeping max score and the first query
    # index that achieved it (strict > keeps the earliest on ties)
    best: dict[tuple[str, int], tuple[float, int, str]] = {}
    for qi, vec in zip(query_indices, vectors):
        for hit in index.search(vec, strategy.k_per_query):
            cur = best.get(hit.chunk_key)
            if cur is None or hit.score > cur[0]:
                best[hit.chunk_key] = (hit.score, qi, hit.text)

    pooled = sorted(best.items(), key=lambda kv: (-kv[1][0], kv[0]))
    hits = tuple(RetrievalHit(chunk_key=k, score=s, text=t) for k, (s, qi, t) in pooled)
    provenance = tuple((k, s, qi) for k, (s, qi, t) in pooled)
    context_text = _render_context(hits, strategy.max_context_chars)
    return EvidenceBundle(hits=hits, context_text=context_text, provenance=provenance)


def _render_context(hits: tuple[RetrievalHit, ...], budget: int) -> str:
    blocks = [f"{provenance_header(h.chunk_key)}\n{h.text}" for h in hits]
    while blocks:
        total = sum(len(b) for b in blocks) + 2 * (len(blocks) - 1)
        if total <= budget:
            break
        blocks.pop()  # hits are score-descending: drop the worst whole chunk
    return "\n\n".join(blocks)
