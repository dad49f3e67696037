"""Retrieval-augmented multiple-choice QA engine and benchmark harness.

The package answers four-option multiple-choice questions with an LLM whose
prompt is augmented by evidence retrieved from a chunked document corpus.
Three retrieval strategies are supported (no retrieval, question-only
retrieval, and choice-conditioned retrieval that issues one query per answer
option and pools the results), two prompt styles (direct answer and
step-by-step reasoning), and a benchmark runner that reports accuracy by
difficulty, latency statistics, runtime buckets, one-way ANOVA across
strategies, and a parametric CO2 estimate per question.
"""

__version__ = "0.1.0"

from .bench import (
    EmissionConfig,
    McqItem,
    RunRecord,
    co2_model,
    load_dataset,
    run_benchmark,
    sample_questions,
    summarize,
)
from .corpus import Chunk, ChunkingConfig, Document, chunk_document, load_corpus
from .embeddings import EmbedderConfig, cosine_similarity, embed_texts
from .index import RetrievalHit, VectorIndex, build_index, load_index, save_index
from .llm_gateway import ExtractedAnswer, LlmConfig, LlmResponse, complete, extract_answer
from .prompting import AssembledPrompt, build_prompt
from .report import MetricsReport, emit_report
from .retrieval import EvidenceBundle, RetrievalStrategy, retrieve
from .stats import AnovaResult, one_way_anova

__all__ = [
    "AnovaResult",
    "AssembledPrompt",
    "Chunk",
    "ChunkingConfig",
    "Document",
    "EmbedderConfig",
    "EmissionConfig",
    "EvidenceBundle",
    "ExtractedAnswer",
    "LlmConfig",
    "LlmResponse",
    "McqItem",
    "MetricsReport",
    "RetrievalHit",
    "RetrievalStrategy",
    "RunRecord",
    "VectorIndex",
    "build_index",
    "build_prompt",
    "chunk_document",
    "co2_model",
    "complete",
    "cosine_similarity",
    "embed_texts",
    "emit_report",
    "extract_answer",
    "load_corpus",
    "load_dataset",
    "load_index",
    "one_way_anova",
    "retrieve",
    "run_benchmark",
    "sample_questions",
    "save_index",
    "summarize",
]
