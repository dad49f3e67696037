"""Command-line entry point.

Subcommands: ingest (corpus -> chunks), index (chunks -> vector index),
ask (answer one question), bench (run a strategy/prompt grid over a
dataset), report (records -> json or markdown report).

Exit codes: 0 success, 1 internal error, 2 input error, 3 network or
remote-service error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .bench import (
    EmissionConfig,
    load_dataset,
    read_records_jsonl,
    run_benchmark,
    sample_questions,
    summarize,
    write_records_jsonl,
)
from .config import STRATEGY_ALIASES, STYLE_ALIASES, resolve_config
from .corpus import (
    chunk_document,
    load_corpus,
    read_chunks_jsonl,
    verify_chunks,
    write_chunks_jsonl,
)
from .errors import (
    ConfigError,
    ContractViolationError,
    InputError,
    RagBenchError,
    TransportError,
)
from .index import build_index, load_index
from .llm_gateway import LlmConfig, complete, extract_answer
from .prompting import OPTION_LETTERS, build_prompt
from .retrieval import RetrievalStrategy, provenance_header, retrieve

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_NETWORK = 3

_LLM_KIND_ALIASES = {
    "http": "http",
    "mock-uniform": "mock_uniform",
    "mock_uniform": "mock_uniform",
    "mock-oracle": "mock_oracle",
    "mock_oracle": "mock_oracle",
}
_EMBED_KIND_ALIASES = {
    "det": "deterministic_test",
    "deterministic_test": "deterministic_test",
    "http": "http",
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose >= 2 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (TransportError, ContractViolationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RagBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception:  # noqa: BLE001 - last-resort mapping to exit code 1
        logger.exception("internal error")
        return EXIT_INTERNAL


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ragbench",
        description="Retrieval-augmented multiple-choice QA engine and benchmark harness.",
    )
    parser.add_argument("--version", action="version", version=f"ragbench {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load a corpus and write overlapping chunks as jsonl")
    p.add_argument("corpus_path")
    p.add_argument("out_chunks_path")
    p.add_argument("--format", choices=["auto", "dir", "jsonl"], default="auto")
    p.add_argument("--chunk-size", type=int, dest="chunk_size")
    p.add_argument("--overlap", type=int, dest="chunk_overlap")
    p.add_argument("--config", dest="config_file")
    p.add_argument("--verify", action="store_true", help="re-check coverage after writing")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("index", help="embed chunks and build the vector index file")
    p.add_argument("chunks_path")
    p.add_argument("index_path")
    _add_embed_flags(p)
    p.add_argument("--config", dest="config_file")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("ask", help="answer one four-option question")
    p.add_argument("index_path", help="vector index file, or '-' with --strategy none")
    p.add_argument("--question", required=True)
    p.add_argument("--options", nargs=4, required=True, metavar=("A", "B", "C", "D"))
    _add_run_flags(p)
    p.set_defaults(func=cmd_ask)

    p = sub.add_parser("bench", help="run a strategy/prompt grid over a dataset")
    p.add_argument("index_path", help="vector index file, or '-' if every strategy is none")
    p.add_argument("dataset_path")
    p.add_argument("--dataset-format", choices=["auto", "canonical_jsonl", "oran_bench_json"], default="auto")
    p.add_argument("--strategies", default=None, help="comma list of none,rag,corag")
    p.add_argument("--prompts", default=None, help="comma list of qa,cot")
    p.add_argument("--per-difficulty", type=int, dest="per_difficulty")
    p.add_argument("--out-records", default="records.jsonl")
    p.add_argument("--out-report", default="report.json")
    _add_run_flags(p, with_strategy=False)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="render a records file as a json or markdown report")
    p.add_argument("records_path")
    p.add_argument("--format", choices=["json", "markdown"], default="markdown")
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.set_defaults(func=cmd_report)
    return parser


def _add_embed_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--embed", choices=sorted(_EMBED_KIND_ALIASES), dest="embed_kind")
    p.add_argument("--embed-url", dest="embed_url")
    p.add_argument("--embed-model", dest="embed_model")
    p.add_argument("--dims", type=int, dest="embed_dims")


def _add_run_flags(p: argparse.ArgumentParser, with_strategy: bool = True) -> None:
    if with_strategy:
        p.add_argument("--strategy", choices=["none", "rag", "corag"])
        p.add_argument("--prompt", choices=["qa", "cot"])
    p.add_argument("--k", type=int)
    p.add_argument("--max-context-chars", type=int, dest="max_context_chars")
    p.add_argument("--include-bare-question", action="store_const", const=True,
                   dest="include_bare_question", default=None)
    p.add_argument("--llm", choices=sorted(_LLM_KIND_ALIASES), dest="llm_kind")
    p.add_argument("--llm-url", dest="llm_url")
    p.add_argument("--llm-model", dest="llm_model")
    p.add_argument("--oracle-key", dest="oracle_key", help="answer-key json for --llm mock-oracle")
    p.add_argument("--seed", type=int)
    p.add_argument("--power-w", type=float, dest="power_w")
    p.add_argument("--pue", type=float)
    p.add_argument("--carbon-intensity", type=float, dest="carbon_intensity")
    p.add_argument("--config", dest="config_file")
    _add_embed_flags(p)


def _overrides_from(args: argparse.Namespace) -> dict:
    keys = (
        "chunk_size", "chunk_overlap", "embed_kind", "embed_url", "embed_model",
        "embed_dims", "llm_kind", "llm_url", "llm_model", "strategy", "prompt",
        "k", "max_context_chars", "include_bare_question", "power_w", "pue",
        "carbon_intensity", "seed", "per_difficulty",
    )
    out = {}
    for key in keys:
        val = getattr(args, key, None)
        if val is None:
            continue
        if key == "embed_kind":
            val = _EMBED_KIND_ALIASES[val]
        if key == "llm_kind":
            val = _LLM_KIND_ALIASES[val]
        out[key] = val
    return out


def _resolve(args: argparse.Namespace):
    return resolve_config(
        config_file=getattr(args, "config_file", None),
        env=os.environ,
        overrides=_overrides_from(args),
    )


def _load_answer_key(args: argparse.Namespace, cfg) -> LlmConfig:
    llm = cfg.llm
    path = getattr(args, "oracle_key", None)
    if llm.kind == "mock_oracle":
        if not path:
            raise ConfigError("--llm mock-oracle requires --oracle-key FILE")
        key = json.loads(Path(path).read_text(encoding="utf-8"))
        llm = LlmConfig(
            kind=llm.kind, endpoint_url=llm.endpoint_url, model_name=llm.model_name,
            timeout_s=llm.timeout_s, max_retries=llm.max_retries, seed=llm.seed,
            answer_key=key,
        )
    return llm


def _meta(cfg, extra: dict | None = None) -> dict:
    meta = {"tool_version": __version__, "config": cfg.to_dict()}
    if extra:
        meta.update(extra)
    return meta


def cmd_ingest(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    corpus_format = {"auto": "auto", "dir": "plain_dir", "jsonl": "jsonl"}[args.format]
    docs = load_corpus(args.corpus_path, format=corpus_format)
    all_chunks = []
    for doc in docs:
        all_chunks.extend(chunk_document(doc, cfg.chunking))
    write_chunks_jsonl(args.out_chunks_path, all_chunks, meta=_meta(cfg))
    if args.verify:
        chunks_by_doc: dict[str, list] = {}
        for c in all_chunks:
            chunks_by_doc.setdefault(c.doc_id, []).append(c)
        for doc in docs:
            verify_chunks(doc, chunks_by_doc.get(doc.doc_id, []), cfg.chunking)
        print(f"verified {len(docs)} document(s)")
    print(f"wrote {len(all_chunks)} chunks from {len(docs)} document(s) to {args.out_chunks_path}")
    return EXIT_OK


def cmd_index(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    chunks, _meta_in = read_chunks_jsonl(args.chunks_path)
    index = build_index(chunks, cfg.embedder)
    index.save(args.index_path)
    print(f"indexed {len(index)} chunks (dims={index.dims}) to {args.index_path}")
    return EXIT_OK


def cmd_ask(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    llm = _load_answer_key(args, cfg)
    index = None
    if cfg.strategy.kind != "no_rag":
        index = load_index(args.index_path)
        if index.dims != cfg.embedder.dims:
            raise ConfigError(
                f"index dims {index.dims} != embedder dims {cfg.embedder.dims} (use --dims)"
            )
    bundle = retrieve(cfg.strategy, args.question, list(args.options), index, cfg.embedder)
    prompt = build_prompt(cfg.style, bundle, args.question, list(args.options))
    resp = complete(prompt, llm)
    answer = extract_answer(resp.text, list(args.options))
    from .bench import co2_model  # local import keeps module load light

    letter = "-" if answer.choice_index is None else OPTION_LETTERS[answer.choice_index]
    print(f"answer: {letter}")
    print(f"rule: {answer.extraction_rule}")
    print(f"latency_s: {resp.latency_s:.6f}")
    print(f"co2_g: {co2_model(resp.latency_s, cfg.emission):.9f}")
    if bundle.hits:
        print("evidence:")
        for (key, score, qi) in bundle.provenance:
            print(f"  {provenance_header(key)} score={score:.4f} query={qi}")
    else:
        print("evidence: (none)")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    llm = _load_answer_key(args, cfg)

    strategies = [s.strip() for s in (args.strategies or cfg.raw["strategy"]).split(",")]
    styles = [s.strip() for s in (args.prompts or cfg.raw["prompt"]).split(",")]
    kinds = []
    for s in strategies:
        kind = STRATEGY_ALIASES.get(s.lower())
        if kind is None:
            raise ConfigError(f"unknown strategy {s!r} (use none|rag|corag)")
        kinds.append(kind)
    style_kinds = []
    for s in styles:
        style = STYLE_ALIASES.get(s.lower())
        if style is None:
            raise ConfigError(f"unknown prompt style {s!r} (use qa|cot)")
        style_kinds.append(style)

    grid = [
        (
            RetrievalStrategy(
                kind=kind,
                k_per_query=cfg.strategy.k_per_query,
                max_context_chars=cfg.strategy.max_context_chars,
                include_bare_question=cfg.strategy.include_bare_question,
            ),
            style,
        )
        for kind in kinds
        for style in style_kinds
    ]

    index = None
    if any(kind != "no_rag" for kind in kinds):
        if args.index_path == "-":
            raise ConfigError("index path '-' is only allowed when every strategy is none")
        index = load_index(args.index_path)
        if index.dims != cfg.embedder.dims:
            raise ConfigError(
                f"index dims {index.dims} != embedder dims {cfg.embedder.dims} (use --dims)"
            )

    items = load_dataset(args.dataset_path, format=args.dataset_format)
    if cfg.per_difficulty > 0:
        items = sample_questions(items, cfg.per_difficulty, cfg.seed)

    records = run_benchmark(items, grid, index, cfg.embedder, llm, cfg.emission, seed=cfg.seed)

    meta = _meta(cfg, {
        "strategies": sorted(set(kinds), key=kinds.index),
        "prompts": sorted(set(style_kinds), key=style_kinds.index),
        "dataset_path": str(args.dataset_path),
        "index_path": str(args.index_path),
        "n_items": len(items),
    })
    write_records_jsonl(args.out_records, records, meta=meta)

    report = summarize(records)
    report.config = meta["config"] | {
        "strategies": meta["strategies"],
        "prompts": meta["prompts"],
        "n_items": len(items),
    }
    report.tool_version = __version__
    from .report import emit_report

    emit_report(report, "json", args.out_report)
    print(f"wrote {len(records)} records to {args.out_records}")
    print(f"wrote report to {args.out_report}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    records, meta = read_records_jsonl(args.records_path)
    report = summarize(records)
    report.config = meta.get("config", {})
    report.tool_version = meta.get("tool_version", __version__)
    from .report import render_json, render_markdown

    text = render_json(report) if args.format == "json" else render_markdown(report)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.format} report to {args.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
