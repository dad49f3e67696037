"""Benchmark harness: datasets, sampling, the runner, and metrics.

One RunRecord per (question, grid cell) feeds every report: accuracy by
difficulty, latency mean/SD, runtime-threshold buckets, per-style ANOVA
across strategies, and a parametric CO2 estimate

    grams = latency_s * avg_power_w * pue / 3_600_000 * intensity_g_per_kwh.

Execution is sequential so per-question latency reflects an unloaded
endpoint. Per-question LLM failures degrade to unanswered records with
an error note instead of aborting the run; unanswered always scores as
incorrect.
"""

from __future__ import annotations

import json
import logging
import statistics
from bisect import bisect_left
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .embeddings import EmbedderConfig
from .errors import (
    ConfigError,
    ContractViolationError,
    DatasetError,
    DegenerateInputError,
    EmptyInputError,
    InputError,
    TransportError,
)
from .hashing import SplitMix64, fisher_yates
from .index import VectorIndex
from .llm_gateway import LlmConfig, complete, extract_answer
from .prompting import OPTION_LETTERS, STYLE_KINDS, build_prompt
from .retrieval import STRATEGY_KINDS, RetrievalStrategy, retrieve
from .stats import AnovaResult, one_way_anova

logger = logging.getLogger(__name__)

DIFFICULTIES = ("easy", "medium", "hard")

# runtime buckets in seconds; the first bucket is closed at 5 so every
# latency lands in exactly one bucket
BUCKET_EDGES = (5.0, 10.0, 15.0, 20.0, 25.0, 50.0)
BUCKET_LABELS = (
    "Runtime < 5 sec",
    "5 sec < Runtime <= 10 sec",
    "10 sec < Runtime <= 15 sec",
    "15 sec < Runtime <= 20 sec",
    "20 sec < Runtime <= 25 sec",
    "25 sec < Runtime <= 50 sec",
    "Runtime > 50 sec",
)

_DIFFICULTY_ALIASES = {
    "easy": "easy",
    "medium": "medium",
    "intermediate": "medium",
    "immediate": "medium",
    "hard": "hard",
    "difficult": "hard",
}


@dataclass(frozen=True)
class McqItem:
    """One benchmark question: four options, a gold index, a difficulty."""

    id: str
    question: str
    options: tuple[str, str, str, str]
    correct_index: int
    difficulty: str


@dataclass(frozen=True)
class EmissionConfig:
    """Parameters of the power-times-time CO2 model."""

    avg_power_w: float = 360.0
    pue: float = 1.0
    carbon_intensity_g_per_kwh: float = 475.0

    def validate(self) -> None:
        if self.avg_power_w <= 0:
            raise ConfigError("avg_power_w must be positive")
        if self.pue < 1:
            raise ConfigError("pue must be >= 1")
        if self.carbon_intensity_g_per_kwh <= 0:
            raise ConfigError("carbon_intensity_g_per_kwh must be positive")


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one question under one (strategy, style) cell.

    ``chosen_index`` is None for unanswered. ``error`` notes a degraded
    LLM failure; such records carry no usable latency and are excluded
    from latency, bucket, and CO2 aggregates.
    """

    item_id: str
    strategy: str
    style: str
    difficulty: str
    chosen_index: int | None
    correct: bool
    latency_s: float
    co2_g: float
    retrieved_keys: tuple[tuple[str, int], ...]
    extraction_rule: str
    error: str | None = None


def co2_model(latency_s: float, cfg: EmissionConfig) -> float:
    """Estimated grams of CO2 for one inference of ``latency_s`` seconds."""
    cfg.validate()
    if latency_s < 0:
        raise InputError(f"latency must be >= 0, got {latency_s}")
    return latency_s * cfg.avg_power_w * cfg.pue / 3_600_000.0 * cfg.carbon_intensity_g_per_kwh


def load_dataset(path: str | Path, format: str = "canonical_jsonl") -> list[McqItem]:
    """Load MCQ items.

    canonical_jsonl: one object per line with keys id, question,
    options (4 strings), answer (0-based index or letter A-D), and
    difficulty (easy|medium|hard). oran_bench_json: a JSON file or a
    directory of them, each holding a list of [question, options,
    answer] triples (answer 1-based, possibly a digit string) or of
    objects with those fields; difficulty comes from the record when
    present, else from the file name.

    Invariant violations raise DatasetError with the record's line or
    position and id.
    """
    p = Path(path)
    if not p.exists():
        raise InputError(f"dataset path does not exist: {p}")
    if format == "auto":
        format = "canonical_jsonl" if p.suffix == ".jsonl" else "oran_bench_json"
    if format == "canonical_jsonl":
        return _load_canonical_jsonl(p)
    if format == "oran_bench_json":
        return _load_oran_bench(p)
    raise ConfigError(f"unknown dataset format: {format!r}")


def _parse_answer(raw, where: str) -> int:
    if isinstance(raw, bool):
        raise DatasetError(f"{where}: answer must be an index or letter, got {raw!r}")
    if isinstance(raw, int):
        idx = raw
    elif isinstance(raw, str) and raw.strip().upper() in OPTION_LETTERS:
        idx = OPTION_LETTERS.index(raw.strip().upper())
    else:
        raise DatasetError(f"{where}: answer must be 0..3 or A-D, got {raw!r}")
    if not 0 <= idx <= 3:
        raise DatasetError(f"{where}: answer index {idx} out of range")
    return idx


def _validated_item(
    item_id: str, question, options, correct_index: int, difficulty: str, where: str
) -> McqItem:
    if not isinstance(question, str) or not question.strip():
        raise DatasetError(f"{where}: missing or empty question (id {item_id!r})")
    if not isinstance(options, (list, tuple)) or len(options) != 4:
        raise DatasetError(
            f"{where}: expected exactly 4 options, got "
            f"{len(options) if isinstance(options, (list, tuple)) else type(options).__name__} "
            f"(id {item_id!r})"
        )
    opts = []
    for o in options:
        if not isinstance(o, str) or not o.strip():
            raise DatasetError(f"{where}: empty option (id {item_id!r})")
        opts.append(o)
    if len(set(opts)) != 4:
        raise DatasetError(f"{where}: options must be pairwise distinct (id {item_id!r})")
    return McqItem(
        id=item_id,
        question=question,
        options=(opts[0], opts[1], opts[2], opts[3]),
        correct_index=correct_index,
        difficulty=difficulty,
    )


def _load_canonical_jsonl(path: Path) -> list[McqItem]:
    items: list[McqItem] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{where}: malformed JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise DatasetError(f"{where}: expected an object")
            item_id = obj.get("id")
            if not isinstance(item_id, str) or not item_id:
                raise DatasetError(f"{where}: missing id")
            if item_id in seen:
                raise DatasetError(f"{where}: duplicate id {item_id!r}")
            seen.add(item_id)
            difficulty = str(obj.get("difficulty", "")).lower()
            if difficulty not in DIFFICULTIES:
                raise DatasetError(
                    f"{where}: unknown difficulty {obj.get('difficulty')!r} (id {item_id!r})"
                )
            idx = _parse_answer(obj.get("answer"), where)
            items.append(
                _validated_item(item_id, obj.get("question"), obj.get("options"), idx, difficulty, where)
            )
    if not items:
        raise EmptyInputError(f"no items in {path}")
    return items


def _difficulty_from_name(name: str) -> str | None:
    lowered = name.lower()
    for alias, canon in _DIFFICULTY_ALIASES.items():
        if alias in lowered:
            return canon
    return None


def _load_oran_bench(path: Path) -> list[McqItem]:
    files = sorted(path.glob("*.json")) if path.is_dir() else [path]
    if not files:
        raise EmptyInputError(f"no .json files under {path}")
    items: list[McqItem] = []
    for f in files:
        fallback = _difficulty_from_name(f.name)
        try:
            data = json.loads(f.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{f}: malformed JSON: {exc}") from exc
        if not isinstance(data, list):
            raise DatasetError(f"{f}: expected a top-level list")
        for pos, rec in enumerate(data):
            where = f"{f}[{pos}]"
            item_id = f"{f.stem}-{pos:05d}"
            if isinstance(rec, dict):
                question = rec.get("question")
                options = rec.get("options")
                raw_answer = rec.get("answer", rec.get("correct_answer"))
                raw_diff = rec.get("difficulty")
            elif isinstance(rec, list) and len(rec) >= 3:
                question, options, raw_answer = rec[0], rec[1], rec[2]
                raw_diff = rec[3] if len(rec) > 3 else None
            else:
                raise DatasetError(f"{where}: unrecognized record shape")
            if isinstance(raw_answer, str) and raw_answer.strip().isdigit():
                raw_answer = int(raw_answer.strip())
            if isinstance(raw_answer, int) and not isinstance(raw_answer, bool):
                raw_answer = raw_answer - 1  # native layout is 1-based
            idx = _parse_answer(raw_answer, where)
            difficulty = None
            if isinstance(raw_diff, str):
                difficulty = _DIFFICULTY_ALIASES.get(raw_diff.lower())
            difficulty = difficulty or fallback
            if difficulty is None:
                raise DatasetError(f"{where}: cannot determine difficulty (id {item_id!r})")
            items.append(_validated_item(item_id, question, options, idx, difficulty, where))
    if not items:
        raise EmptyInputError(f"no items under {path}")
    return items


def sample_questions(items: Sequence[McqItem], per_difficulty: int, seed: int) -> list[McqItem]:
    """Seeded, reproducible sample of ``per_difficulty`` items from each
    difficulty class.

    Pinned algorithm: one splitmix64 stream seeded with ``seed`` drives
    a Fisher-Yates shuffle of each class (classes processed easy,
    medium, hard; items in input order); the first ``per_difficulty``
    of each shuffle are taken, concatenated in difficulty order.
    """
    if per_difficulty < 0:
        raise InputError(f"per_difficulty must be >= 0, got {per_difficulty}")
    if per_difficulty == 0:
        return []
    by_diff: dict[str, list[McqItem]] = {d: [] for d in DIFFICULTIES}
    for it in items:
        by_diff[it.difficulty].append(it)
    rng = SplitMix64(seed)
    sampled: list[McqItem] = []
    for d in DIFFICULTIES:
        pool = by_diff[d]
        if len(pool) < per_difficulty:
            raise InputError(
                f"difficulty {d!r} has only {len(pool)} items, need {per_difficulty}"
            )
        sampled.extend(fisher_yates(pool, rng)[:per_difficulty])
    return sampled


def run_benchmark(
    items: Sequence[McqItem],
    grid: Sequence[tuple[RetrievalStrategy, str]],
    index: VectorIndex | None,
    embedder: EmbedderConfig,
    llm: LlmConfig,
    emission_cfg: EmissionConfig,
    seed: int | None = None,
) -> list[RunRecord]:
    """Run every item through every grid cell, sequentially.

    ``seed``, when given, replaces the mock LLM seed so one flag drives
    the whole run. Recorded latency comes from complete() alone; the
    retrieval stage never contributes to it.
    """
    if not items:
        raise EmptyInputError("no items to run")
    if not grid:
        raise EmptyInputError("empty strategy/style grid")
    for strategy, style in grid:
        strategy.validate()
        if style not in STYLE_KINDS:
            raise ConfigError(f"unknown prompt style: {style!r}")
    embedder.validate()
    llm.validate()
    emission_cfg.validate()
    if seed is not None and llm.kind != "http":
        llm = LlmConfig(
            kind=llm.kind,
            endpoint_url=llm.endpoint_url,
            model_name=llm.model_name,
            timeout_s=llm.timeout_s,
            max_retries=llm.max_retries,
            seed=seed,
            answer_key=llm.answer_key,
        )

    records: list[RunRecord] = []
    for strategy, style in grid:
        for item in items:
            bundle = retrieve(strategy, item.question, list(item.options), index, embedder)
            prompt = build_prompt(style, bundle, item.question, list(item.options))
            keys = tuple(h.chunk_key for h in bundle.hits)
            try:
                resp = complete(prompt, llm)
            except (TransportError, ContractViolationError) as exc:
                logger.warning("item %s: LLM failure, recording unanswered: %s", item.id, exc)
                records.append(
                    RunRecord(
                        item_id=item.id,
                        strategy=strategy.kind,
                        style=style,
                        difficulty=item.difficulty,
                        chosen_index=None,
                        correct=False,
                        latency_s=0.0,
                        co2_g=0.0,
                        retrieved_keys=keys,
                        extraction_rule="unanswered",
                        error=str(exc),
                    )
                )
                continue
            answer = extract_answer(resp.text, list(item.options))
            records.append(
                RunRecord(
                    item_id=item.id,
                    strategy=strategy.kind,
                    style=style,
                    difficulty=item.difficulty,
                    chosen_index=answer.choice_index,
                    correct=answer.choice_index == item.correct_index,
                    latency_s=resp.latency_s,
                    co2_g=co2_model(resp.latency_s, emission_cfg),
                    retrieved_keys=keys,
                    extraction_rule=answer.extraction_rule,
                )
            )
    return records


def bucket_index(latency_s: float) -> int:
    """Index of the runtime bucket containing ``latency_s``."""
    return bisect_left(BUCKET_EDGES, latency_s)


def _mean_sd(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    mean = statistics.fmean(values)
    sd = statistics.stdev(values) if len(values) >= 2 else None
    return mean, sd


def summarize(records: Sequence[RunRecord]) -> "MetricsReport":
    """Aggregate records into the full metrics report.

    Accuracy counts unanswered as incorrect. Latency and CO2 use the
    sample SD (n-1); degraded-error records are excluded from those
    aggregates and from the bucket table. ANOVA compares latency across
    strategies within each prompt style, pooled and per difficulty.
    """
    from .report import MetricsReport  # local import to avoid a cycle

    if not records:
        raise EmptyInputError("no records to summarize")

    def sort_key(rec: RunRecord):
        return (
            STRATEGY_KINDS.index(rec.strategy),
            STYLE_KINDS.index(rec.style),
            DIFFICULTIES.index(rec.difficulty),
        )

    cells: dict[tuple[str, str, str], list[RunRecord]] = {}
    for rec in records:
        cells.setdefault((rec.strategy, rec.style, rec.difficulty), []).append(rec)

    cell_rows = []
    for key in sorted(cells, key=lambda k: (
        STRATEGY_KINDS.index(k[0]), STYLE_KINDS.index(k[1]), DIFFICULTIES.index(k[2])
    )):
        recs = cells[key]
        timed = [r for r in recs if r.error is None]
        lat_mean, lat_sd = _mean_sd([r.latency_s for r in timed])
        co2_mean, co2_sd = _mean_sd([r.co2_g for r in timed])
        cell_rows.append(
            {
                "strategy": key[0],
                "style": key[1],
                "difficulty": key[2],
                "n": len(recs),
                "n_correct": sum(r.correct for r in recs),
                "n_unanswered": sum(r.chosen_index is None for r in recs),
                "accuracy": sum(r.correct for r in recs) / len(recs),
                "n_timed": len(timed),
                "latency_mean_s": lat_mean,
                "latency_sd_s": lat_sd,
                "co2_mean_g": co2_mean,
                "co2_sd_g": co2_sd,
            }
        )

    buckets: dict[str, list[dict]] = {}
    for diff in DIFFICULTIES:
        timed = [r for r in records if r.difficulty == diff and r.error is None]
        if not timed:
            continue
        counts = [0] * len(BUCKET_LABELS)
        for r in timed:
            counts[bucket_index(r.latency_s)] += 1
        buckets[diff] = [
            {"label": label, "count": c, "pct": c / len(timed) * 100.0}
            for label, c in zip(BUCKET_LABELS, counts)
        ]

    anova_pooled = {
        style: _anova_cell(records, style, None)
        for style in STYLE_KINDS
        if any(r.style == style for r in records)
    }
    anova_per_difficulty: dict[str, dict] = {}
    for diff in DIFFICULTIES:
        styles = {
            style: _anova_cell(records, style, diff)
            for style in STYLE_KINDS
            if any(r.style == style and r.difficulty == diff for r in records)
        }
        if styles:
            anova_per_difficulty[diff] = styles

    return MetricsReport(
        cells=cell_rows,
        runtime_buckets=buckets,
        anova_pooled=anova_pooled,
        anova_per_difficulty=anova_per_difficulty,
        n_records=len(records),
    )


def _anova_cell(records: Sequence[RunRecord], style: str, difficulty: str | None) -> dict:
    """ANOVA of latency across strategies for one style; a reason dict
    when the comparison is not computable."""
    groups: list[tuple[str, list[float]]] = []
    for strategy in STRATEGY_KINDS:
        lat = [
            r.latency_s
            for r in records
            if r.style == style
            and r.strategy == strategy
            and r.error is None
            and (difficulty is None or r.difficulty == difficulty)
        ]
        if len(lat) >= 2:
            groups.append((strategy, lat))
    if len(groups) < 2:
        return {"reason": "needs at least 2 strategies with 2+ timed records"}
    try:
        result = one_way_anova([g for _, g in groups])
    except DegenerateInputError as exc:
        return {"reason": str(exc)}
    return {
        "strategies": [name for name, _ in groups],
        "f_statistic": result.f_statistic,
        "p_value": result.p_value,
        "df_between": result.df_between,
        "df_within": result.df_within,
        "group_means": list(result.group_means),
    }


def write_records_jsonl(path: str | Path, records: Iterable[RunRecord], meta: dict | None = None) -> None:
    """Write run records as jsonl with an optional leading meta record."""
    with Path(path).open("w", encoding="utf-8") as fh:
        if meta is not None:
            fh.write(json.dumps({"meta": meta}, sort_keys=True) + "\n")
        for r in records:
            rec = {
                "item_id": r.item_id,
                "strategy": r.strategy,
                "style": r.style,
                "difficulty": r.difficulty,
                "chosen_index": r.chosen_index,
                "correct": r.correct,
                "latency_s": r.latency_s,
                "co2_g": r.co2_g,
                "retrieved_keys": [f"{d}#{s}" for d, s in r.retrieved_keys],
                "extraction_rule": r.extraction_rule,
                "error": r.error,
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_records_jsonl(path: str | Path) -> tuple[list[RunRecord], dict]:
    """Read a records file written by :func:`write_records_jsonl`."""
    p = Path(path)
    if not p.exists():
        raise InputError(f"records file does not exist: {p}")
    records: list[RunRecord] = []
    meta: dict = {}
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
                keys = tuple(
                    (k.rsplit("#", 1)[0], int(k.rsplit("#", 1)[1]))
                    for k in obj["retrieved_keys"]
                )
                records.append(
                    RunRecord(
                        item_id=obj["item_id"],
                        strategy=obj["strategy"],
                        style=obj["style"],
                        difficulty=obj["difficulty"],
                        chosen_index=obj["chosen_index"],
                        correct=obj["correct"],
                        latency_s=obj["latency_s"],
                        co2_g=obj["co2_g"],
                        retrieved_keys=keys,
                        extraction_rule=obj.get("extraction_rule", "unanswered"),
                        error=obj.get("error"),
                    )
                )
            except (KeyError, TypeError, ValueError, IndexError) as exc:
                raise DatasetError(f"{p}:{lineno}: bad record: {exc}") from exc
    if not records:
        raise EmptyInputError(f"no records in {p}")
    return records, meta
