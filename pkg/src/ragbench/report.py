"""Report container and the json/markdown renderers.

The JSON schema is stable and documented in the README: fixed keys,
sorted on write, no timestamps, so a seeded run serializes to identical
bytes every time. Markdown renders one table per metric family
(accuracy, latency, CO2, runtime distribution, ANOVA) with one row per
(strategy, style) cell and difficulty columns, plus the effective run
configuration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

SCHEMA = "ragbench-report@1"

_STRATEGY_DISPLAY = {
    "no_rag": "No RAG",
    "vanilla_rag": "RAG",
    "contextual_rag": "Co-RAG",
}
_STYLE_DISPLAY = {"direct_qa": "Q&A", "cot": "CoT"}


@dataclass
class MetricsReport:
    """Everything summarize() computed, plus run provenance."""

    cells: list[dict]
    runtime_buckets: dict[str, list[dict]]
    anova_pooled: dict[str, dict]
    anova_per_difficulty: dict[str, dict]
    n_records: int
    config: dict = field(default_factory=dict)
    tool_version: str = ""

    def to_json_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "tool_version": self.tool_version,
            "config": self.config,
            "n_records": self.n_records,
            "cells": self.cells,
            "runtime_buckets": self.runtime_buckets,
            "anova": {
                "pooled": self.anova_pooled,
                "per_difficulty": self.anova_per_difficulty,
            },
        }


def render_json(report: MetricsReport) -> str:
    return json.dumps(report.to_json_dict(), sort_keys=True, indent=2) + "\n"


def emit_report(report: MetricsReport, format: str, path: str | Path) -> None:
    """Write the report as json or markdown."""
    if format == "json":
        text = render_json(report)
    elif format == "markdown":
        text = render_markdown(report)
    else:
        raise ConfigError(f"unknown report format: {format!r}")
    Path(path).write_text(text, encoding="utf-8")


def _fmt(value, digits: int = 4) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


def _cell_lookup(cells: list[dict]) -> dict[tuple[str, str, str], dict]:
    return {(c["strategy"], c["style"], c["difficulty"]): c for c in cells}


def _strategy_style_rows(cells: list[dict]) -> list[tuple[str, str]]:
    seen: list[tuple[str, str]] = []
    for c in cells:
        key = (c["strategy"], c["style"])
        if key not in seen:
            seen.append(key)
    return seen


def _difficulties(cells: list[dict]) -> list[str]:
    out: list[str] = []
    for c in cells:
        if c["difficulty"] not in out:
            out.append(c["difficulty"])
    return out


def render_markdown(report: MetricsReport) -> str:
    lines: list[str] = ["# Benchmark report", ""]
    lookup = _cell_lookup(report.cells)
    rows = _strategy_style_rows(report.cells)
    diffs = _difficulties(report.cells)

    def metric_table(title: str, fmt_cell) -> None:
        lines.append(f"## {title}")
        lines.append("")
        header = "| Retrieval | Prompt | " + " | ".join(d.capitalize() for d in diffs) + " |"
        lines.append(header)
        lines.append("|" + "---|" * (2 + len(diffs)))
        for strategy, style in rows:
            cols = []
            for d in diffs:
                cell = lookup.get((strategy, style, d))
                cols.append(fmt_cell(cell) if cell else "-")
            lines.append(
                f"| {_STRATEGY_DISPLAY.get(strategy, strategy)} "
                f"| {_STYLE_DISPLAY.get(style, style)} | " + " | ".join(cols) + " |"
            )
        lines.append("")

    metric_table(
        "Accuracy",
        lambda c: f"{_fmt(c['accuracy'])} (n={c['n']}, unanswered={c['n_unanswered']})",
    )
    metric_table(
        "Latency (seconds)",
        lambda c: f"{_fmt(c['latency_mean_s'])} ± {_fmt(c['latency_sd_s'])}",
    )
    metric_table(
        "CO2 per question (grams)",
        lambda c: f"{_fmt(c['co2_mean_g'], 6)} ± {_fmt(c['co2_sd_g'], 6)}",
    )

    if report.runtime_buckets:
        bucket_diffs = list(report.runtime_buckets)
        lines.append("## Runtime distribution (percent of questions)")
        lines.append("")
        lines.append("| Runtime threshold | " + " | ".join(d.capitalize() for d in bucket_diffs) + " |")
        lines.append("|" + "---|" * (1 + len(bucket_diffs)))
        n_buckets = len(next(iter(report.runtime_buckets.values())))
        for i in range(n_buckets):
            label = report.runtime_buckets[bucket_diffs[0]][i]["label"]
            cols = [f"{report.runtime_buckets[d][i]['pct']:.2f}%" for d in bucket_diffs]
            lines.append(f"| {label} | " + " | ".join(cols) + " |")
        lines.append("")

    lines.append("## ANOVA: latency across retrieval strategies")
    lines.append("")
    lines.append("| Scope | Prompt | F | p | df | Group means |")
    lines.append("|---|---|---|---|---|---|")
    for style, cell in report.anova_pooled.items():
        lines.append(_anova_row("pooled", style, cell))
    for diff, styles in report.anova_per_difficulty.items():
        for style, cell in styles.items():
            lines.append(_anova_row(diff, style, cell))
    lines.append("")

    lines.append("## Configuration")
    lines.append("")
    if report.tool_version:
        lines.append(f"- tool_version: {report.tool_version}")
    for key in sorted(report.config):
        lines.append(f"- {key}: {json.dumps(report.config[key], sort_keys=True)}")
    lines.append(f"- n_records: {report.n_records}")
    lines.append("")
    return "\n".join(lines)


def _anova_row(scope: str, style: str, cell: dict) -> str:
    style_disp = _STYLE_DISPLAY.get(style, style)
    if "reason" in cell:
        return f"| {scope} | {style_disp} | - | - | - | {cell['reason']} |"
    means = ", ".join(
        f"{name}={mean:.4f}" for name, mean in zip(cell["strategies"], cell["group_means"])
    )
    return (
        f"| {scope} | {style_disp} | {cell['f_statistic']:.4f} | {cell['p_value']:.3g} "
        f"| ({cell['df_between']}, {cell['df_within']}) | {means} |"
    )


def load_report_json(path: str | Path) -> MetricsReport:
    """Parse a report written by :func:`emit_report` back into the container."""
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    anova = obj.get("anova", {})
    return MetricsReport(
        cells=obj["cells"],
        runtime_buckets=obj["runtime_buckets"],
        anova_pooled=anova.get("pooled", {}),
        anova_per_difficulty=anova.get("per_difficulty", {}),
        n_records=obj["n_records"],
        config=obj.get("config", {}),
        tool_version=obj.get("tool_version", ""),
    )
