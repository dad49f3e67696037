"""Layered CLI configuration.

Precedence, lowest to highest: built-in defaults, config file,
environment (ENGINE_LLM_URL / ENGINE_EMBED_URL), command-line flags.
The resolved configuration is echoed into every run artifact so runs
are self-describing.

Config file format: one ``key = value`` per line, ``#`` comments.
Keys match the flat names below (for example ``k = 8``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .bench import EmissionConfig
from .corpus import ChunkingConfig
from .embeddings import EmbedderConfig
from .errors import ConfigError
from .llm_gateway import LlmConfig
from .retrieval import RetrievalStrategy

ENV_LLM_URL = "ENGINE_LLM_URL"
ENV_EMBED_URL = "ENGINE_EMBED_URL"

STRATEGY_ALIASES = {
    "none": "no_rag",
    "rag": "vanilla_rag",
    "corag": "contextual_rag",
    "no_rag": "no_rag",
    "vanilla_rag": "vanilla_rag",
    "contextual_rag": "contextual_rag",
}
STYLE_ALIASES = {"qa": "direct_qa", "cot": "cot", "direct_qa": "direct_qa"}

_BOOL_TRUE = ("1", "true", "yes", "on")
_BOOL_FALSE = ("0", "false", "no", "off")

# flat key -> (type tag, default)
DEFAULTS: dict[str, tuple[str, object]] = {
    "chunk_size": ("int", 1536),
    "chunk_overlap": ("int", 256),
    "embed_kind": ("str", "deterministic_test"),
    "embed_url": ("str", "http://localhost:11434"),
    "embed_model": ("str", "nomic-embed-text"),
    "embed_dims": ("int", 256),
    "embed_timeout_s": ("float", 30.0),
    "embed_retries": ("int", 2),
    "embed_seed": ("int", 0),
    "llm_kind": ("str", "http"),
    "llm_url": ("str", "http://localhost:11434"),
    "llm_model": ("str", "llama3.2"),
    "llm_timeout_s": ("float", 120.0),
    "llm_retries": ("int", 2),
    "strategy": ("str", "corag"),
    "prompt": ("str", "qa"),
    "k": ("int", 5),
    "max_context_chars": ("int", 12_000),
    "include_bare_question": ("bool", False),
    "power_w": ("float", 360.0),
    "pue": ("float", 1.0),
    "carbon_intensity": ("float", 475.0),
    "seed": ("int", 42),
    "per_difficulty": ("int", 0),  # 0 means run the whole dataset
}


@dataclass
class CliConfig:
    """Resolved, typed configuration for one CLI invocation."""

    chunking: ChunkingConfig
    embedder: EmbedderConfig
    llm: LlmConfig
    strategy: RetrievalStrategy
    emission: EmissionConfig
    style: str
    seed: int
    per_difficulty: int
    raw: dict

    def to_dict(self) -> dict:
        """Flat echo of the effective configuration for run artifacts."""
        return dict(sorted(self.raw.items()))


def _coerce(key: str, raw: str):
    tag, _ = DEFAULTS[key]
    if tag == "int":
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"config key {key!r}: expected integer, got {raw!r}") from exc
    if tag == "float":
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"config key {key!r}: expected number, got {raw!r}") from exc
    if tag == "bool":
        low = raw.strip().lower()
        if low in _BOOL_TRUE:
            return True
        if low in _BOOL_FALSE:
            return False
        raise ConfigError(f"config key {key!r}: expected boolean, got {raw!r}")
    return raw


def load_config_file(path: str | Path) -> dict:
    """Parse the key = value config file into typed values."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file does not exist: {p}")
    values: dict = {}
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{p}:{lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in DEFAULTS:
            raise ConfigError(f"{p}:{lineno}: unknown config key {key!r}")
        values[key] = _coerce(key, raw.strip())
    return values


def resolve_config(
    config_file: str | Path | None = None,
    env: Mapping[str, str] | None = None,
    overrides: Mapping[str, object] | None = None,
) -> CliConfig:
    """Merge defaults < config file < environment < overrides."""
    values = {k: default for k, (_, default) in DEFAULTS.items()}
    if config_file is not None:
        values.update(load_config_file(config_file))
    env = env or {}
    if env.get(ENV_LLM_URL):
        values["llm_url"] = env[ENV_LLM_URL]
    if env.get(ENV_EMBED_URL):
        values["embed_url"] = env[ENV_EMBED_URL]
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = val

    strategy_kind = STRATEGY_ALIASES.get(str(values["strategy"]).lower())
    if strategy_kind is None:
        raise ConfigError(f"unknown strategy {values['strategy']!r} (use none|rag|corag)")
    style = STYLE_ALIASES.get(str(values["prompt"]).lower())
    if style is None:
        raise ConfigError(f"unknown prompt style {values['prompt']!r} (use qa|cot)")

    chunking = ChunkingConfig(
        max_chunk_chars=int(values["chunk_size"]),
        overlap_chars=int(values["chunk_overlap"]),
    )
    chunking.validate()
    embedder = EmbedderConfig(
        kind=str(values["embed_kind"]),
        endpoint_url=str(values["embed_url"]),
        model_name=str(values["embed_model"]),
        dims=int(values["embed_dims"]),
        timeout_s=float(values["embed_timeout_s"]),
        max_retries=int(values["embed_retries"]),
        seed=int(values["embed_seed"]),
    )
    embedder.validate()
    llm = LlmConfig(
        kind=str(values["llm_kind"]),
        endpoint_url=str(values["llm_url"]),
        model_name=str(values["llm_model"]),
        timeout_s=float(values["llm_timeout_s"]),
        max_retries=int(values["llm_retries"]),
        seed=int(values["seed"]),
    )
    strategy = RetrievalStrategy(
        kind=strategy_kind,
        k_per_query=int(values["k"]),
        max_context_chars=int(values["max_context_chars"]),
        include_bare_question=bool(values["include_bare_question"]),
    )
    strategy.validate()
    if strategy.max_context_chars < chunking.max_chunk_chars:
        raise ConfigError(
            f"max_context_chars ({strategy.max_context_chars}) must be >= "
            f"chunk_size ({chunking.max_chunk_chars})"
        )
    emission = EmissionConfig(
        avg_power_w=float(values["power_w"]),
        pue=float(values["pue"]),
        carbon_intensity_g_per_kwh=float(values["carbon_intensity"]),
    )
    emission.validate()

    raw = {k: values[k] for k in DEFAULTS}
    return CliConfig(
        chunking=chunking,
        embedder=embedder,
        llm=llm,
        strategy=strategy,
        emission=emission,
        style=style,
        seed=int(values["seed"]),
        per_difficulty=int(values["per_difficulty"]),
        raw=json.loads(json.dumps(raw)),  # plain JSON types only
    )
