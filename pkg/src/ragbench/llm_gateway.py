"""Completion gateway: send a prompt, time it, extract the chosen option.

Three backends share one config. ``http`` posts to a generate-style
endpoint (non-streaming, so latency is a single interval measured
around the request only). ``mock_uniform`` answers with a letter that
is a pure function of (seed, prompt). ``mock_oracle`` answers with the
gold letter whenever the gold chunk's provenance header appears in the
prompt, and falls back to the uniform letter otherwise; it needs an
answer key mapping question text to the gold header and letter.

Mock latencies are simulated deterministically from (seed, prompt) so
seeded benchmark runs are byte-reproducible; only the http kind reports
measured wall-clock time.
"""

from __future__ import annotations

import logging
import re
import time
from dataclasses import dataclass, field
from typing import Mapping

import requests

from .errors import (
    ConfigError,
    ContractViolationError,
    EmptyInputError,
    InputError,
    TransportError,
)
from .hashing import fnv1a64, mix64
from .prompting import OPTION_LETTERS, AssembledPrompt

logger = logging.getLogger(__name__)

LLM_KINDS = ("http", "mock_oracle", "mock_uniform")

UNANSWERED = None  # sentinel choice_index for records and reports

_FINAL_ANSWER_RE = re.compile(r"final answer\s*:\s*([abcd])\b", re.IGNORECASE)
_LEADING_LETTER_RE = re.compile(r"^([ABCD])(?:$|[).:])")
_QUESTION_IN_PROMPT_RE = re.compile(r"\nQuestion: (.*?)\nA\) ", re.DOTALL)

# decorrelate the mock letter stream from the mock latency stream
_LATENCY_STREAM_SALT = 0x5151AC5D11A7E001


@dataclass(frozen=True)
class LlmConfig:
    """Completion backend selection and knobs.

    ``answer_key`` (mock_oracle only) maps question text to
    ``{"header": "[doc#seq]", "letter": "A".."D"}``.
    """

    kind: str = "http"
    endpoint_url: str = "http://localhost:11434"
    model_name: str = "llama3.2"
    timeout_s: float = 120.0
    max_retries: int = 2
    seed: int = 0
    answer_key: Mapping[str, Mapping[str, str]] | None = field(default=None, hash=False)

    def validate(self) -> None:
        if self.kind not in LLM_KINDS:
            raise ConfigError(f"unknown llm kind: {self.kind!r}")
        if self.timeout_s <= 0:
            raise ConfigError("timeout_s must be positive")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.kind == "mock_oracle" and self.answer_key is None:
            raise ConfigError("mock_oracle needs an answer_key")


@dataclass(frozen=True)
class LlmResponse:
    text: str
    latency_s: float  # http: wall clock around the request only; mocks: simulated
    prompt_chars: int
    completion_chars: int


@dataclass(frozen=True)
class ExtractedAnswer:
    """Outcome of answer extraction; choice_index is None iff unanswered."""

    choice_index: int | None
    extraction_rule: str  # final_answer_line | leading_letter | option_text_match | unanswered

    @property
    def is_unanswered(self) -> bool:
        return self.choice_index is None


def complete(prompt: AssembledPrompt | str, cfg: LlmConfig) -> LlmResponse:
    """Run one completion.

    Raises:
        TransportError: http transport failed after all retries.
        ContractViolationError: non-200 or malformed service reply.
    """
    cfg.validate()
    text = prompt.text if isinstance(prompt, AssembledPrompt) else prompt
    if not text:
        raise EmptyInputError("empty prompt")
    if cfg.kind == "http":
        return _complete_http(text, cfg)
    if cfg.kind == "mock_uniform":
        reply = _uniform_letter(text, cfg.seed)
    else:
        reply = _oracle_reply(text, cfg)
    return LlmResponse(
        text=reply,
        latency_s=_simulated_latency(text, cfg.seed),
        prompt_chars=len(text),
        completion_chars=len(reply),
    )


def _complete_http(prompt_text: str, cfg: LlmConfig) -> LlmResponse:
    url = cfg.endpoint_url.rstrip("/") + "/api/generate"
    payload = {"model": cfg.model_name, "prompt": prompt_text, "stream": False}
    attempts = cfg.max_retries + 1
    last_exc: Exception | None = None
    for attempt in range(1, attempts + 1):
        start = time.perf_counter()
        try:
            resp = requests.post(url, json=payload, timeout=cfg.timeout_s)
            latency = time.perf_counter() - start
            break
        except requests.RequestException as exc:
            last_exc = exc
            logger.warning("completion attempt %d/%d failed: %s", attempt, attempts, exc)
            if attempt < attempts:
                time.sleep(min(0.2 * attempt, 2.0))
    else:
        raise TransportError(f"completion request to {url} failed: {last_exc}", attempts)

    if resp.status_code != 200:
        raise ContractViolationError(f"completion service returned HTTP {resp.status_code}")
    try:
        body = resp.json()
    except ValueError as exc:
        raise ContractViolationError(f"completion service returned non-JSON body: {exc}") from exc
    reply = body.get("response") if isinstance(body, dict) else None
    if not isinstance(reply, str):
        raise ContractViolationError("completion reply missing string 'response' field")
    return LlmResponse(
        text=reply,
        latency_s=latency,
        prompt_chars=len(prompt_text),
        completion_chars=len(reply),
    )


def _uniform_letter(prompt_text: str, seed: int) -> str:
    h = mix64(fnv1a64(prompt_text.encode("utf-8")), seed)
    return OPTION_LETTERS[h % 4]


def _simulated_latency(prompt_text: str, seed: int) -> float:
    h = mix64(fnv1a64(prompt_text.encode("utf-8")), seed ^ _LATENCY_STREAM_SALT)
    return 0.05 + (h % 10_000) / 10_000 * 0.35


def _oracle_reply(prompt_text: str, cfg: LlmConfig) -> str:
    m = _QUESTION_IN_PROMPT_RE.search(prompt_text)
    entry = None
    if m is not None and cfg.answer_key is not None:
        entry = cfg.answer_key.get(m.group(1))
    if entry is not None and entry.get("header") and entry["header"] in prompt_text:
        return f"Final answer: {entry['letter']}"
    return _uniform_letter(prompt_text, cfg.seed)


def extract_answer(response_text: str, options: list[str]) -> ExtractedAnswer:
    """Map free-form model output to a choice. Total: never raises on any
    text value; returns the unanswered sentinel when nothing matches.

    Rules, in strict precedence order:
      1. last "Final answer: X" occurrence, X in A-D, case-insensitive;
      2. a standalone letter A-D opening the first non-empty line,
         optionally followed by ")", "." or ":";
      3. exactly one option's text occurring (case-insensitive) in the
         last non-empty line.
    """
    if len(options) != 4:
        raise InputError(f"expected exactly 4 options, got {len(options)}")
    text = response_text or ""

    matches = _FINAL_ANSWER_RE.findall(text)
    if matches:
        return ExtractedAnswer(
            choice_index=OPTION_LETTERS.index(matches[-1].upper()),
            extraction_rule="final_answer_line",
        )

    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if lines:
        m = _LEADING_LETTER_RE.match(lines[0])
        if m:
            return ExtractedAnswer(
                choice_index=OPTION_LETTERS.index(m.group(1)),
                extraction_rule="leading_letter",
            )
        last = lines[-1].lower()
        hit_indices = [i for i, opt in enumerate(options) if opt.lower() in last]
        if len(hit_indices) == 1:
            return ExtractedAnswer(
                choice_index=hit_indices[0],
                extraction_rule="option_text_match",
            )

    return ExtractedAnswer(choice_index=UNANSWERED, extraction_rule="unanswered")
