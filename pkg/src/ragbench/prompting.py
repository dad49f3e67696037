"""Prompt assembly for the two prompting styles.

Templates are byte-exact constants; options render as fixed "A)".."D)"
lines so answers can be extracted unambiguously. An evidence-free
bundle renders the sentinel "Context: (none)". The step-by-step style
ends with an explicit final-answer directive, which makes extraction
from free-form reasoning reliable.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError, InputError
from .retrieval import EvidenceBundle

STYLE_KINDS = ("direct_qa", "cot")

OPTION_LETTERS = "ABCD"

DIRECT_QA_TEMPLATE = (
    "Based on the following context, answer the question.\n"
    "Context: {context}\n"
    "Question: {question}\n"
    "A) {opt0}\n"
    "B) {opt1}\n"
    "C) {opt2}\n"
    "D) {opt3}\n"
    "Answer:"
)

COT_TEMPLATE = (
    "Based on the following context, think step-by-step to determine the answer.\n"
    "Context: {context}\n"
    "Question: {question}\n"
    "A) {opt0}\n"
    "B) {opt1}\n"
    "C) {opt2}\n"
    "D) {opt3}\n"
    "End your response with 'Final answer: <letter>'."
)

EMPTY_CONTEXT_SENTINEL = "(none)"


@dataclass(frozen=True)
class AssembledPrompt:
    text: str
    style: str
    char_count: int


def build_prompt(
    style: str,
    bundle: EvidenceBundle | None,
    question: str,
    options: list[str],
) -> AssembledPrompt:
    """Render one prompt. Pure: identical inputs give identical bytes."""
    if style not in STYLE_KINDS:
        raise ConfigError(f"unknown prompt style: {style!r}")
    if len(options) != 4:
        raise InputError(f"expected exactly 4 options, got {len(options)}")
    context = bundle.context_text if bundle is not None and bundle.context_text else EMPTY_CONTEXT_SENTINEL
    template = DIRECT_QA_TEMPLATE if style == "direct_qa" else COT_TEMPLATE
    text = template.format(
        context=context,
        question=question,
        opt0=options[0],
        opt1=options[1],
        opt2=options[2],
        opt3=options[3],
    )
    return AssembledPrompt(text=text, style=style, char_count=len(text))
