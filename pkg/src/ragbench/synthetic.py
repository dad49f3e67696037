"""Deterministic synthetic corpus for end-to-end strategy comparisons.

Each question gets four single-chunk documents, one per answer option.
Every option is a unique keyword token that appears only in its own
document, never in the question, so a choice-conditioned query can find
the matching document while the bare question cannot. Exactly two of
the four documents additionally carry the question's group token (the
gold document is in that pair with probability 1/2), which gives
question-only retrieval a real but partial signal: with an oracle
reader, choice-conditioned retrieval resolves essentially every
question, question-only retrieval about five in eight, and no retrieval
one in four.

Everything derives from a single seed through splitmix64, so the same
seed always yields byte-identical documents, items, and answer key.
"""

from __future__ import annotations

from itertools import combinations

from .bench import DIFFICULTIES, McqItem
from .corpus import Document
from .hashing import SplitMix64
from .prompting import OPTION_LETTERS

DEFAULT_SEED = 20240501

_PAIRS = list(combinations(range(4), 2))  # the 6 ways to mark 2 of 4 docs


def build_synthetic_benchmark(
    n_questions: int = 200, seed: int = DEFAULT_SEED
) -> tuple[list[Document], list[McqItem], dict[str, dict[str, str]]]:
    """Build (documents, items, answer_key) for ``n_questions`` questions.

    The answer key maps question text to the gold chunk's provenance
    header and the gold letter, as consumed by the mock_oracle LLM.
    """
    rng = SplitMix64(seed)
    documents: list[Document] = []
    items: list[McqItem] = []
    answer_key: dict[str, dict[str, str]] = {}
    for q in range(n_questions):
        keywords = [f"zq{q}k{j}" for j in range(4)]
        gold = rng.below(4)
        marked = _PAIRS[rng.below(len(_PAIRS))]
        question = (
            f"Which tag code is registered for record group grp{q} in the catalog?"
        )
        doc_ids = []
        for j, kw in enumerate(keywords):
            doc_id = f"syn{q:04d}{OPTION_LETTERS[j].lower()}"
            doc_ids.append(doc_id)
            text = (
                f"Catalog entry {kw}. The tag {kw} denotes a reserved code. "
                f"Identifier {kw} appears in ledger section {q % 13}."
            )
            if j in marked:
                text += f" Filed under record group grp{q}."
            documents.append(Document(doc_id=doc_id, title=doc_id, text=text))
        items.append(
            McqItem(
                id=f"q{q:04d}",
                question=question,
                options=(keywords[0], keywords[1], keywords[2], keywords[3]),
                correct_index=gold,
                difficulty=DIFFICULTIES[q % 3],
            )
        )
        answer_key[question] = {
            "header": f"[{doc_ids[gold]}#0]",
            "letter": OPTION_LETTERS[gold],
        }
    return documents, items, answer_key
