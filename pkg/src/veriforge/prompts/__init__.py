"""Byte-deterministic prompt rendering from plain-text templates.

Templates live in templates/ with {{name}} placeholders. Slot values are
embedded raw, without any quoting or escaping.
"""

from __future__ import annotations

import json
import re
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping, Sequence

from ..errors import InvalidInput

TEMPLATE_NAMES = (
    "dnd",
    "decomp",
    "ambiguity",
    "decontext",
    "factscore_verify",
    "dndscore_verify",
    "nli",
)

_PLACEHOLDER = re.compile(r"\{\{([a-z_]+)\}\}")


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    if name not in TEMPLATE_NAMES:
        raise InvalidInput(f"unknown template {name!r}")
    path = resources.files(__package__) / "templates" / f"{name}.txt"
    return path.read_text(encoding="utf-8")


def render(name: str, values: Mapping[str, str]) -> str:
    """Substitute all placeholders; a leftover marker is a programming error."""
    body = load_template(name)
    placeholders = set(_PLACEHOLDER.findall(body))
    missing = placeholders - set(values)
    if missing:
        raise InvalidInput(f"unbound placeholders in {name}: {sorted(missing)}")
    for key in placeholders:
        body = body.replace("{{%s}}" % key, values[key])
    return body


@lru_cache(maxsize=None)
def default_decomp_exemplars() -> tuple[tuple[str, tuple[str, ...]], ...]:
    """Fixed exemplar bank shipped with the package."""
    path = resources.files(__package__) / "templates" / "decomp_exemplars.json"
    records = json.loads(path.read_text(encoding="utf-8"))
    return tuple((r["sentence"], tuple(r["subclaims"])) for r in records)


def render_dnd(paragraph: str, sentence: str) -> str:
    """Few-shot joint decompose-and-decontextualize prompt for one sentence."""
    return render("dnd", {"paragraph": paragraph, "sentence": sentence})


def render_decomp(
    sentence: str, exemplars: Sequence[tuple[str, Sequence[str]]]
) -> str:
    """Few-shot decomposition prompt: exemplar sentence/bullet pairs, then the target."""
    if not exemplars:
        raise InvalidInput("at least one exemplar is required")
    blocks = []
    for ex_sentence, subclaims in exemplars:
        bullets = "\n".join(f"- {c}" for c in subclaims)
        blocks.append(f"Sentence: {ex_sentence}\nSubclaims:\n{bullets}")
    return render(
        "decomp", {"exemplar_blocks": "\n\n".join(blocks), "sentence": sentence}
    )


def render_ambiguity(sentence: str, paragraph: str) -> str:
    """Step 1 of two-step decontextualization: ask for an ambiguity dictionary."""
    return render("ambiguity", {"sentence": sentence, "paragraph": paragraph})


def render_decontext(sentence: str, paragraph: str, ambiguities: Mapping[str, str]) -> str:
    """Step 2: rewrite the sentence to stand alone given the found ambiguities."""
    rendered = json.dumps(dict(ambiguities), ensure_ascii=False)
    return render(
        "decontext",
        {"sentence": sentence, "paragraph": paragraph, "ambiguities": rendered},
    )


def render_factscore_verify(
    topic: str, passages: Sequence[tuple[str, str]], atom: str
) -> str:
    """Atomic True/False verification prompt with one Title/Text block per passage."""
    if not topic or not atom:
        raise InvalidInput("topic and atom must be non-empty")
    if not passages:
        raise InvalidInput("at least one evidence passage is required")
    blocks = "\n\n".join(f"Title: {title}\nText: {text}" for title, text in passages)
    return render(
        "factscore_verify",
        {"topic": topic, "evidence_blocks": blocks, "atom": atom},
    )


def render_dndscore_verify(
    topic: str, reference_doc: str, decontext_claim: str, atom: str
) -> str:
    """Contextualized verification prompt: subclaim judged with its decontextualized form."""
    if not (topic and reference_doc and decontext_claim and atom):
        raise InvalidInput("all inputs must be non-empty")
    return render(
        "dndscore_verify",
        {
            "topic": topic,
            "reference": reference_doc,
            "decontext_claim": decontext_claim,
            "atom": atom,
        },
    )


def render_nli(premise: str, hypothesis: str) -> str:
    """Yes/No entailment prompt."""
    if not premise or not hypothesis:
        raise InvalidInput("premise and hypothesis must be non-empty")
    return render("nli", {"premise": premise, "hypothesis": hypothesis})
