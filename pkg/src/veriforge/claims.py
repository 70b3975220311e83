"""Domain types for passages, sentences and claim sets, plus sentence segmentation."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import InvalidInput


class Strategy(str, Enum):
    """The five claim-production strategies reported in the score tables."""

    DECOMP_ONLY = "decomp_only"
    DECOMP_THEN_DECONTEXT = "decomp_then_decontext"
    DECONTEXT_THEN_DECOMP = "decontext_then_decomp"
    DND_SUBCLAIM = "dnd_subclaim"
    DND_DECONTEXT = "dnd_decontext"

    @property
    def label(self) -> str:
        return _STRATEGY_LABELS[self]

    @property
    def verifies_decontextualized(self) -> bool:
        """Whether this row's verified atom is the decontextualized text."""
        return self in (Strategy.DECOMP_THEN_DECONTEXT, Strategy.DND_DECONTEXT)


_STRATEGY_LABELS = {
    Strategy.DECOMP_ONLY: "Decomp Only",
    Strategy.DECOMP_THEN_DECONTEXT: "Decomp -> Decontext",
    Strategy.DECONTEXT_THEN_DECOMP: "Decontext -> Decomp",
    Strategy.DND_SUBCLAIM: "DnD Subclaim",
    Strategy.DND_DECONTEXT: "DnD Decontextualized",
}


@dataclass(frozen=True)
class Sentence:
    index: int
    text: str

    def __post_init__(self) -> None:
        if self.index < 0:
            raise InvalidInput("sentence index must be non-negative")
        if not self.text or self.text != self.text.strip():
            raise InvalidInput("sentence text must be non-empty and stripped")


@dataclass(frozen=True)
class Passage:
    """One model generation about one topic, segmented into sentences."""

    topic: str
    model_split: str
    text: str
    sentences: tuple[Sentence, ...]

    @property
    def ref(self) -> str:
        return f"{self.model_split}/{self.topic}"


@dataclass(frozen=True)
class ClaimItem:
    id: str
    subclaim: str
    decontextualized: Optional[str]
    source_sentence: int
    strategy: Strategy
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.subclaim:
            raise InvalidInput("subclaim must be non-empty")


@dataclass(frozen=True)
class ClaimSet:
    passage_ref: str
    strategy: Strategy
    items: tuple[ClaimItem, ...]
    context_sentences: Optional[dict[int, str]] = None
    skipped_sentences: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        for item in self.items:
            if item.strategy is not self.strategy:
                raise InvalidInput("all items must share the claim set's strategy")
        has_context = self.context_sentences is not None
        needs_context = self.strategy is Strategy.DECONTEXT_THEN_DECOMP
        if has_context != needs_context:
            raise InvalidInput(
                "context_sentences present iff strategy is decontext_then_decomp"
            )


# Trailing abbreviations whose period does not end a sentence.
_ABBREVIATIONS = {
    "dr", "mr", "mrs", "ms", "prof", "rev", "hon", "sr", "jr", "st",
    "gen", "col", "lt", "sgt", "capt", "sen", "rep", "gov",
    "vs", "etc", "inc", "ltd", "co", "corp", "no", "approx", "est",
}

_OPENERS = "\"'“‘("
_CLOSERS = "\"'”’)"


def _normalize_whitespace(text: str) -> str:
    return " ".join(text.split())


def _ends_with_abbreviation(text: str, period_pos: int) -> bool:
    """True when the period at period_pos terminates an abbreviation token."""
    m = re.search(r"[A-Za-z]+$", text[:period_pos])
    if m is None:
        return False
    word = m.group(0)
    if word.lower() in _ABBREVIATIONS:
        return True
    # Dotted acronyms like "U.S." (single letter preceded by another period).
    if len(word) == 1 and m.start() > 0 and text[m.start() - 1] == ".":
        return True
    return False


def segment_sentences(text: str) -> list[Sentence]:
    """Split text into ordered sentences on terminal punctuation.

    Deterministic rule-based splitter: a run of [.!?], optionally followed by
    closing quotes, ends a sentence when followed by whitespace and an
    uppercase letter, digit, or opening quote. Periods after known
    abbreviations and dotted acronyms do not split.
    """
    norm = _normalize_whitespace(text)
    if not norm:
        return []
    boundaries: list[int] = []
    i = 0
    n = len(norm)
    while i < n:
        ch = norm[i]
        if ch not in ".!?":
            i += 1
            continue
        j = i + 1
        while j < n and norm[j] in ".!?":
            j += 1
        while j < n and norm[j] in _CLOSERS:
            j += 1
        if j >= n:
            i = j
            continue
        follows_break = (
            norm[j] == " "
            and j + 1 < n
            and (norm[j + 1].isupper() or norm[j + 1].isdigit() or norm[j + 1] in _OPENERS)
        )
        if follows_break and not (ch == "." and _ends_with_abbreviation(norm, i)):
            boundaries.append(j)
            i = j + 1
        else:
            i = j
    pieces: list[str] = []
    start = 0
    for b in boundaries:
        pieces.append(norm[start:b].strip())
        start = b
    pieces.append(norm[start:].strip())
    return [Sentence(idx, piece) for idx, piece in enumerate(p for p in pieces if p)]


def make_passage(topic: str, model_split: str, text: str) -> Passage:
    """Build a Passage with segmented sentences."""
    if not topic:
        raise InvalidInput("topic must be non-empty")
    if not text or not text.strip():
        raise InvalidInput("text must be non-empty")
    sentences = tuple(segment_sentences(text))
    return Passage(topic=topic, model_split=model_split, text=text, sentences=sentences)
