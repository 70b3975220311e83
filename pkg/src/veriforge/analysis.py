"""Judgment-change statistics between aligned verification runs, and the
pronoun-replacement detector used to explain false-to-true flips."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .errors import LengthMismatch
from .parsing import Verdict
from .scoring import Judgment

PRONOUNS = frozenset(
    {
        "she", "her", "hers", "herself",
        "he", "him", "his", "himself",
        "they", "them", "theirs", "themself",
    }
)

_WORD_RE = re.compile(r"[a-z0-9]+")


def _word_tokens(text: str) -> set[str]:
    return set(_WORD_RE.findall(text.lower()))


def pronoun_replaced(
    subclaim: str, decontext: str, require_all: bool = False
) -> bool:
    """Whether decontextualization replaced a pronoun from the subclaim.

    True when some listed pronoun occurs as a word token in the subclaim but
    not in the decontextualized form. require_all demands that every pronoun
    of the subclaim be gone.
    """
    sub_pronouns = _word_tokens(subclaim) & PRONOUNS
    if not sub_pronouns:
        return False
    dec_tokens = _word_tokens(decontext)
    missing = sub_pronouns - dec_tokens
    if require_all:
        return missing == sub_pronouns
    return bool(missing)


@dataclass(frozen=True)
class ChangeStats:
    """Percentages are exact rationals over the documented denominators:
    change rates over n_aligned, pronoun rates over each changed-direction
    subset (None when that subset is empty)."""

    n_aligned: int
    pct_changed: Fraction
    pct_false_to_true: Fraction
    pct_true_to_false: Fraction
    pct_f2t_with_pronoun_replacement: Optional[Fraction]
    pct_t2f_with_pronoun_replacement: Optional[Fraction]


def _is_supported(judgment: Judgment) -> bool:
    # Unparseable scores as not supported, consistently with aggregation.
    return judgment.verdict.verdict is Verdict.SUPPORTED


def change_stats(
    a: Sequence[Judgment],
    b: Sequence[Judgment],
    pairs: Sequence[tuple[str, str]],
    require_all_pronouns: bool = False,
) -> ChangeStats:
    """Judgment flips from run a to run b over claim-aligned lists."""
    if not (len(a) == len(b) == len(pairs)):
        raise LengthMismatch(
            f"lengths differ: {len(a)} judgments vs {len(b)} vs {len(pairs)} pairs"
        )
    n = len(a)
    if n == 0:
        zero = Fraction(0)
        return ChangeStats(0, zero, zero, zero, None, None)
    f2t = t2f = f2t_pronoun = t2f_pronoun = 0
    for ja, jb, (subclaim, decontext) in zip(a, b, pairs):
        va, vb = _is_supported(ja), _is_supported(jb)
        if va == vb:
            continue
        replaced = pronoun_replaced(subclaim, decontext, require_all=require_all_pronouns)
        if not va and vb:
            f2t += 1
            f2t_pronoun += replaced
        else:
            t2f += 1
            t2f_pronoun += replaced
    pct = lambda num, den: Fraction(num * 100, den)  # noqa: E731
    return ChangeStats(
        n_aligned=n,
        pct_changed=pct(f2t + t2f, n),
        pct_false_to_true=pct(f2t, n),
        pct_true_to_false=pct(t2f, n),
        pct_f2t_with_pronoun_replacement=pct(f2t_pronoun, f2t) if f2t else None,
        pct_t2f_with_pronoun_replacement=pct(t2f_pronoun, t2f) if t2f else None,
    )


def disagreement_examples(
    a: Sequence[Judgment],
    b: Sequence[Judgment],
    pairs: Sequence[tuple[str, str]],
    limit: int,
) -> list[tuple[str, str, Verdict, Verdict]]:
    """First `limit` disagreeing (subclaim, decontext, verdict_a, verdict_b) rows."""
    if not (len(a) == len(b) == len(pairs)):
        raise LengthMismatch("aligned inputs required")
    out: list[tuple[str, str, Verdict, Verdict]] = []
    for ja, jb, (subclaim, decontext) in zip(a, b, pairs):
        if len(out) >= max(limit, 0):
            break
        if _is_supported(ja) != _is_supported(jb):
            out.append((subclaim, decontext, ja.verdict.verdict, jb.verdict.verdict))
    return out
