"""Parsers turning free-form model text into structured claims and verdicts.

This is the tolerance layer: model output drifts, so every parser here is
lenient where the contract allows and records what it had to drop.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import ParseError

SUBCLAIMS_HEADER = "##SUBCLAIMS##"
EXPLANATION_HEADER = "##EXPLANATION##"
PAIRS_HEADER = "##CONTEXT-SUBCLAIM PAIRS##"


class ParseStatus(str, Enum):
    COMPLETE = "complete"
    PARTIAL = "partial"


class Verdict(str, Enum):
    SUPPORTED = "supported"
    NOT_SUPPORTED = "not_supported"
    UNPARSEABLE = "unparseable"


@dataclass(frozen=True)
class VerdictResult:
    verdict: Verdict
    raw: str


@dataclass(frozen=True)
class DnDOutput:
    subclaims: tuple[str, ...]
    explanation: str
    pairs: tuple[tuple[str, str], ...]
    status: ParseStatus

    def aligned_pairs(self) -> tuple[tuple[str, str, bool], ...]:
        """Pair every subclaim with a decontextualized form.

        Alignment is by whitespace-normalized subclaim text. A subclaim whose
        pair the model dropped falls back to itself, flagged (third element
        True). Pairs without a matching subclaim are appended as-is.
        """
        by_norm: dict[str, str] = {}
        for sub, dec in self.pairs:
            by_norm.setdefault(_norm_ws(sub), dec)
        aligned: list[tuple[str, str, bool]] = []
        used: set[str] = set()
        for sub in self.subclaims:
            key = _norm_ws(sub)
            if key in by_norm:
                aligned.append((sub, by_norm[key], False))
                used.add(key)
            else:
                aligned.append((sub, sub, True))
        for sub, dec in self.pairs:
            if _norm_ws(sub) not in used and not any(
                _norm_ws(s) == _norm_ws(sub) for s in self.subclaims
            ):
                aligned.append((sub, dec, False))
        return tuple(aligned)


def _norm_ws(text: str) -> str:
    return " ".join(text.split())


def parse_bullets(text: str) -> list[str]:
    """Extract "- "-prefixed claims; a non-bullet line continues the previous bullet."""
    claims: list[str] = []
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("- "):
            claims.append(stripped[2:].strip())
        elif stripped == "-":
            claims.append("")
        elif claims:
            claims[-1] = f"{claims[-1]} {stripped}"
    return [c for c in claims if c]


def _find_records(block: str) -> list[str]:
    """Split the pairs block into top-level {...} record texts by brace matching."""
    records: list[str] = []
    depth = 0
    start = -1
    for i, ch in enumerate(block):
        if ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}" and depth > 0:
            depth -= 1
            if depth == 0:
                records.append(block[start : i + 1])
    return records


_SUBCLAIM_RE = re.compile(
    r'"subclaim"\s*:\s*"(.*?)"\s*,\s*"decontextualized"', re.DOTALL
)
_DECONTEXT_RE = re.compile(r'"decontextualized"\s*:\s*"(.*)"', re.DOTALL)


def _parse_pair_record(record: str) -> tuple[str, str] | None:
    sub_m = _SUBCLAIM_RE.search(record)
    dec_m = _DECONTEXT_RE.search(record)
    if sub_m is None or dec_m is None:
        return None
    return _norm_ws(sub_m.group(1)), _norm_ws(dec_m.group(1))


def parse_dnd(text: str) -> DnDOutput:
    """Parse a joint decompose-and-decontextualize response.

    Splits on the three section headers. The subclaims header is optional
    (responses to a prompt ending in it start directly with bullets).
    Tolerates trailing commas and a missing explanation. Raises ParseError
    when the pairs section is absent or yields zero records.
    """
    pairs_idx = text.find(PAIRS_HEADER)
    if pairs_idx < 0:
        raise ParseError("pairs section is missing")
    head = text[:pairs_idx]
    pairs_block = text[pairs_idx + len(PAIRS_HEADER) :]

    expl_idx = head.find(EXPLANATION_HEADER)
    if expl_idx >= 0:
        bullets_region = head[:expl_idx]
        explanation = _norm_ws(
            head[expl_idx + len(EXPLANATION_HEADER) :].lstrip(": \n")
        )
    else:
        bullets_region = head
        explanation = ""
    sub_idx = bullets_region.find(SUBCLAIMS_HEADER)
    if sub_idx >= 0:
        bullets_region = bullets_region[sub_idx + len(SUBCLAIMS_HEADER) :].lstrip(": \n")
    subclaims = tuple(parse_bullets(bullets_region))
    if not subclaims:
        raise ParseError("no subclaims found")

    records = _find_records(pairs_block)
    pairs: list[tuple[str, str]] = []
    partial = False
    for record in records:
        parsed = _parse_pair_record(record)
        if parsed is None:
            partial = True
            continue
        pairs.append(parsed)
    if not pairs:
        raise ParseError("pairs section yields zero records")

    if len(pairs) != len(subclaims):
        partial = True
    else:
        normalized = {_norm_ws(s) for s in subclaims}
        if any(sub not in normalized for sub, _ in pairs):
            partial = True
    status = ParseStatus.PARTIAL if partial else ParseStatus.COMPLETE
    return DnDOutput(
        subclaims=subclaims,
        explanation=explanation,
        pairs=tuple(pairs),
        status=status,
    )


_SUPPORTED_PREFIXES = ("true", "yes", "supported")
_NOT_SUPPORTED_PREFIXES = ("false", "no", "not supported")


def parse_verdict(text: str) -> VerdictResult:
    """Classify a True/False answer from the first 16 non-whitespace characters.

    Never raises: anything unrecognized is Unparseable with the raw text kept
    for audit.
    """
    head = "".join(text.split()).lower()[:16]
    lead = " ".join(text.split()).lower()
    verdict = Verdict.UNPARSEABLE
    # "not supported" and "no" must win over prefix collisions with "supported".
    for prefix in _NOT_SUPPORTED_PREFIXES:
        if lead.startswith(prefix) or head.startswith(prefix.replace(" ", "")):
            verdict = Verdict.NOT_SUPPORTED
            break
    else:
        for prefix in _SUPPORTED_PREFIXES:
            if lead.startswith(prefix):
                verdict = Verdict.SUPPORTED
                break
    return VerdictResult(verdict=verdict, raw=text)


def parse_ambiguities(text: str) -> dict[str, str]:
    """Extract the first well-formed string-to-string dictionary in the text.

    Returns an empty map when none is found; decontextualization then
    proceeds without ambiguities.
    """
    depth = 0
    start = -1
    for i, ch in enumerate(text):
        if ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}" and depth > 0:
            depth -= 1
            if depth == 0:
                block = text[start : i + 1]
                entries = re.findall(r'"((?:[^"\\]|\\.)+)"\s*:\s*"((?:[^"\\]|\\.)*)"', block)
                if entries:
                    return {k: v for k, v in entries}
                if block.strip() in ("{}", "{ }"):
                    return {}
                start = -1
    return {}
