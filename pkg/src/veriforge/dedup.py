"""Generation-level subclaim deduplication via pairwise entailment.

Two claims are duplicates when each entails the other. Selection keeps a
maximum-weight subset with at most one claim from every duplicate pair:
exact branch-and-bound for small sets, greedy beyond that.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from .claims import ClaimSet
from .errors import DimensionMismatch, InvalidInput
from .scoring import EntailmentJudge, atom_for

EXACT_SOLVER_LIMIT = 20


class Solver(str, Enum):
    EXACT = "exact"
    GREEDY = "greedy"


@dataclass(frozen=True)
class EntailmentMatrix:
    """entails[i][j] is True when claim i entails claim j; diagonal is True."""

    entails: tuple[tuple[bool, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.entails)
        if any(len(row) != n for row in self.entails):
            raise InvalidInput("entailment matrix must be square")
        if any(not self.entails[i][i] for i in range(n)):
            raise InvalidInput("diagonal must be all true")

    @property
    def n(self) -> int:
        return len(self.entails)

    def mutual(self, i: int, j: int) -> bool:
        return i != j and self.entails[i][j] and self.entails[j][i]

    def to_json(self) -> str:
        return json.dumps({"entails": [list(row) for row in self.entails]})

    @classmethod
    def from_json(cls, payload: str) -> "EntailmentMatrix":
        data = json.loads(payload)
        return cls(entails=tuple(tuple(bool(v) for v in row) for row in data["entails"]))


@dataclass(frozen=True)
class CoreSelection:
    kept: frozenset[int]
    objective_value: float
    solver: Solver


def build_matrix(claims: Sequence[str], judge: EntailmentJudge) -> EntailmentMatrix:
    """Pairwise directional entailment; the diagonal is set without judge calls."""
    if not claims:
        raise InvalidInput("claims must be non-empty")
    n = len(claims)
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            row.append(True if i == j else judge(claims[i], claims[j]))
        rows.append(tuple(row))
    return EntailmentMatrix(entails=tuple(rows))


def default_weights(claims: Sequence[str]) -> list[float]:
    """Whitespace-token counts: a deterministic informativeness proxy."""
    return [float(len(c.split())) for c in claims]


def _conflicts(matrix: EntailmentMatrix) -> list[set[int]]:
    n = matrix.n
    return [
        {j for j in range(n) if matrix.mutual(i, j)}
        for i in range(n)
    ]


def _solve_exact(conflicts: list[set[int]], weights: Sequence[float]) -> frozenset[int]:
    """Branch and bound over include/exclude decisions, include branch first.

    Exploring inclusion of lower indices first makes the lower-index claim
    win weight ties deterministically.
    """
    n = len(weights)
    suffix = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] + weights[i]
    best_value = -1.0
    best_kept: tuple[int, ...] = ()

    def descend(i: int, kept: list[int], value: float, blocked: set[int]) -> None:
        nonlocal best_value, best_kept
        if value + suffix[i] <= best_value:
            return
        if i == n:
            if value > best_value:
                best_value = value
                best_kept = tuple(kept)
            return
        if i not in blocked:
            kept.append(i)
            added = conflicts[i] - blocked
            descend(i + 1, kept, value + weights[i], blocked | added)
            kept.pop()
        descend(i + 1, kept, value, blocked)

    descend(0, [], 0.0, set())
    return frozenset(best_kept)


def _solve_greedy(conflicts: list[set[int]], weights: Sequence[float]) -> frozenset[int]:
    order = sorted(range(len(weights)), key=lambda i: (-weights[i], i))
    kept: list[int] = []
    for i in order:
        if all(i not in conflicts[j] for j in kept):
            kept.append(i)
    return frozenset(kept)


def select_core(
    matrix: EntailmentMatrix, weights: Optional[Sequence[float]] = None
) -> CoreSelection:
    """Maximum-weight subset with no mutually-entailing pair kept together."""
    if weights is None:
        raise InvalidInput("weights are required; use default_weights(claims)")
    if len(weights) != matrix.n:
        raise DimensionMismatch(f"{len(weights)} weights for {matrix.n} claims")
    if any(w <= 0 for w in weights):
        raise InvalidInput("weights must be positive")
    conflicts = _conflicts(matrix)
    if matrix.n <= EXACT_SOLVER_LIMIT:
        kept = _solve_exact(conflicts, weights)
        solver = Solver.EXACT
    else:
        kept = _solve_greedy(conflicts, weights)
        solver = Solver.GREEDY
    return CoreSelection(
        kept=kept,
        objective_value=sum(weights[i] for i in kept),
        solver=solver,
    )


def dedup_claim_set(
    claim_set: ClaimSet, judge: EntailmentJudge
) -> tuple[ClaimSet, frozenset[int]]:
    """Restrict a claim set to its core selection; returns (set, kept indices).

    Paired subclaim/decontextualized texts live on the same item, so the kept
    mask keeps pairs aligned; apply_mask reuses a mask on a companion set.
    """
    if not claim_set.items:
        return claim_set, frozenset()
    texts = [atom_for(item) for item in claim_set.items]
    matrix = build_matrix(texts, judge)
    selection = select_core(matrix, default_weights(texts))
    return apply_mask(claim_set, selection.kept), selection.kept


def apply_mask(claim_set: ClaimSet, kept: frozenset[int]) -> ClaimSet:
    """Keep only the items at the given indices, preserving order."""
    items = tuple(
        item for i, item in enumerate(claim_set.items) if i in kept
    )
    return replace(claim_set, items=items)


def save_matrix(matrix: EntailmentMatrix, path: str | Path) -> None:
    Path(path).write_text(matrix.to_json(), encoding="utf-8")


def load_matrix(path: str | Path) -> EntailmentMatrix:
    return EntailmentMatrix.from_json(Path(path).read_text(encoding="utf-8"))
