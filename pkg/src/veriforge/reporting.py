"""Report assembly and CSV/Markdown emission mirroring the score tables."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from .analysis import ChangeStats
from .claims import Strategy
from .scoring import Mode

# DnDScore rows: (strategy of the verified set, context label, verified label).
DNDSCORE_ROWS: tuple[tuple[Strategy, str, str], ...] = (
    (Strategy.DECOMP_ONLY, "Original Sentence", "Decomp"),
    (Strategy.DECOMP_THEN_DECONTEXT, "Decomp -> Decontext", "Decomp"),
    (Strategy.DECONTEXT_THEN_DECOMP, "Decontext Sentence", "Decontext -> Decomp"),
    (Strategy.DND_SUBCLAIM, "DnD Decontextualized", "DnD Subclaim"),
)

FACTSCORE_ROW_ORDER: tuple[Strategy, ...] = (
    Strategy.DECOMP_ONLY,
    Strategy.DECOMP_THEN_DECONTEXT,
    Strategy.DECONTEXT_THEN_DECOMP,
    Strategy.DND_SUBCLAIM,
    Strategy.DND_DECONTEXT,
)


@dataclass(frozen=True)
class ReportCell:
    model_split: str
    strategy: Strategy
    mode: Mode
    avg_score: Optional[Fraction]
    avg_subclaims: Optional[Fraction]
    avg_score_core: Optional[Fraction] = None
    avg_subclaims_core: Optional[Fraction] = None
    passage_count: int = 0
    unparseable: int = 0
    failed: bool = False


@dataclass(frozen=True)
class DecompScoreRow:
    model_split: str
    strategy: Strategy
    avg_score: Optional[Fraction]
    avg_subclaims: Optional[Fraction]


@dataclass(frozen=True)
class ChangeRow:
    comparison: str
    stats: ChangeStats


@dataclass
class RunReport:
    cells: list[ReportCell] = field(default_factory=list)
    decomp_rows: list[DecompScoreRow] = field(default_factory=list)
    change_rows: list[ChangeRow] = field(default_factory=list)
    dedup_enabled: bool = False
    metadata: dict = field(default_factory=dict)


def round2(value: Optional[Fraction]) -> str:
    """Exact rational to 2 decimals, round half up; '-' for undefined."""
    if value is None:
        return "-"
    dec = Decimal(value.numerator) / Decimal(value.denominator)
    return str(dec.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def pct2(value: Optional[Fraction]) -> str:
    return round2(None if value is None else value * 100)


def _mean(values: Sequence[Fraction]) -> Optional[Fraction]:
    if not values:
        return None
    return sum(values, Fraction(0)) / len(values)


def _aggregate_cells(
    cells: Sequence[ReportCell], strategy: Strategy, mode: Mode
) -> Optional[ReportCell]:
    """Average a (strategy, mode) row across model splits."""
    matching = [c for c in cells if c.strategy is strategy and c.mode is mode and not c.failed]
    if not matching:
        return None
    return ReportCell(
        model_split="all",
        strategy=strategy,
        mode=mode,
        avg_score=_mean([c.avg_score for c in matching if c.avg_score is not None]),
        avg_subclaims=_mean([c.avg_subclaims for c in matching if c.avg_subclaims is not None]),
        avg_score_core=_mean([c.avg_score_core for c in matching if c.avg_score_core is not None]),
        avg_subclaims_core=_mean(
            [c.avg_subclaims_core for c in matching if c.avg_subclaims_core is not None]
        ),
        passage_count=sum(c.passage_count for c in matching),
        unparseable=sum(c.unparseable for c in matching),
    )


def emit_csv(report: RunReport) -> str:
    """One row per (split, strategy, mode) cell."""
    buf = io.StringIO()
    header = ["split", "strategy", "mode", "avg_score", "avg_subclaims"]
    if report.dedup_enabled:
        header += ["avg_score_core", "avg_subclaims_core"]
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for cell in report.cells:
        row = [
            cell.model_split,
            cell.strategy.value,
            cell.mode.value,
            "failed" if cell.failed else pct2(cell.avg_score),
            "failed" if cell.failed else round2(cell.avg_subclaims),
        ]
        if report.dedup_enabled:
            row += [pct2(cell.avg_score_core), round2(cell.avg_subclaims_core)]
        writer.writerow(row)
    return buf.getvalue()


def _md_table(header: list[str], rows: list[list[str]]) -> str:
    lines = [
        "| " + " | ".join(header) + " |",
        "| " + " | ".join("---" for _ in header) + " |",
    ]
    lines += ["| " + " | ".join(row) + " |" for row in rows]
    return "\n".join(lines)


def emit_markdown(report: RunReport) -> str:
    """Score tables averaged across model splits, in the published row layout."""
    sections: list[str] = ["# Run Report"]

    header = ["Factuality Score", "Context", "Verified Subclaim", "Avg Score (%)", "Avg # Subclaims"]
    if report.dedup_enabled:
        header += ["Avg Score with Core (%)", "Avg # Subclaims with Core"]
    rows: list[list[str]] = []
    for strategy in FACTSCORE_ROW_ORDER:
        cell = _aggregate_cells(report.cells, strategy, Mode.FACTSCORE)
        if cell is None:
            continue
        row = ["FActScore", "-", strategy.label, pct2(cell.avg_score), round2(cell.avg_subclaims)]
        if report.dedup_enabled:
            row += [pct2(cell.avg_score_core), round2(cell.avg_subclaims_core)]
        rows.append(row)
    for strategy, context_label, verified_label in DNDSCORE_ROWS:
        cell = _aggregate_cells(report.cells, strategy, Mode.DNDSCORE)
        if cell is None:
            continue
        row = ["DnDScore", context_label, verified_label, pct2(cell.avg_score), round2(cell.avg_subclaims)]
        if report.dedup_enabled:
            row += [pct2(cell.avg_score_core), round2(cell.avg_subclaims_core)]
        rows.append(row)
    sections.append("## Fact Verification\n\n" + _md_table(header, rows))

    if report.decomp_rows:
        by_strategy: dict[Strategy, list[DecompScoreRow]] = {}
        for row_obj in report.decomp_rows:
            by_strategy.setdefault(row_obj.strategy, []).append(row_obj)
        drows = []
        for strategy in FACTSCORE_ROW_ORDER:
            group = by_strategy.get(strategy)
            if not group:
                continue
            avg_score = _mean([r.avg_score for r in group if r.avg_score is not None])
            avg_sub = _mean([r.avg_subclaims for r in group if r.avg_subclaims is not None])
            drows.append([strategy.label, pct2(avg_score), round2(avg_sub)])
        sections.append(
            "## Decomposition Support\n\n"
            + _md_table(["Method", "Avg DecompScore (%)", "Avg # Subclaims"], drows)
        )

    if report.change_rows:
        crows = [
            [
                row.comparison,
                str(row.stats.n_aligned),
                round2(row.stats.pct_changed),
                round2(row.stats.pct_false_to_true),
                round2(row.stats.pct_true_to_false),
                round2(row.stats.pct_f2t_with_pronoun_replacement),
                round2(row.stats.pct_t2f_with_pronoun_replacement),
            ]
            for row in report.change_rows
        ]
        sections.append(
            "## Judgment Changes\n\n"
            + _md_table(
                [
                    "Comparison",
                    "Aligned Claims",
                    "Changed (%)",
                    "False to True (%)",
                    "True to False (%)",
                    "F2T with Pronoun Repl. (%)",
                    "T2F with Pronoun Repl. (%)",
                ],
                crows,
            )
        )

    return "\n\n".join(sections) + "\n"


def emit_report(
    report: RunReport, output_dir: str | Path, formats: Sequence[str] = ("csv", "md")
) -> list[Path]:
    """Write the report files; returns the written paths."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if "csv" in formats:
        path = out / "report.csv"
        path.write_text(emit_csv(report), encoding="utf-8")
        written.append(path)
    if "md" in formats:
        path = out / "report.md"
        path.write_text(emit_markdown(report), encoding="utf-8")
        written.append(path)
    return written
