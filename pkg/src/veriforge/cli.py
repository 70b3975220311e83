"""Command-line entry points.

Exit codes: 0 success (possibly with warnings), 1 configuration error,
2 partial failure (some passages failed).
"""

from __future__ import annotations

import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import click

from . import dedup as dedup_mod
from . import reporting, runner
from .analysis import change_stats
from .claims import Strategy
from .errors import ConfigError, VeriforgeError
from .parsing import Verdict, VerdictResult
from .retrieval import ingest as build_index, load_corpus
from .scoring import Judgment, Mode, PassageScore, aggregate, score_passage

logger = logging.getLogger(__name__)


@click.group()
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def cli(verbose: bool) -> None:
    """Decompose, decontextualize, and verify LLM generations."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


@cli.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def run_cmd(config_path: str) -> None:
    """Execute a full evaluation run from a YAML config."""
    try:
        config = runner.load_config(config_path)
        report, exit_code = runner.run(config)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)
    except VeriforgeError as exc:
        click.echo(f"run failed: {exc}", err=True)
        sys.exit(1)
    click.echo(f"report written to {config.output_dir}")
    sys.exit(exit_code)


@cli.command("ingest")
@click.option("--corpus", required=True, type=click.Path(exists=True))
def ingest_cmd(corpus: str) -> None:
    """Validate a corpus file and print chunking statistics."""
    try:
        index = build_index(load_corpus(corpus))
    except VeriforgeError as exc:
        click.echo(f"ingest failed: {exc}", err=True)
        sys.exit(1)
    total_chunks = sum(len(index.chunks(topic)) for topic in index.topics)
    click.echo(f"topics: {len(index.topics)}")
    click.echo(f"chunks: {total_chunks}")


@cli.command("dedup")
@click.option("--claims", "claims_path", required=True, type=click.Path(exists=True),
              help="JSON list of claim strings.")
@click.option("--matrix", "matrix_path", required=True, type=click.Path(exists=True),
              help="Entailment matrix JSON as produced by the pipeline.")
@click.option("--out", "out_path", type=click.Path(), default=None)
def dedup_cmd(claims_path: str, matrix_path: str, out_path: str | None) -> None:
    """Select the core subset of a claim list given its entailment matrix."""
    claims = json.loads(Path(claims_path).read_text(encoding="utf-8"))
    try:
        matrix = dedup_mod.load_matrix(matrix_path)
        selection = dedup_mod.select_core(matrix, dedup_mod.default_weights(claims))
    except VeriforgeError as exc:
        click.echo(f"dedup failed: {exc}", err=True)
        sys.exit(1)
    payload = {
        "kept": sorted(selection.kept),
        "objective_value": selection.objective_value,
        "solver": selection.solver.value,
        "kept_claims": [claims[i] for i in sorted(selection.kept)],
    }
    text = json.dumps(payload, indent=2)
    if out_path:
        Path(out_path).write_text(text + "\n", encoding="utf-8")
    else:
        click.echo(text)


def _load_judgments(path: str) -> tuple[list[Judgment], list[dict]]:
    records = [
        json.loads(line)
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    judgments = [
        Judgment(
            claim_id=r["claim_id"],
            mode=Mode(r["mode"]),
            verdict=VerdictResult(verdict=Verdict(r["verdict"]), raw=r.get("raw", "")),
            evidence=("<persisted>",) if Verdict(r["verdict"]) is not Verdict.UNPARSEABLE else (),
            prompt_digest=r.get("prompt_digest", ""),
        )
        for r in records
    ]
    return judgments, records


@cli.command("score")
@click.option("--judgments", "judgments_path", required=True, type=click.Path(exists=True))
def score_cmd(judgments_path: str) -> None:
    """Recompute per-passage and split scores from a persisted judgments file."""
    judgments, records = _load_judgments(judgments_path)
    by_passage: dict[str, list[Judgment]] = {}
    meta: dict[str, dict] = {}
    for judgment, record in zip(judgments, records):
        by_passage.setdefault(record["passage_ref"], []).append(judgment)
        meta[record["passage_ref"]] = record
    scores: list[PassageScore] = []
    for ref, group in by_passage.items():
        record = meta[ref]
        scores.append(
            score_passage(group, ref, Strategy(record["strategy"]), Mode(record["mode"]))
        )
    for ps in scores:
        shown = "undefined" if ps.score is None else reporting.pct2(ps.score)
        click.echo(f"{ps.passage_ref}: {shown}% ({ps.supported}/{ps.total}, unparseable {ps.unparseable})")
    if scores:
        split = aggregate(scores, "all")
        click.echo(f"macro average: {reporting.pct2(split.avg_score)}%")


@cli.command("analyze")
@click.option("--judgments-a", required=True, type=click.Path(exists=True))
@click.option("--judgments-b", required=True, type=click.Path(exists=True))
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True),
              help="JSON list of [subclaim, decontextualized] pairs aligned with the judgments.")
def analyze_cmd(judgments_a: str, judgments_b: str, pairs_path: str) -> None:
    """Judgment-change statistics between two aligned judgment files."""
    a, _ = _load_judgments(judgments_a)
    b, _ = _load_judgments(judgments_b)
    pairs = [tuple(p) for p in json.loads(Path(pairs_path).read_text(encoding="utf-8"))]
    try:
        stats = change_stats(a, b, pairs)
    except VeriforgeError as exc:
        click.echo(f"analyze failed: {exc}", err=True)
        sys.exit(1)
    click.echo(f"aligned: {stats.n_aligned}")
    click.echo(f"changed: {reporting.round2(stats.pct_changed)}%")
    click.echo(f"false to true: {reporting.round2(stats.pct_false_to_true)}%")
    click.echo(f"true to false: {reporting.round2(stats.pct_true_to_false)}%")
    click.echo(
        "f2t with pronoun replacement: "
        f"{reporting.round2(stats.pct_f2t_with_pronoun_replacement)}%"
    )
    click.echo(
        "t2f with pronoun replacement: "
        f"{reporting.round2(stats.pct_t2f_with_pronoun_replacement)}%"
    )


@cli.command("report")
@click.option("--judgments-dir", required=True, type=click.Path(exists=True),
              help="Directory of persisted judgments (<mode>_<strategy>.jsonl files).")
@click.option("--out", "out_dir", required=True, type=click.Path())
def report_cmd(judgments_dir: str, out_dir: str) -> None:
    """Re-emit CSV and Markdown score tables from persisted judgments."""
    cells = []
    for path in sorted(Path(judgments_dir).glob("*.jsonl")):
        judgments, records = _load_judgments(str(path))
        if not judgments:
            continue
        by_passage: dict[str, list[Judgment]] = {}
        splits: dict[str, str] = {}
        for judgment, record in zip(judgments, records):
            by_passage.setdefault(record["passage_ref"], []).append(judgment)
            splits[record["passage_ref"]] = record["split"]
        strategy = Strategy(records[0]["strategy"])
        mode = Mode(records[0]["mode"])
        by_split: dict[str, list[PassageScore]] = {}
        for ref, group in by_passage.items():
            by_split.setdefault(splits[ref], []).append(
                score_passage(group, ref, strategy, mode)
            )
        for split, scores in sorted(by_split.items()):
            split_report = aggregate(scores, split)
            cells.append(
                reporting.ReportCell(
                    model_split=split,
                    strategy=strategy,
                    mode=mode,
                    avg_score=split_report.avg_score,
                    avg_subclaims=split_report.avg_subclaims,
                    passage_count=split_report.passage_count,
                    unparseable=split_report.unparseable,
                )
            )
    report = reporting.RunReport(cells=cells)
    written = reporting.emit_report(report, out_dir)
    for path in written:
        click.echo(str(path))


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
