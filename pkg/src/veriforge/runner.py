"""End-to-end orchestration: corpus ingestion, claim production, verification,
scoring, dedup, change analysis, and report persistence."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import yaml

from . import analysis, dedup as dedup_mod, pipelines, reporting, scoring
from .claims import ClaimItem, ClaimSet, Passage, Strategy, make_passage
from .errors import ConfigError, VeriforgeError
from .gateway import HttpBackend, LlmGateway, MockBackend
from .parsing import Verdict
from .reporting import ChangeRow, DecompScoreRow, ReportCell, RunReport
from .retrieval import Bm25Index, ingest, load_corpus
from .scoring import Judgment, Mode, PassageScore

logger = logging.getLogger(__name__)

ALL_STRATEGIES = tuple(Strategy)
ALL_MODES = (Mode.FACTSCORE, Mode.DNDSCORE)
DISAGREEMENT_LIMIT = 20


@dataclass
class RunConfig:
    corpus: str = ""
    generations: str = ""
    output_dir: str = "out"
    cache_dir: str = "cache"
    strategies: tuple[Strategy, ...] = ALL_STRATEGIES
    modes: tuple[Mode, ...] = ALL_MODES
    dedup: bool = False
    backend: str = "mock"  # "mock" | "http"
    mock_script: str = ""
    decomp_model: str = "decomp-model"
    decontext_model: str = "decontext-model"
    dnd_model: str = "dnd-model"
    verify_model: str = "verify-model"
    nli_model: str = "nli-model"
    parallelism: int = 4
    evidence_k: int = scoring.DEFAULT_EVIDENCE_K
    reference_budget: int = scoring.DEFAULT_REFERENCE_BUDGET
    retry_on_parse_error: bool = True
    decompscore_premise: str = "original"  # "original" | "decontext"
    pronoun_semantics: str = "any"  # "any" | "all"

    def validate(self) -> None:
        if not self.strategies:
            raise ConfigError("at least one strategy is required")
        if not self.modes:
            raise ConfigError("at least one mode is required")
        if not Path(self.corpus).exists():
            raise ConfigError(f"corpus not found: {self.corpus}")
        if not Path(self.generations).exists():
            raise ConfigError(f"generations not found: {self.generations}")
        if self.backend not in ("mock", "http"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.backend == "mock" and not Path(self.mock_script).exists():
            raise ConfigError(f"mock script not found: {self.mock_script}")
        if self.decompscore_premise not in ("original", "decontext"):
            raise ConfigError("decompscore_premise must be 'original' or 'decontext'")
        if self.pronoun_semantics not in ("any", "all"):
            raise ConfigError("pronoun_semantics must be 'any' or 'all'")


def load_config(path: str | Path) -> RunConfig:
    """Read a YAML run configuration; unknown keys are rejected."""
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "strategies" in raw:
        raw["strategies"] = tuple(Strategy(s) for s in raw["strategies"])
    if "modes" in raw:
        raw["modes"] = tuple(Mode(m) for m in raw["modes"])
    return RunConfig(**raw)


def load_generations(path: str | Path) -> list[Passage]:
    """JSON-lines generations with fields topic, model_split, generation."""
    passages: list[Passage] = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            passages.append(
                make_passage(record["topic"], record["model_split"], record["generation"])
            )
    return passages


def build_gateway(config: RunConfig) -> LlmGateway:
    if config.backend == "mock":
        script = json.loads(Path(config.mock_script).read_text(encoding="utf-8"))
        backend = MockBackend.from_script(script)
    else:
        backend = HttpBackend()
    return LlmGateway(backend, config.cache_dir, parallelism=config.parallelism)


@dataclass
class _PassageResult:
    passage: Passage
    claim_sets: dict[Strategy, ClaimSet] = field(default_factory=dict)
    # (strategy, mode) -> aligned judgments, one per claim item
    judgments: dict[tuple[Strategy, Mode], list[Judgment]] = field(default_factory=dict)
    core_masks: dict[tuple[Strategy, str], frozenset[int]] = field(default_factory=dict)
    decomp_scores: dict[Strategy, tuple[Optional[Fraction], int]] = field(default_factory=dict)


def _produce_claim_sets(
    passage: Passage,
    strategies: Sequence[Strategy],
    gateway: LlmGateway,
    pipeline_config: pipelines.PipelineConfig,
) -> dict[Strategy, ClaimSet]:
    sets: dict[Strategy, ClaimSet] = {}
    if Strategy.DECOMP_ONLY in strategies:
        sets[Strategy.DECOMP_ONLY] = pipelines.run_decomp_only(passage, gateway, pipeline_config)
    if Strategy.DECOMP_THEN_DECONTEXT in strategies:
        sets[Strategy.DECOMP_THEN_DECONTEXT] = pipelines.run_decomp_then_decontext(
            passage, gateway, pipeline_config
        )
    if Strategy.DECONTEXT_THEN_DECOMP in strategies:
        sets[Strategy.DECONTEXT_THEN_DECOMP] = pipelines.run_decontext_then_decomp(
            passage, gateway, pipeline_config
        )
    if Strategy.DND_SUBCLAIM in strategies or Strategy.DND_DECONTEXT in strategies:
        sub_set, dec_set = pipelines.run_dnd(passage, gateway, pipeline_config)
        if Strategy.DND_SUBCLAIM in strategies:
            sets[Strategy.DND_SUBCLAIM] = sub_set
        if Strategy.DND_DECONTEXT in strategies:
            sets[Strategy.DND_DECONTEXT] = dec_set
    return sets


def _core_mask(
    result: _PassageResult,
    claim_set: ClaimSet,
    texts_role: str,
    judge: scoring.EntailmentJudge,
) -> frozenset[int]:
    """Kept-index mask for a claim set, memoized per (strategy, text role)."""
    key = (claim_set.strategy, texts_role)
    if key not in result.core_masks:
        if texts_role == "atom":
            texts = [scoring.atom_for(item) for item in claim_set.items]
        else:
            texts = [item.subclaim for item in claim_set.items]
        if not texts:
            result.core_masks[key] = frozenset()
        else:
            matrix = dedup_mod.build_matrix(texts, judge)
            selection = dedup_mod.select_core(matrix, dedup_mod.default_weights(texts))
            result.core_masks[key] = selection.kept
    return result.core_masks[key]


def _process_passage(
    passage: Passage,
    config: RunConfig,
    gateway: LlmGateway,
    index: Bm25Index,
    pipeline_config: pipelines.PipelineConfig,
    judge: scoring.EntailmentJudge,
) -> _PassageResult:
    result = _PassageResult(passage=passage)
    result.claim_sets = _produce_claim_sets(passage, config.strategies, gateway, pipeline_config)

    for strategy, claim_set in result.claim_sets.items():
        if Mode.FACTSCORE in config.modes:
            result.judgments[(strategy, Mode.FACTSCORE)] = [
                scoring.verify_factscore(
                    item, passage.topic, index, gateway, config.verify_model, k=config.evidence_k
                )
                for item in claim_set.items
            ]
        if Mode.DNDSCORE in config.modes and strategy is not Strategy.DND_DECONTEXT:
            result.judgments[(strategy, Mode.DNDSCORE)] = [
                scoring.verify_dndscore(
                    item.subclaim,
                    scoring.dndscore_context_for(item, claim_set, passage),
                    passage.topic,
                    index,
                    gateway,
                    config.verify_model,
                    claim_id=item.id,
                    budget=config.reference_budget,
                )
                for item in claim_set.items
            ]
        result.decomp_scores[strategy] = scoring.decompscore(
            claim_set,
            passage,
            judge,
            premise_from_context=config.decompscore_premise == "decontext",
        )
        if config.dedup:
            _core_mask(result, claim_set, "atom", judge)
            if Mode.DNDSCORE in config.modes and strategy is not Strategy.DND_DECONTEXT:
                _core_mask(result, claim_set, "subclaim", judge)
    return result


def _passage_scores(
    results: Sequence[_PassageResult],
    strategy: Strategy,
    mode: Mode,
    core: bool,
) -> tuple[list[PassageScore], list[int]]:
    scores: list[PassageScore] = []
    counts: list[int] = []
    texts_role = "subclaim" if mode is Mode.DNDSCORE else "atom"
    for result in results:
        key = (strategy, mode)
        if key not in result.judgments:
            continue
        judgments = result.judgments[key]
        if core:
            mask = result.core_masks.get((strategy, texts_role), frozenset())
            judgments = [j for i, j in enumerate(judgments) if i in mask]
        scores.append(scoring.score_passage(judgments, result.passage.ref, strategy, mode))
        counts.append(len(judgments))
    return scores, counts


def _assemble_report(config: RunConfig, results: list[_PassageResult], gateway: LlmGateway) -> RunReport:
    report = RunReport(dedup_enabled=config.dedup)
    splits = sorted({r.passage.model_split for r in results})

    for split in splits:
        split_results = [r for r in results if r.passage.model_split == split]
        for strategy in config.strategies:
            for mode in config.modes:
                if mode is Mode.DNDSCORE and strategy is Strategy.DND_DECONTEXT:
                    continue
                scores, counts = _passage_scores(split_results, strategy, mode, core=False)
                if not scores:
                    continue
                split_report = scoring.aggregate(scores, split, counts)
                core_score = core_subclaims = None
                if config.dedup:
                    core_scores, core_counts = _passage_scores(split_results, strategy, mode, core=True)
                    core_report = scoring.aggregate(core_scores, split, core_counts)
                    core_score = core_report.avg_score
                    core_subclaims = core_report.avg_subclaims
                report.cells.append(
                    ReportCell(
                        model_split=split,
                        strategy=strategy,
                        mode=mode,
                        avg_score=split_report.avg_score,
                        avg_subclaims=split_report.avg_subclaims,
                        avg_score_core=core_score,
                        avg_subclaims_core=core_subclaims,
                        passage_count=split_report.passage_count,
                        unparseable=split_report.unparseable,
                    )
                )
            dscores = [
                r.decomp_scores[strategy] for r in split_results if strategy in r.decomp_scores
            ]
            if dscores:
                defined = [s for s, _ in dscores if s is not None]
                avg = sum(defined, Fraction(0)) / len(defined) if defined else None
                counts = [n for _, n in dscores]
                report.decomp_rows.append(
                    DecompScoreRow(
                        model_split=split,
                        strategy=strategy,
                        avg_score=avg,
                        avg_subclaims=Fraction(sum(counts), len(counts)) if counts else None,
                    )
                )

    report.change_rows = _change_rows(config, results)
    report.metadata = {
        "passages": len(results),
        "splits": splits,
        "cache_hits": gateway.stats.hits,
        "cache_misses": gateway.stats.misses,
        "cache_hit_rate": gateway.stats.hit_rate,
        "skipped_sentences": sum(
            len(cs.skipped_sentences) for r in results for cs in r.claim_sets.values()
        ),
        "unparseable_verdicts": sum(
            1
            for r in results
            for js in r.judgments.values()
            for j in js
            if j.verdict.verdict is Verdict.UNPARSEABLE
        ),
    }
    return report


def _dnd_alignment(
    results: Sequence[_PassageResult], key_a: tuple[Strategy, Mode], key_b: tuple[Strategy, Mode]
) -> tuple[list[Judgment], list[Judgment], list[tuple[str, str]]]:
    a: list[Judgment] = []
    b: list[Judgment] = []
    pairs: list[tuple[str, str]] = []
    for result in results:
        if key_a not in result.judgments or key_b not in result.judgments:
            continue
        claim_set = result.claim_sets[key_a[0]]
        a.extend(result.judgments[key_a])
        b.extend(result.judgments[key_b])
        pairs.extend(
            (item.subclaim, item.decontextualized or item.subclaim)
            for item in claim_set.items
        )
    return a, b, pairs


def _change_rows(config: RunConfig, results: list[_PassageResult]) -> list[ChangeRow]:
    rows: list[ChangeRow] = []
    require_all = config.pronoun_semantics == "all"
    comparisons = [
        (
            "DnD Subclaim FActScore vs DnD Decontextualized FActScore",
            (Strategy.DND_SUBCLAIM, Mode.FACTSCORE),
            (Strategy.DND_DECONTEXT, Mode.FACTSCORE),
        ),
        (
            "DnD Subclaim FActScore vs DnDScore",
            (Strategy.DND_SUBCLAIM, Mode.FACTSCORE),
            (Strategy.DND_SUBCLAIM, Mode.DNDSCORE),
        ),
    ]
    for name, key_a, key_b in comparisons:
        a, b, pairs = _dnd_alignment(results, key_a, key_b)
        if not a:
            continue
        rows.append(
            ChangeRow(
                comparison=name,
                stats=analysis.change_stats(a, b, pairs, require_all_pronouns=require_all),
            )
        )
    return rows


def _persist_judgments(results: list[_PassageResult], output_dir: Path) -> None:
    grouped: dict[tuple[Strategy, Mode], list[str]] = {}
    for result in results:
        for (strategy, mode), judgments in result.judgments.items():
            lines = grouped.setdefault((strategy, mode), [])
            for judgment in judgments:
                lines.append(
                    json.dumps(
                        {
                            "claim_id": judgment.claim_id,
                            "passage_ref": result.passage.ref,
                            "split": result.passage.model_split,
                            "strategy": strategy.value,
                            "mode": mode.value,
                            "verdict": judgment.verdict.verdict.value,
                            "raw": judgment.verdict.raw,
                            "prompt_digest": judgment.prompt_digest,
                        },
                        sort_keys=True,
                    )
                )
    jdir = output_dir / "judgments"
    jdir.mkdir(parents=True, exist_ok=True)
    for (strategy, mode), lines in grouped.items():
        path = jdir / f"{mode.value}_{strategy.value}.jsonl"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_disagreements(config: RunConfig, results: list[_PassageResult], output_dir: Path) -> None:
    a, b, pairs = _dnd_alignment(
        results,
        (Strategy.DND_SUBCLAIM, Mode.FACTSCORE),
        (Strategy.DND_DECONTEXT, Mode.FACTSCORE),
    )
    if not a:
        return
    examples = analysis.disagreement_examples(a, b, pairs, DISAGREEMENT_LIMIT)
    lines = [
        "# Judgment Disagreements",
        "",
        "| Subclaim | Decontextualized | Subclaim Verdict | Decontextualized Verdict |",
        "| --- | --- | --- | --- |",
    ]
    lines += [
        f"| {sub} | {dec} | {va.value} | {vb.value} |" for sub, dec, va, vb in examples
    ]
    (output_dir / "disagreements.md").write_text("\n".join(lines) + "\n", encoding="utf-8")


def run(config: RunConfig) -> tuple[RunReport, int]:
    """Execute a full evaluation run; returns (report, exit code)."""
    config.validate()
    started = time.time()
    gateway = build_gateway(config)
    index = ingest(load_corpus(config.corpus))
    passages = load_generations(config.generations)
    pipeline_config = pipelines.PipelineConfig(
        decomp_model_id=config.decomp_model,
        decontext_model_id=config.decontext_model,
        dnd_model_id=config.dnd_model,
        retry_on_parse_error=config.retry_on_parse_error,
    )
    judge = scoring.nli_judge(gateway, config.nli_model)

    results: list[_PassageResult] = []
    failed: list[str] = []
    for passage in passages:
        try:
            results.append(
                _process_passage(passage, config, gateway, index, pipeline_config, judge)
            )
        except VeriforgeError as exc:
            failed.append(passage.ref)
            logger.error("passage %s failed: %s", passage.ref, exc)

    if not passages:
        logger.warning("no passages in generations file")

    report = _assemble_report(config, results, gateway)
    report.metadata["failed_passages"] = failed
    report.metadata["elapsed_seconds"] = time.time() - started

    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    reporting.emit_report(report, output_dir)
    _persist_judgments(results, output_dir)
    _write_disagreements(config, results, output_dir)
    (output_dir / "run_meta.json").write_text(
        json.dumps(report.metadata, indent=2, sort_keys=True), encoding="utf-8"
    )
    exit_code = 2 if failed else 0
    return report, exit_code
