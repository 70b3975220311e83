"""Claim verification in both modes, entailment-based decomposition support,
and exact-arithmetic score aggregation."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Optional, Sequence

from . import prompts
from .claims import ClaimItem, ClaimSet, Passage, Strategy
from .errors import InvalidInput, MissingContext
from .gateway import CompletionRequest, LlmGateway, cache_key
from .parsing import Verdict, VerdictResult, parse_verdict
from .retrieval import Bm25Index

DEFAULT_EVIDENCE_K = 5
DEFAULT_REFERENCE_BUDGET = 1500
VERIFY_MAX_TOKENS = 32


class Mode(str, Enum):
    FACTSCORE = "factscore"
    DNDSCORE = "dndscore"

    @property
    def label(self) -> str:
        return "FActScore" if self is Mode.FACTSCORE else "DnDScore"


@dataclass(frozen=True)
class Judgment:
    claim_id: str
    mode: Mode
    verdict: VerdictResult
    evidence: tuple[str, ...]
    prompt_digest: str

    def __post_init__(self) -> None:
        if self.verdict.verdict is not Verdict.UNPARSEABLE and not self.evidence:
            raise InvalidInput("supported/not-supported judgments need evidence")


@dataclass(frozen=True)
class PassageScore:
    passage_ref: str
    strategy: Strategy
    mode: Mode
    supported: int
    total: int
    unparseable: int

    @property
    def score(self) -> Optional[Fraction]:
        """supported / total; None marks an undefined (empty) passage."""
        if self.total == 0:
            return None
        return Fraction(self.supported, self.total)


@dataclass(frozen=True)
class SplitReport:
    model_split: str
    strategy: Strategy
    mode: Mode
    avg_score: Optional[Fraction]
    avg_subclaims: Optional[Fraction]
    passage_count: int
    undefined_count: int
    unparseable: int


def atom_for(item: ClaimItem) -> str:
    """The text verified for this item's score-table row."""
    if item.strategy.verifies_decontextualized:
        if item.decontextualized is None:
            raise MissingContext(f"item {item.id} has no decontextualized form")
        return item.decontextualized
    return item.subclaim


def dndscore_context_for(
    item: ClaimItem, claim_set: ClaimSet, passage: Optional[Passage] = None
) -> str:
    """The context paired with the verified subclaim in contextualized mode.

    Per row: the source sentence (decomposition only), the item's
    decontextualized form (decompose-then-decontextualize), the rewritten
    sentence (decontextualize-then-decompose), or the paired
    decontextualized claim (joint method).
    """
    strategy = claim_set.strategy
    if strategy is Strategy.DECOMP_ONLY:
        if passage is None:
            raise MissingContext("source-sentence context requires the passage")
        return passage.sentences[item.source_sentence].text
    if strategy is Strategy.DECOMP_THEN_DECONTEXT:
        if item.decontextualized is None:
            raise MissingContext(f"item {item.id} has no decontextualized form")
        return item.decontextualized
    if strategy is Strategy.DECONTEXT_THEN_DECOMP:
        if (
            claim_set.context_sentences is None
            or item.source_sentence not in claim_set.context_sentences
        ):
            raise MissingContext(f"no decontextualized sentence for item {item.id}")
        return claim_set.context_sentences[item.source_sentence]
    if item.decontextualized is None:
        raise MissingContext(f"item {item.id} has no paired decontextualized claim")
    return item.decontextualized


def verify_factscore(
    item: ClaimItem,
    topic: str,
    index: Bm25Index,
    gateway: LlmGateway,
    verify_model_id: str,
    k: int = DEFAULT_EVIDENCE_K,
) -> Judgment:
    """Atomic True/False verification against top-k retrieved evidence."""
    atom = atom_for(item)
    chunks = index.retrieve(topic, atom, k)
    prompt = prompts.render_factscore_verify(
        topic, [(c.title, c.text) for c in chunks], atom
    )
    req = CompletionRequest(
        model_id=verify_model_id, prompt=prompt, max_tokens=VERIFY_MAX_TOKENS
    )
    result = parse_verdict(gateway.complete(req).text)
    return Judgment(
        claim_id=item.id,
        mode=Mode.FACTSCORE,
        verdict=result,
        evidence=tuple(c.text for c in chunks),
        prompt_digest=cache_key(req),
    )


def verify_dndscore(
    subclaim: str,
    decontext: str,
    topic: str,
    index: Bm25Index,
    gateway: LlmGateway,
    verify_model_id: str,
    claim_id: str = "",
    budget: int = DEFAULT_REFERENCE_BUDGET,
) -> Judgment:
    """Verify the subclaim given its decontextualized form over a reference document."""
    if not subclaim or not decontext:
        raise InvalidInput("subclaim and decontextualized text must be non-empty")
    reference = index.full_reference(topic, budget, query=decontext)
    prompt = prompts.render_dndscore_verify(topic, reference, decontext, subclaim)
    req = CompletionRequest(
        model_id=verify_model_id, prompt=prompt, max_tokens=VERIFY_MAX_TOKENS
    )
    result = parse_verdict(gateway.complete(req).text)
    return Judgment(
        claim_id=claim_id,
        mode=Mode.DNDSCORE,
        verdict=result,
        evidence=(reference,),
        prompt_digest=cache_key(req),
    )


EntailmentJudge = Callable[[str, str], bool]


def nli_judge(gateway: LlmGateway, model_id: str) -> EntailmentJudge:
    """Prompted Yes/No entailment judge backed by the gateway."""

    def judge(premise: str, hypothesis: str) -> bool:
        req = CompletionRequest(
            model_id=model_id,
            prompt=prompts.render_nli(premise, hypothesis),
            max_tokens=VERIFY_MAX_TOKENS,
        )
        result = parse_verdict(gateway.complete(req).text)
        return result.verdict is Verdict.SUPPORTED

    return judge


def decompscore(
    claim_set: ClaimSet,
    passage: Passage,
    judge: EntailmentJudge,
    premise_from_context: bool = False,
) -> tuple[Optional[Fraction], int]:
    """Fraction of claims entailed by their source sentence, plus claim count.

    The premise defaults to the original sentence even for decontextualized
    rows (the question is whether the added material is supported by the
    source). premise_from_context flips the decontext-then-decomp premise to
    the rewritten sentence.
    """
    if claim_set.passage_ref != passage.ref:
        raise InvalidInput("claim set does not belong to this passage")
    if not claim_set.items:
        return None, 0
    supported = 0
    for item in claim_set.items:
        premise = passage.sentences[item.source_sentence].text
        if (
            premise_from_context
            and claim_set.strategy is Strategy.DECONTEXT_THEN_DECOMP
            and claim_set.context_sentences is not None
        ):
            premise = claim_set.context_sentences[item.source_sentence]
        if judge(premise, atom_for(item)):
            supported += 1
    return Fraction(supported, len(claim_set.items)), len(claim_set.items)


def score_passage(
    judgments: Sequence[Judgment],
    passage_ref: str,
    strategy: Strategy,
    mode: Mode,
) -> PassageScore:
    """Tally verdicts; Unparseable counts in the total as not supported."""
    supported = sum(1 for j in judgments if j.verdict.verdict is Verdict.SUPPORTED)
    unparseable = sum(1 for j in judgments if j.verdict.verdict is Verdict.UNPARSEABLE)
    return PassageScore(
        passage_ref=passage_ref,
        strategy=strategy,
        mode=mode,
        supported=supported,
        total=len(judgments),
        unparseable=unparseable,
    )


def aggregate(
    passage_scores: Sequence[PassageScore],
    model_split: str,
    claim_counts: Optional[Sequence[int]] = None,
) -> SplitReport:
    """Macro-average passage scores; undefined passages are counted, not averaged."""
    if not passage_scores:
        raise InvalidInput("no passage scores to aggregate")
    strategies = {p.strategy for p in passage_scores}
    modes = {p.mode for p in passage_scores}
    if len(strategies) != 1 or len(modes) != 1:
        raise InvalidInput("passage scores must share strategy and mode")
    scored = [p.score for p in passage_scores if p.score is not None]
    avg_score = sum(scored, Fraction(0)) / len(scored) if scored else None
    if claim_counts is None:
        claim_counts = [p.total for p in passage_scores]
    avg_subclaims = (
        Fraction(sum(claim_counts), len(claim_counts)) if claim_counts else None
    )
    return SplitReport(
        model_split=model_split,
        strategy=next(iter(strategies)),
        mode=next(iter(modes)),
        avg_score=avg_score,
        avg_subclaims=avg_subclaims,
        passage_count=len(passage_scores),
        undefined_count=sum(1 for p in passage_scores if p.score is None),
        unparseable=sum(p.unparseable for p in passage_scores),
    )
