"""The five claim-production strategies, composing prompts, gateway and parsers."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import prompts
from .claims import ClaimItem, ClaimSet, Passage, Strategy
from .errors import InvalidInput, ParseError
from .gateway import CompletionRequest, LlmGateway
from .parsing import parse_ambiguities, parse_bullets, parse_dnd

logger = logging.getLogger(__name__)

DND_MAX_TOKENS = 2048
DEFAULT_MAX_TOKENS = 512
IDENTITY_FALLBACK_FLAG = "identity_fallback"


@dataclass(frozen=True)
class PipelineConfig:
    decomp_model_id: str = "decomp-model"
    decontext_model_id: str = "decontext-model"
    dnd_model_id: str = "dnd-model"
    retry_on_parse_error: bool = True

    def __post_init__(self) -> None:
        if not (self.decomp_model_id and self.decontext_model_id and self.dnd_model_id):
            raise InvalidInput("model ids must be non-empty")


def _require_sentences(passage: Passage) -> None:
    if not passage.sentences:
        raise InvalidInput("passage has no sentences")


def _item_id(passage: Passage, strategy: Strategy, sentence_idx: int, j: int) -> str:
    return f"{passage.ref}:{strategy.value}:{sentence_idx}:{j}"


def _decompose_sentences(
    passage: Passage,
    texts: Sequence[str],
    gateway: LlmGateway,
    config: PipelineConfig,
) -> list[list[str]]:
    """Decompose each text into bullet subclaims, one model call per sentence."""
    exemplars = prompts.default_decomp_exemplars()
    reqs = [
        CompletionRequest(
            model_id=config.decomp_model_id,
            prompt=prompts.render_decomp(text, exemplars),
            max_tokens=DEFAULT_MAX_TOKENS,
        )
        for text in texts
    ]
    responses = gateway.complete_many(reqs)
    per_sentence: list[list[str]] = []
    for sentence_idx, resp in enumerate(responses):
        claims = parse_bullets(resp.text)
        if not claims:
            logger.warning(
                "decomposition of %s sentence %d yielded no claims",
                passage.ref,
                sentence_idx,
            )
        per_sentence.append(claims)
    return per_sentence


def _decontextualize(
    text: str, paragraph: str, gateway: LlmGateway, config: PipelineConfig
) -> tuple[str, bool]:
    """Two-step rewrite of text to stand alone; falls back to identity on failure.

    Returns (decontextualized text, fallback flag).
    """
    amb_req = CompletionRequest(
        model_id=config.decontext_model_id,
        prompt=prompts.render_ambiguity(text, paragraph),
        max_tokens=DEFAULT_MAX_TOKENS,
    )
    ambiguities = parse_ambiguities(gateway.complete(amb_req).text)
    dec_req = CompletionRequest(
        model_id=config.decontext_model_id,
        prompt=prompts.render_decontext(text, paragraph, ambiguities),
        max_tokens=DEFAULT_MAX_TOKENS,
    )
    rewritten = gateway.complete(dec_req).text.strip()
    if not rewritten:
        return text, True
    return rewritten, False


def run_decomp_only(
    passage: Passage, gateway: LlmGateway, config: PipelineConfig
) -> ClaimSet:
    """Decompose every sentence into atomic subclaims; no decontextualization."""
    _require_sentences(passage)
    strategy = Strategy.DECOMP_ONLY
    per_sentence = _decompose_sentences(
        passage, [s.text for s in passage.sentences], gateway, config
    )
    items = tuple(
        ClaimItem(
            id=_item_id(passage, strategy, sentence_idx, j),
            subclaim=claim,
            decontextualized=None,
            source_sentence=sentence_idx,
            strategy=strategy,
        )
        for sentence_idx, claims in enumerate(per_sentence)
        for j, claim in enumerate(claims)
    )
    return ClaimSet(passage_ref=passage.ref, strategy=strategy, items=items)


def run_decomp_then_decontext(
    passage: Passage, gateway: LlmGateway, config: PipelineConfig
) -> ClaimSet:
    """Decompose, then decontextualize each subclaim; item count is unchanged."""
    _require_sentences(passage)
    base = run_decomp_only(passage, gateway, config)
    strategy = Strategy.DECOMP_THEN_DECONTEXT
    items = []
    for item in base.items:
        decontext, fell_back = _decontextualize(
            item.subclaim, passage.text, gateway, config
        )
        if fell_back:
            logger.warning("identity fallback for claim %s", item.id)
        items.append(
            ClaimItem(
                id=item.id.replace(Strategy.DECOMP_ONLY.value, strategy.value, 1),
                subclaim=item.subclaim,
                decontextualized=decontext,
                source_sentence=item.source_sentence,
                strategy=strategy,
                flags=(IDENTITY_FALLBACK_FLAG,) if fell_back else (),
            )
        )
    return ClaimSet(passage_ref=passage.ref, strategy=strategy, items=tuple(items))


def run_decontext_then_decomp(
    passage: Passage, gateway: LlmGateway, config: PipelineConfig
) -> ClaimSet:
    """Decontextualize each sentence, then decompose the rewritten sentence."""
    _require_sentences(passage)
    strategy = Strategy.DECONTEXT_THEN_DECOMP
    context_sentences: dict[int, str] = {}
    for sentence in passage.sentences:
        rewritten, fell_back = _decontextualize(
            sentence.text, passage.text, gateway, config
        )
        if fell_back:
            logger.warning(
                "identity fallback for %s sentence %d", passage.ref, sentence.index
            )
        context_sentences[sentence.index] = rewritten
    per_sentence = _decompose_sentences(
        passage,
        [context_sentences[s.index] for s in passage.sentences],
        gateway,
        config,
    )
    items = tuple(
        ClaimItem(
            id=_item_id(passage, strategy, sentence_idx, j),
            subclaim=claim,
            decontextualized=None,
            source_sentence=sentence_idx,
            strategy=strategy,
        )
        for sentence_idx, claims in enumerate(per_sentence)
        for j, claim in enumerate(claims)
    )
    return ClaimSet(
        passage_ref=passage.ref,
        strategy=strategy,
        items=items,
        context_sentences=context_sentences,
    )


def run_dnd(
    passage: Passage, gateway: LlmGateway, config: PipelineConfig
) -> tuple[ClaimSet, ClaimSet]:
    """Joint decomposition and decontextualization, one model call per sentence.

    Returns index-aligned (subclaim set, decontextualized set). A sentence
    whose output cannot be parsed is retried once bypassing the cache, then
    skipped with a warning.
    """
    _require_sentences(passage)
    sub_items: list[ClaimItem] = []
    dec_items: list[ClaimItem] = []
    skipped: list[int] = []
    reqs = [
        CompletionRequest(
            model_id=config.dnd_model_id,
            prompt=prompts.render_dnd(passage.text, sentence.text),
            max_tokens=DND_MAX_TOKENS,
        )
        for sentence in passage.sentences
    ]
    responses = gateway.complete_many(reqs)
    for sentence, req, resp in zip(passage.sentences, reqs, responses):
        try:
            output = parse_dnd(resp.text)
        except ParseError:
            if not config.retry_on_parse_error:
                skipped.append(sentence.index)
                logger.warning("skipping %s sentence %d: unparseable joint output", passage.ref, sentence.index)
                continue
            try:
                output = parse_dnd(gateway.complete(req, bypass_cache=True).text)
            except ParseError:
                skipped.append(sentence.index)
                logger.warning("skipping %s sentence %d: unparseable joint output after retry", passage.ref, sentence.index)
                continue
        for j, (sub, dec, fell_back) in enumerate(output.aligned_pairs()):
            flags = (IDENTITY_FALLBACK_FLAG,) if fell_back else ()
            sub_items.append(
                ClaimItem(
                    id=_item_id(passage, Strategy.DND_SUBCLAIM, sentence.index, j),
                    subclaim=sub,
                    decontextualized=dec,
                    source_sentence=sentence.index,
                    strategy=Strategy.DND_SUBCLAIM,
                    flags=flags,
                )
            )
            dec_items.append(
                ClaimItem(
                    id=_item_id(passage, Strategy.DND_DECONTEXT, sentence.index, j),
                    subclaim=sub,
                    decontextualized=dec,
                    source_sentence=sentence.index,
                    strategy=Strategy.DND_DECONTEXT,
                    flags=flags,
                )
            )
    return (
        ClaimSet(
            passage_ref=passage.ref,
            strategy=Strategy.DND_SUBCLAIM,
            items=tuple(sub_items),
            skipped_sentences=tuple(skipped),
        ),
        ClaimSet(
            passage_ref=passage.ref,
            strategy=Strategy.DND_DECONTEXT,
            items=tuple(dec_items),
            skipped_sentences=tuple(skipped),
        ),
    )
