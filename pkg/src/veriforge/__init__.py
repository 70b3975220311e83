"""veriforge: decompose, decontextualize, and verify LLM generations
against a reference corpus."""

from .claims import ClaimItem, ClaimSet, Passage, Sentence, Strategy, make_passage, segment_sentences
from .gateway import CompletionRequest, CompletionResponse, LlmGateway, MockBackend, cache_key, mock_script
from .parsing import DnDOutput, Verdict, parse_ambiguities, parse_bullets, parse_dnd, parse_verdict
from .retrieval import Bm25Index, Chunk, CorpusDoc, ingest
from .scoring import Judgment, Mode, PassageScore, SplitReport

__version__ = "0.1.0"

__all__ = [
    "ClaimItem",
    "ClaimSet",
    "Passage",
    "Sentence",
    "Strategy",
    "make_passage",
    "segment_sentences",
    "CompletionRequest",
    "CompletionResponse",
    "LlmGateway",
    "MockBackend",
    "cache_key",
    "mock_script",
    "DnDOutput",
    "Verdict",
    "parse_ambiguities",
    "parse_bullets",
    "parse_dnd",
    "parse_verdict",
    "Bm25Index",
    "Chunk",
    "CorpusDoc",
    "ingest",
    "Judgment",
    "Mode",
    "PassageScore",
    "SplitReport",
    "__version__",
]
