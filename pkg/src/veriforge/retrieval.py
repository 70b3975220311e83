"""Reference corpus ingestion and per-topic BM25 evidence retrieval."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .errors import DuplicateTopic, InvalidInput, UnknownTopic

DEFAULT_WINDOW = 256
DEFAULT_OVERLAP = 32
BM25_K1 = 1.2
BM25_B = 0.75

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumerics. No stemming, no stop words."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class CorpusDoc:
    topic: str
    title: str
    text: str

    def __post_init__(self) -> None:
        if not self.text:
            raise InvalidInput("corpus document text must be non-empty")


@dataclass(frozen=True)
class Chunk:
    doc_topic: str
    title: str
    text: str
    ordinal: int


@dataclass
class _TopicIndex:
    """Inverted BM25 structures over one document's chunks."""

    chunks: list[Chunk]
    postings: dict[str, list[tuple[int, int]]]  # term -> [(ordinal, tf)]
    chunk_lengths: list[int]
    avg_length: float

    @property
    def doc_freq(self) -> dict[str, int]:
        return {term: len(plist) for term, plist in self.postings.items()}


def chunk_doc(doc: CorpusDoc, window: int = DEFAULT_WINDOW, overlap: int = DEFAULT_OVERLAP) -> list[Chunk]:
    """Sliding word windows of `window` words advancing by window - overlap."""
    if window <= overlap:
        raise InvalidInput("window must exceed overlap")
    words = doc.text.split()
    chunks: list[Chunk] = []
    start = 0
    ordinal = 0
    while True:
        piece = words[start : start + window]
        chunks.append(Chunk(doc.topic, doc.title, " ".join(piece), ordinal))
        if start + window >= len(words):
            break
        start += window - overlap
        ordinal += 1
    return chunks


def _build_topic_index(chunks: list[Chunk]) -> _TopicIndex:
    postings: dict[str, list[tuple[int, int]]] = {}
    lengths: list[int] = []
    for chunk in chunks:
        terms = tokenize(chunk.text)
        lengths.append(len(terms))
        counts: dict[str, int] = {}
        for term in terms:
            counts[term] = counts.get(term, 0) + 1
        for term, tf in counts.items():
            postings.setdefault(term, []).append((chunk.ordinal, tf))
    avg = sum(lengths) / len(lengths) if lengths else 0.0
    return _TopicIndex(chunks=chunks, postings=postings, chunk_lengths=lengths, avg_length=avg)


class Bm25Index:
    """Per-topic BM25 index: each topic is searched only within its own document."""

    def __init__(self, window: int = DEFAULT_WINDOW, overlap: int = DEFAULT_OVERLAP):
        self.window = window
        self.overlap = overlap
        self._topics: dict[str, _TopicIndex] = {}

    @property
    def topics(self) -> list[str]:
        return list(self._topics)

    def add(self, doc: CorpusDoc) -> None:
        if doc.topic in self._topics:
            raise DuplicateTopic(doc.topic)
        self._topics[doc.topic] = _build_topic_index(chunk_doc(doc, self.window, self.overlap))

    def chunks(self, topic: str) -> list[Chunk]:
        return list(self._topic(topic).chunks)

    def _topic(self, topic: str) -> _TopicIndex:
        try:
            return self._topics[topic]
        except KeyError:
            raise UnknownTopic(topic) from None

    def score(self, topic: str, query: str, k1: float = BM25_K1, b: float = BM25_B) -> list[float]:
        """BM25 score of every chunk of the topic against the query, by ordinal."""
        tix = self._topic(topic)
        n_chunks = len(tix.chunks)
        scores = [0.0] * n_chunks
        for term in tokenize(query):
            plist = tix.postings.get(term)
            if not plist:
                continue
            df = len(plist)
            idf = math.log((n_chunks - df + 0.5) / (df + 0.5) + 1.0)
            for ordinal, tf in plist:
                norm = k1 * (1.0 - b + b * tix.chunk_lengths[ordinal] / tix.avg_length)
                scores[ordinal] += idf * tf * (k1 + 1.0) / (tf + norm)
        return scores

    def retrieve(self, topic: str, query: str, k: int) -> list[Chunk]:
        """Top-k chunks by BM25, ties broken by lower ordinal."""
        if k <= 0:
            raise InvalidInput("k must be positive")
        tix = self._topic(topic)
        scores = self.score(topic, query)
        order = sorted(range(len(scores)), key=lambda o: (-scores[o], o))
        return [tix.chunks[o] for o in order[:k]]

    def full_reference(
        self, topic: str, budget: int, query: Optional[str] = None
    ) -> str:
        """Reference text for the topic truncated to `budget` words.

        Without a query, chunks concatenate in ordinal order. With a query,
        the top-ranked chunks are concatenated (in rank order) instead.
        """
        tix = self._topic(topic)
        if budget <= 0:
            return ""
        if query is None:
            ordered = tix.chunks
        else:
            ordered = self.retrieve(topic, query, k=len(tix.chunks))
        words: list[str] = []
        for chunk in ordered:
            remaining = budget - len(words)
            if remaining <= 0:
                break
            words.extend(chunk.text.split()[:remaining])
        return " ".join(words)


def ingest(
    records: Iterable[CorpusDoc],
    window: int = DEFAULT_WINDOW,
    overlap: int = DEFAULT_OVERLAP,
) -> Bm25Index:
    """Build a per-topic BM25 index over chunked corpus documents."""
    index = Bm25Index(window=window, overlap=overlap)
    for doc in records:
        index.add(doc)
    return index


def load_corpus(path: str | Path) -> list[CorpusDoc]:
    """Read a JSON-lines corpus with fields topic, title, text."""
    docs: list[CorpusDoc] = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            docs.append(CorpusDoc(topic=record["topic"], title=record["title"], text=record["text"]))
    return docs
