"""Single choke point for model calls: completion contract, cache, mock backend.

All network I/O in the pipeline happens here. Responses are cached on disk,
one file per request digest, so reruns are deterministic and resumable.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Protocol, Sequence

import requests

from .errors import BackendUnavailable, InvalidInput, MalformedResponse, MockMiss

logger = logging.getLogger(__name__)

API_KEY_ENV = "VERIFORGE_API_KEY"
API_URL_ENV = "VERIFORGE_API_URL"


@dataclass(frozen=True)
class CompletionRequest:
    model_id: str
    prompt: str
    max_tokens: int = 512
    temperature: float = 0.0
    stop_sequences: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.prompt:
            raise InvalidInput("prompt must be non-empty")
        if self.max_tokens <= 0:
            raise InvalidInput("max_tokens must be positive")
        if self.temperature < 0:
            raise InvalidInput("temperature must be non-negative")


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    cached: bool
    backend_id: str


def cache_key(req: CompletionRequest) -> str:
    """Deterministic 256-bit digest of the full request, as lowercase hex."""
    canonical = json.dumps(
        {
            "model_id": req.model_id,
            "prompt": req.prompt,
            "max_tokens": req.max_tokens,
            "temperature": req.temperature,
            "stop_sequences": list(req.stop_sequences),
        },
        sort_keys=True,
        ensure_ascii=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class Backend(Protocol):
    backend_id: str

    def generate(self, req: CompletionRequest) -> str: ...


@dataclass(frozen=True)
class MockRule:
    """Answers prompts matching a literal substring or a full-prompt hash."""

    response: str
    substring: Optional[str] = None
    prompt_sha256: Optional[str] = None

    def matches(self, prompt: str) -> bool:
        if self.substring is not None:
            return self.substring in prompt
        if self.prompt_sha256 is not None:
            digest = hashlib.sha256(prompt.encode("utf-8")).hexdigest()
            return digest == self.prompt_sha256
        return False


class MockBackend:
    """Deterministic scripted backend; first matching rule wins."""

    backend_id = "mock"

    def __init__(self, rules: Sequence[MockRule], default: Optional[str] = None):
        self.rules = list(rules)
        self.default = default

    def generate(self, req: CompletionRequest) -> str:
        for rule in self.rules:
            if rule.matches(req.prompt):
                return rule.response
        if self.default is not None:
            return self.default
        raise MockMiss(f"no mock rule matched prompt starting {req.prompt[:80]!r}")

    @classmethod
    def from_script(cls, script: dict) -> "MockBackend":
        """Build from a JSON-style script: {"rules": [...], "default": ...}."""
        rules = [
            MockRule(
                response=r["response"],
                substring=r.get("substring"),
                prompt_sha256=r.get("prompt_sha256"),
            )
            for r in script.get("rules", [])
        ]
        return cls(rules, default=script.get("default"))


def mock_script(
    rules: Iterable[tuple[str, str]], default: Optional[str] = None
) -> MockBackend:
    """Build a mock backend from (substring-matcher, response) pairs."""
    return MockBackend([MockRule(response=resp, substring=pat) for pat, resp in rules], default)


class HttpBackend:
    """POSTs raw-prompt completion requests to a configurable endpoint.

    The response JSON must contain generated text at `text_field_path`
    (dot-separated; integer segments index into lists).
    """

    backend_id = "http"

    def __init__(
        self,
        url: Optional[str] = None,
        api_key: Optional[str] = None,
        text_field_path: str = "text",
        timeout: float = 120.0,
    ):
        self.url = url or os.environ.get(API_URL_ENV, "")
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self.text_field_path = text_field_path
        self.timeout = timeout
        if not self.url:
            raise InvalidInput(f"no endpoint URL configured (set {API_URL_ENV})")

    def generate(self, req: CompletionRequest) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": req.model_id,
            "prompt": req.prompt,
            "max_tokens": req.max_tokens,
            "temperature": req.temperature,
            "stop": list(req.stop_sequences),
        }
        try:
            resp = requests.post(self.url, json=body, headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            payload = resp.json()
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise BackendUnavailable(str(exc)) from exc
        except requests.HTTPError as exc:
            if exc.response is not None and 500 <= exc.response.status_code < 600:
                raise BackendUnavailable(str(exc)) from exc
            raise MalformedResponse(str(exc)) from exc
        except ValueError as exc:
            raise MalformedResponse(f"non-JSON response: {exc}") from exc
        value = payload
        for segment in self.text_field_path.split("."):
            try:
                value = value[int(segment)] if segment.isdigit() else value[segment]
            except (KeyError, IndexError, TypeError):
                raise MalformedResponse(
                    f"response lacks text field at path {self.text_field_path!r}"
                ) from None
        if not isinstance(value, str):
            raise MalformedResponse("generated-text field is not a string")
        return value


@dataclass
class GatewayStats:
    hits: int = 0
    misses: int = 0

    @property
    def hit_rate(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 0.0


class LlmGateway:
    """Caching, retrying dispatcher in front of a completion backend."""

    def __init__(
        self,
        backend: Backend,
        cache_dir: str | Path,
        max_retries: int = 3,
        backoff_base: float = 0.5,
        parallelism: int = 4,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.backend = backend
        self.cache_dir = Path(cache_dir)
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.parallelism = max(1, parallelism)
        self.stats = GatewayStats()
        self._sleep = sleep
        self._lock = threading.Lock()
        self._key_locks: dict[str, threading.Lock] = {}

    def _paths(self, digest: str) -> tuple[Path, Path]:
        shard = self.cache_dir / digest[:2]
        return shard / f"{digest}.txt", shard / f"{digest}.meta"

    def _key_lock(self, digest: str) -> threading.Lock:
        with self._lock:
            return self._key_locks.setdefault(digest, threading.Lock())

    def _read_cache(self, digest: str) -> Optional[str]:
        text_path, _ = self._paths(digest)
        if text_path.exists():
            return text_path.read_text(encoding="utf-8")
        return None

    def _write_cache(self, digest: str, req: CompletionRequest, text: str) -> None:
        text_path, meta_path = self._paths(digest)
        text_path.parent.mkdir(parents=True, exist_ok=True)
        for path, content in (
            (text_path, text),
            (meta_path, json.dumps({
                "model_id": req.model_id,
                "backend_id": self.backend.backend_id,
                "max_tokens": req.max_tokens,
                "temperature": req.temperature,
                "created": time.time(),
            }, sort_keys=True)),
        ):
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(content)
            os.replace(tmp, path)

    def _call_backend(self, req: CompletionRequest) -> str:
        attempt = 0
        while True:
            try:
                return self.backend.generate(req)
            except BackendUnavailable:
                if attempt >= self.max_retries:
                    raise
                delay = self.backoff_base * (2 ** attempt)
                logger.warning("backend unavailable, retry %d in %.1fs", attempt + 1, delay)
                self._sleep(delay)
                attempt += 1

    def complete(self, req: CompletionRequest, bypass_cache: bool = False) -> CompletionResponse:
        """Return the cached response for req, or call the backend and persist it.

        bypass_cache forces a fresh backend call whose result overwrites the
        cached entry (used for one-shot retries on parse failures).
        """
        digest = cache_key(req)
        with self._key_lock(digest):
            if not bypass_cache:
                cached = self._read_cache(digest)
                if cached is not None:
                    with self._lock:
                        self.stats.hits += 1
                    return CompletionResponse(text=cached, cached=True, backend_id=self.backend.backend_id)
            with self._lock:
                self.stats.misses += 1
            text = self._call_backend(req)
            self._write_cache(digest, req, text)
            return CompletionResponse(text=text, cached=False, backend_id=self.backend.backend_id)

    def complete_many(self, reqs: Sequence[CompletionRequest]) -> list[CompletionResponse]:
        """Dispatch requests with bounded parallelism, joined in request order."""
        if not reqs:
            return []
        with ThreadPoolExecutor(max_workers=self.parallelism) as pool:
            return list(pool.map(self.complete, reqs))
