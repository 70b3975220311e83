import hashlib
import json
from pathlib import Path

import pytest

from veriforge.errors import BackendUnavailable, InvalidInput, MockMiss
from veriforge.gateway import (
    CompletionRequest,
    HttpBackend,
    LlmGateway,
    MockBackend,
    cache_key,
    mock_script,
)

FIXTURES = Path(__file__).parent / "fixtures"


def req(prompt="Hello", **kwargs) -> CompletionRequest:
    return CompletionRequest(model_id="m", prompt=prompt, **kwargs)


class TestCacheKey:
    def test_identical_requests_identical_digests(self):
        assert cache_key(req()) == cache_key(req())

    def test_temperature_changes_digest(self):
        assert cache_key(req()) != cache_key(req(temperature=0.5))

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"prompt": "Other"},
            {"max_tokens": 99},
            {"stop_sequences": ("\n",)},
        ],
    )
    def test_any_field_changes_digest(self, kwargs):
        assert cache_key(req()) != cache_key(req(**{**{"prompt": "Hello"}, **kwargs}))

    def test_digest_stable_across_processes(self):
        # Oracle: canonical JSON serialization hashed with sha256, frozen in a
        # golden file so regressions across releases are caught.
        request = CompletionRequest(
            model_id="verify-model",
            prompt="Input: Ada Lovelace was a mathematician. True or False?\nOutput:",
            max_tokens=32,
            temperature=0.0,
            stop_sequences=(),
        )
        canonical = json.dumps(
            {
                "model_id": "verify-model",
                "prompt": "Input: Ada Lovelace was a mathematician. True or False?\nOutput:",
                "max_tokens": 32,
                "temperature": 0.0,
                "stop_sequences": [],
            },
            sort_keys=True,
            ensure_ascii=True,
            separators=(",", ":"),
        )
        expected = hashlib.sha256(canonical.encode("utf-8")).hexdigest()
        golden = (FIXTURES / "golden_digest.txt").read_text(encoding="utf-8").strip()
        assert cache_key(request) == expected == golden


class TestMockBackend:
    def test_scripted_rule(self):
        backend = mock_script([("True or False?", "True")])
        assert backend.generate(req("Is this True or False? ...")) == "True"

    def test_default_used_when_no_rule_matches(self):
        backend = mock_script([], default="False")
        assert backend.generate(req("anything")) == "False"

    def test_mock_miss(self):
        backend = mock_script([("nope", "x")])
        with pytest.raises(MockMiss):
            backend.generate(req("anything"))

    def test_first_matching_rule_wins(self):
        backend = mock_script([("abc", "first"), ("abc", "second")])
        assert backend.generate(req("xx abc yy")) == "first"

    def test_full_prompt_hash_rule(self):
        digest = hashlib.sha256(b"exact prompt").hexdigest()
        backend = MockBackend.from_script(
            {"rules": [{"prompt_sha256": digest, "response": "hit"}], "default": "miss"}
        )
        assert backend.generate(req("exact prompt")) == "hit"
        assert backend.generate(req("exact prompt!")) == "miss"


class TestGateway:
    def test_second_call_is_cached(self, tmp_path):
        gw = LlmGateway(mock_script([], default="out"), tmp_path)
        first = gw.complete(req())
        second = gw.complete(req())
        assert first.cached is False
        assert second.cached is True
        assert first.text == second.text == "out"

    def test_cache_round_trip_byte_identical(self, tmp_path):
        text = "line one\n  spaced\ttabbed\nüñïçødé"
        gw = LlmGateway(mock_script([], default=text), tmp_path)
        assert gw.complete(req()).text == gw.complete(req()).text == text

    def test_cache_survives_new_gateway_instance(self, tmp_path):
        LlmGateway(mock_script([], default="persisted"), tmp_path).complete(req())
        fresh = LlmGateway(mock_script([], default="other"), tmp_path)
        assert fresh.complete(req()).text == "persisted"
        assert fresh.stats.hits == 1

    def test_cache_file_layout(self, tmp_path):
        gw = LlmGateway(mock_script([], default="x"), tmp_path)
        gw.complete(req())
        digest = cache_key(req())
        assert (tmp_path / digest[:2] / f"{digest}.txt").exists()
        assert (tmp_path / digest[:2] / f"{digest}.meta").exists()

    def test_bypass_cache_overwrites(self, tmp_path):
        backend = mock_script([], default="first")
        gw = LlmGateway(backend, tmp_path)
        gw.complete(req())
        backend.default = "second"
        assert gw.complete(req(), bypass_cache=True).text == "second"
        assert gw.complete(req()).text == "second"

    def test_backend_unavailable_after_retries(self, tmp_path):
        backend = HttpBackend(url="http://127.0.0.1:1/v1/complete", api_key="k")
        gw = LlmGateway(backend, tmp_path, max_retries=0)
        with pytest.raises(BackendUnavailable):
            gw.complete(req())

    def test_retry_then_success(self, tmp_path):
        class Flaky:
            backend_id = "flaky"

            def __init__(self):
                self.calls = 0

            def generate(self, request):
                self.calls += 1
                if self.calls == 1:
                    raise BackendUnavailable("boom")
                return "recovered"

        delays = []
        gw = LlmGateway(Flaky(), tmp_path, max_retries=2, sleep=delays.append)
        assert gw.complete(req()).text == "recovered"
        assert delays == [0.5]

    def test_complete_many_preserves_order(self, tmp_path):
        backend = mock_script([("one", "1"), ("two", "2"), ("three", "3")])
        gw = LlmGateway(backend, tmp_path, parallelism=3)
        responses = gw.complete_many([req("three"), req("one"), req("two")])
        assert [r.text for r in responses] == ["3", "1", "2"]

    def test_http_backend_requires_url(self, monkeypatch):
        monkeypatch.delenv("VERIFORGE_API_URL", raising=False)
        with pytest.raises(InvalidInput):
            HttpBackend()

    def test_invalid_request_rejected(self):
        with pytest.raises(InvalidInput):
            CompletionRequest(model_id="m", prompt="")
        with pytest.raises(InvalidInput):
            CompletionRequest(model_id="m", prompt="p", max_tokens=0)
        with pytest.raises(InvalidInput):
            CompletionRequest(model_id="m", prompt="p", temperature=-1.0)
