import json
from pathlib import Path

import pytest
import yaml

from veriforge.gateway import LlmGateway, MockBackend

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def mock_gateway(tmp_path):
    """Gateway over the shared fixture mock script, caching under tmp_path."""
    script = json.loads(fixture_text("mock_script.json"))
    return LlmGateway(MockBackend.from_script(script), tmp_path / "cache")


def make_gateway(tmp_path, rules, default=None, **kwargs) -> LlmGateway:
    """Gateway over an inline (substring, response) rule list."""
    backend = MockBackend.from_script(
        {"rules": [{"substring": s, "response": r} for s, r in rules], "default": default}
    )
    return LlmGateway(backend, tmp_path / "cache", **kwargs)


@pytest.fixture
def run_config_path(tmp_path) -> Path:
    """A complete run configuration over the 3-passage fixture data."""
    config = {
        "corpus": str(FIXTURES / "corpus.jsonl"),
        "generations": str(FIXTURES / "generations.jsonl"),
        "mock_script": str(FIXTURES / "mock_script.json"),
        "backend": "mock",
        "cache_dir": str(tmp_path / "cache"),
        "output_dir": str(tmp_path / "out"),
        "dedup": True,
    }
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(config), encoding="utf-8")
    return path
