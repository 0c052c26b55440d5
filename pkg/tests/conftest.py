from __future__ import annotations

from pathlib import Path

import pytest

from tutor.config import RuntimeConfig, runtime_config_from_dict
from tutor.kb import ChunkingPolicy, ingest_materials
from tutor.provider import HashedTfEmbeddingProvider

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "tutor" / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def offline_provider() -> HashedTfEmbeddingProvider:
    return HashedTfEmbeddingProvider()


@pytest.fixture(scope="session")
def course_index(offline_provider):
    """The fixture corpus, ingested exactly as the shipped deployment does."""
    return ingest_materials(FIXTURES / "materials", offline_provider,
                            ChunkingPolicy(chunk_size=700, overlap=120))


@pytest.fixture(scope="session")
def fixture_runtime_config() -> RuntimeConfig:
    import json
    raw = json.loads((FIXTURES / "service_config.json").read_text())
    return runtime_config_from_dict(raw["runtime"])
