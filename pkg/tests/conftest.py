"""Shared fixtures for the test suite."""

import pytest

from recallbench.embedders import HashTrigramEmbedder
from recallbench.memory import StorageConfig
from recallbench.store import MemoryStore


@pytest.fixture
def embedder():
    return HashTrigramEmbedder(dim=256)


@pytest.fixture
def make_store(embedder):
    """Factory for in-memory stores with optional config/grants overrides."""

    def _make(config=None, grants=None, log=None):
        return MemoryStore(
            config=config or StorageConfig(),
            embedder=embedder,
            grants=grants,
            log=log,
        )

    return _make
