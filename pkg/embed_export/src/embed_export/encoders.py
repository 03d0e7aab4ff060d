"""Sentence encoders behind one tiny interface: name, dim, encode(text).

Two backends:

* ``st:<model>`` wraps a sentence-transformers model; it needs the optional
  dependency and locally available weights, so it is imported lazily.
* ``hashproj:<dim>`` is a deterministic stand-in: each whitespace token maps
  to a Gaussian vector seeded from a stable hash of the token, and a text is
  the normalized sum of its token vectors. It needs no weights and produces
  identical vectors on every machine, which keeps export tests and fixture
  pipelines reproducible.

Every backend returns unit-normalized float64 vectors.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _normalize(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        return vec
    return vec / norm


def _token_seed(token: str) -> int:
    return int.from_bytes(hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(), "big")


class HashProjectionEncoder:
    """Deterministic pseudo-encoder: seeded Gaussian projection per token."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError(f"encoder dim must be >= 1, got {dim}")
        self.dim = dim
        self.name = f"hashproj:{dim}"
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        cached = self._token_cache.get(token)
        if cached is None:
            rng = np.random.default_rng(_token_seed(token))
            cached = rng.standard_normal(self.dim)
            self._token_cache[token] = cached
        return cached

    def encode(self, text: str) -> np.ndarray:
        total = np.zeros(self.dim)
        for token in text.lower().split():
            total += self._token_vector(token)
        return _normalize(total)

    def encode_batch(self, texts: list) -> list:
        return [self.encode(text) for text in texts]


class SentenceTransformerEncoder:
    """Thin adapter over a locally available sentence-transformers model."""

    def __init__(self, model_name: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise RuntimeError(
                "the st: backend needs the sentence-transformers package "
                "(pip install embed-export[st])"
            ) from exc
        self._model = SentenceTransformer(model_name)
        self.dim = int(self._model.get_sentence_embedding_dimension())
        self.name = f"st:{model_name}"

    def encode(self, text: str) -> np.ndarray:
        return self.encode_batch([text])[0]

    def encode_batch(self, texts: list) -> list:
        raw = self._model.encode(list(texts), convert_to_numpy=True)
        return [_normalize(np.asarray(row, dtype=np.float64)) for row in raw]


def resolve_encoder(spec: str):
    """Map an encoder spec string to a ready encoder instance."""
    if spec.startswith("hashproj:"):
        try:
            dim = int(spec.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad hashproj dim in encoder spec {spec!r}") from None
        return HashProjectionEncoder(dim)
    if spec.startswith("st:"):
        model = spec.split(":", 1)[1]
        if not model:
            raise ValueError("st: encoder spec needs a model name")
        return SentenceTransformerEncoder(model)
    raise ValueError(
        f"unknown encoder spec {spec!r}; expected st:<model> or hashproj:<dim>"
    )
