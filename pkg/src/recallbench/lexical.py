"""Tokenizer, inverted index, BM25 scoring, and candidate-set services.

BM25 notes pinned here because downstream numbers depend on them:

* idf = ln(1 + (N - df + 0.5) / (df + 0.5)) — non-negative for every df,
  including terms present in all documents.
* k1 = 1.2, b = 0.75 defaults.
* Repeated query terms contribute once per occurrence (weight = term count);
  the weighted entry point generalizes this to arbitrary per-term weights.
* When a scope (set of agent ids) is given, document frequency, N, and avgdl
  are computed over the scoped corpus only — documents outside the scope do
  not influence any statistic.
* Score ties are broken by a seeded uniform shuffle keyed on
  (tie_seed, query_key, doc_id), so tie order is reproducible but uniform.

The stopword list is used only by entity mining and RM3; the index itself
stores every token.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .embedders import fnv1a64

# Fixed 30-word English stopword list (entity mining + RM3 only).
STOPWORDS = frozenset(
    """a an and are as at be but by for from has have in is it of on or that
    the to was were what when which who will with""".split()
)

MIN_ENTITY_LEN = 3


def tokenize(text: str) -> list[str]:
    """Lowercase, split on any non-alphanumeric run, drop empties."""
    tokens: list[str] = []
    current: list[str] = []
    for ch in text.lower():
        if ch.isalnum():
            current.append(ch)
        elif current:
            tokens.append("".join(current))
            current = []
    if current:
        tokens.append("".join(current))
    return tokens


def extract_entities(text: str) -> set[str]:
    """Candidate entities: non-stopword alphanumeric tokens of length >= 3."""
    return {t for t in tokenize(text) if len(t) >= MIN_ENTITY_LEN and t not in STOPWORDS}


_MASK64 = (1 << 64) - 1


def _mix64(x: int) -> int:
    """splitmix64 finalizer: uniform 64-bit mixing of a combined hash."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


@lru_cache(maxsize=1 << 17)
def _id_hash(doc_id: str) -> int:
    return fnv1a64(doc_id.encode("utf-8"))


@lru_cache(maxsize=1 << 15)
def _query_base(seed: int, query_key: str) -> int:
    return fnv1a64(f"{seed}|{query_key}".encode("utf-8"))


def tie_key(seed: int, query_key: str, doc_id: str) -> int:
    """Stable 64-bit tie-break key; uniform across doc ids for fixed (seed, query)."""
    return _mix64(_query_base(seed, query_key) ^ _id_hash(doc_id))


def tie_keys_array(seed: int, query_key: str, id_hashes: np.ndarray) -> np.ndarray:
    """Vectorized tie_key over precomputed per-id FNV hashes (uint64)."""
    base = np.uint64(_query_base(seed, query_key))
    with np.errstate(over="ignore"):
        x = (id_hashes ^ base) + np.uint64(0x9E3779B97F4A7C15)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.k1 < 0:
            raise ValueError(f"k1 must be >= 0, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must be in [0,1], got {self.b}")


@dataclass(frozen=True)
class _Doc:
    tf: dict
    length: int
    agent_id: str
    id_hash: int


class InvertedIndex:
    """In-process inverted index over active documents.

    Built during ingest, mutated only through add/remove; searches are
    read-only and safe to run concurrently once ingest is done.
    """

    def __init__(self):
        self._docs: dict[str, _Doc] = {}
        self._postings: dict[str, dict[str, int]] = {}

    def __len__(self) -> int:
        return len(self._docs)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._docs

    def add(self, doc_id: str, text: str, agent_id: str = "") -> None:
        if doc_id in self._docs:
            raise ValueError(f"doc id already indexed: {doc_id}")
        tokens = tokenize(text)
        tf = dict(Counter(tokens))
        self._docs[doc_id] = _Doc(
            tf=tf, length=len(tokens), agent_id=agent_id, id_hash=_id_hash(doc_id)
        )
        for term, count in tf.items():
            self._postings.setdefault(term, {})[doc_id] = count

    def remove(self, doc_id: str) -> None:
        doc = self._docs.pop(doc_id, None)
        if doc is None:
            return
        for term in doc.tf:
            postings = self._postings.get(term)
            if postings is not None:
                postings.pop(doc_id, None)
                if not postings:
                    del self._postings[term]

    def posting_list(self, term: str) -> list[tuple[str, int]]:
        return sorted(self._postings.get(term, {}).items())

    def _in_scope(self, doc_id: str, scope: set[str] | None) -> bool:
        return scope is None or self._docs[doc_id].agent_id in scope

    def scoped_ids(self, scope: set[str] | None) -> list[str]:
        return [d for d in self._docs if self._in_scope(d, scope)]

    def scoped_stats(self, scope: set[str] | None) -> tuple[int, float]:
        """(N, avgdl) over the scoped corpus."""
        if scope is None:
            n = len(self._docs)
            total = sum(d.length for d in self._docs.values())
        else:
            n = 0
            total = 0
            for d in self._docs.values():
                if d.agent_id in scope:
                    n += 1
                    total += d.length
        return n, (total / n if n else 0.0)

    def document_frequency(self, term: str, scope: set[str] | None = None) -> int:
        postings = self._postings.get(term, {})
        if scope is None:
            return len(postings)
        return sum(1 for doc_id in postings if self._docs[doc_id].agent_id in scope)

    def doc_length(self, doc_id: str) -> int:
        return self._docs[doc_id].length

    def term_frequencies(self, doc_id: str) -> dict:
        return self._docs[doc_id].tf


def bm25_search_weighted(
    index: InvertedIndex,
    weights: dict,
    limit: int,
    scope: set[str] | None = None,
    params: Bm25Params = Bm25Params(),
    tie_seed: int = 0,
    query_key: str = "",
) -> list[tuple[str, float, int]]:
    """BM25 with per-term weights; returns (doc_id, raw_score, rank) rows.

    rank is contiguous 0..m-1 over the returned candidates after scope
    filtering and tie shuffling.
    """
    if limit < 1:
        raise ValueError(f"limit must be >= 1, got {limit}")
    active = {t: w for t, w in weights.items() if w != 0.0}
    if not active:
        return []
    n_docs, avgdl = index.scoped_stats(scope)
    if n_docs == 0:
        return []
    scores: dict[str, float] = {}
    for term, weight in active.items():
        postings = index._postings.get(term)
        if not postings:
            continue
        scoped_postings = [
            (doc_id, tf) for doc_id, tf in postings.items() if index._in_scope(doc_id, scope)
        ]
        if not scoped_postings:
            continue
        df = len(scoped_postings)
        idf = math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))
        for doc_id, tf in scoped_postings:
            dl = index._docs[doc_id].length
            sat = (tf * (params.k1 + 1.0)) / (tf + params.k1 * (1.0 - params.b + params.b * dl / avgdl))
            scores[doc_id] = scores.get(doc_id, 0.0) + weight * idf * sat
    if not scores:
        return []
    doc_ids = list(scores)
    values = np.fromiter((scores[d] for d in doc_ids), dtype=np.float64, count=len(doc_ids))
    hashes = np.fromiter(
        (index._docs[d].id_hash for d in doc_ids), dtype=np.uint64, count=len(doc_ids)
    )
    keys = tie_keys_array(tie_seed, query_key, hashes)
    order = np.lexsort((keys, -values))[:limit]
    return [(doc_ids[pos], float(values[pos]), rank) for rank, pos in enumerate(order)]


def bm25_search(
    index: InvertedIndex,
    query_tokens: list[str],
    limit: int,
    scope: set[str] | None = None,
    params: Bm25Params = Bm25Params(),
    tie_seed: int = 0,
    query_key: str = "",
) -> list[tuple[str, float, int]]:
    """Standard BM25 over the scoped corpus; empty query -> empty result."""
    weights = {term: float(count) for term, count in Counter(query_tokens).items()}
    if not weights:
        return []
    return bm25_search_weighted(index, weights, limit, scope, params, tie_seed, query_key)


def minmax_normalize(scores: list[float]) -> list[float]:
    """(s - min) / (max - min); every value 1.0 when max == min."""
    if not scores:
        raise ValueError("cannot normalize an empty score list")
    lo = min(scores)
    hi = max(scores)
    if hi == lo:
        return [1.0] * len(scores)
    span = hi - lo
    return [(s - lo) / span for s in scores]


def corpus_rarity(index: InvertedIndex, entity: str, scope: set[str] | None = None) -> float:
    """1 - df/N over the scoped corpus; degenerate lookups resolve to 0.0.

    Rarity 0 is the lenient failure value: a downstream rarity gate then
    filters the candidate instead of erroring.
    """
    tokens = tokenize(entity)
    if len(tokens) != 1:
        return 0.0
    n_docs, _ = index.scoped_stats(scope)
    if n_docs == 0:
        return 0.0
    df = index.document_frequency(tokens[0], scope)
    return 1.0 - df / n_docs
