"""Relevance-model (RM3) query expansion over the BM25 channel.

First pass: BM25 over the current query, top fb_docs feedback documents.
RM1 is estimated with a uniform document prior:

    P(t|d) = tf(t, d) / len(d)   over non-stopword terms
    RM1(t) = mean over the feedback documents

Terms with RM1 below epsilon are dropped.  The kept expansion set is the
top fb_terms NOVEL terms (terms not already in the query) by RM1; keeping
the expansion set disjoint from the query makes both mixture endpoints
exact: with no novel terms the weighted query is a positive rescaling of
the original, and at lambda = 1 expansion weights vanish entirely, so both
cases reproduce the baseline ranking bit-for-bit.

Final term weights:

    query term t:   lambda * count(t) / len(query)
    novel kept t:   (1 - lambda) * RM1(t)

The second pass is weighted BM25 (each term's contribution scaled by its
weight) on the lexical channel only; the vector channel never sees RM3.
"""

from __future__ import annotations

from dataclasses import dataclass

from .lexical import STOPWORDS, InvertedIndex, bm25_search


@dataclass(frozen=True)
class Rm3Config:
    fb_docs: int = 10
    fb_terms: int = 10
    lam: float = 0.5
    epsilon: float = 0.01

    def __post_init__(self):
        if self.fb_docs < 1:
            raise ValueError(f"fb_docs must be >= 1, got {self.fb_docs}")
        if self.fb_terms < 0:
            raise ValueError(f"fb_terms must be >= 0, got {self.fb_terms}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must be in [0,1], got {self.lam}")
        if self.epsilon < 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")


def rm1_distribution(index: InvertedIndex, doc_ids: list[str]) -> dict:
    """Mean of per-document tf/len over non-stopword terms (uniform doc prior)."""
    if not doc_ids:
        return {}
    totals: dict[str, float] = {}
    for doc_id in doc_ids:
        tf = index.term_frequencies(doc_id)
        length = index.doc_length(doc_id)
        if length == 0:
            continue
        for term, count in tf.items():
            if term in STOPWORDS:
                continue
            totals[term] = totals.get(term, 0.0) + count / length
    n = len(doc_ids)
    return {term: total / n for term, total in totals.items()}


def rm3_weights(
    index: InvertedIndex,
    query_tokens: list[str],
    config: Rm3Config,
    scope: set[str] | None = None,
    tie_seed: int = 0,
    query_key: str = "",
) -> dict:
    """Weighted-query term map for the second pass; {} when no feedback docs."""
    if not query_tokens:
        return {}
    first_pass = bm25_search(
        index,
        query_tokens,
        limit=config.fb_docs,
        scope=scope,
        tie_seed=tie_seed,
        query_key=query_key,
    )
    if not first_pass:
        return {}
    rm1 = rm1_distribution(index, [doc_id for doc_id, _, _ in first_pass])
    query_terms = set(query_tokens)
    novel = [
        (term, mass)
        for term, mass in rm1.items()
        if mass >= config.epsilon and term not in query_terms
    ]
    novel.sort(key=lambda item: (-item[1], item[0]))
    kept = novel[: config.fb_terms]
    weights: dict[str, float] = {}
    qlen = len(query_tokens)
    for token in query_tokens:
        weights[token] = weights.get(token, 0.0) + config.lam / qlen
    for term, mass in kept:
        weights[term] = weights.get(term, 0.0) + (1.0 - config.lam) * mass
    return {term: w for term, w in weights.items() if w > 0.0}
