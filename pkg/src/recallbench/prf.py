"""Dominance-gated pseudo-relevance query expansion.

The expander mines candidate entities (non-stopword alphanumeric tokens,
length >= 3) from the texts of the top first-pass results that the caller
can see.  Candidates are ranked by in-pool document frequency; rarity
filtering happens before the candidate list is truncated, so a rare entity
cannot be crowded out by common ones that the rarity gate would have
removed anyway.

Expansion fires only when every gate passes:

* dominance — the top entity must appear in at least
  min_dominance * top_k_for_prf pool texts (the configured pool size, not
  the possibly-smaller actual pool, so short result lists demand
  proportionally more agreement);
* rarity (optional) — entities with corpus rarity below idf_min_rarity are
  dropped from consideration entirely;
* anchor share — if the top entity's share of the actual pool exceeds
  anchor_share_max the query is already anchored on it and expansion is
  suppressed.

At most one entity is appended, as a single extra token on the query text,
so both retrieval channels see the expansion.
"""

from __future__ import annotations

from dataclasses import dataclass

from .lexical import extract_entities


@dataclass(frozen=True)
class ExpansionDecision:
    expanded_query: str | None
    top_entity: str | None
    top_count: int
    pool_size: int
    reason: str


def choose_expansion_entity(
    pool_texts: list[str],
    query: str,
    min_dominance: float,
    top_k_for_prf: int,
    max_entities: int,
    idf_min_rarity: float | None,
    anchor_share_max: float,
    rarity_fn,
) -> ExpansionDecision:
    """Apply the mining and gating rules; rarity_fn maps token -> rarity."""
    if not pool_texts:
        return ExpansionDecision(None, None, 0, 0, "empty pool")
    pool_size = len(pool_texts)
    counts: dict[str, int] = {}
    for text in pool_texts:
        for entity in extract_entities(text):
            counts[entity] = counts.get(entity, 0) + 1
    candidates = list(counts.items())
    if idf_min_rarity is not None:
        candidates = [
            (entity, n) for entity, n in candidates if rarity_fn(entity) >= idf_min_rarity
        ]
    # Rank by pool df, ties alphabetical, then truncate to the candidate cap.
    candidates.sort(key=lambda item: (-item[1], item[0]))
    candidates = candidates[:max_entities]
    if not candidates:
        return ExpansionDecision(None, None, 0, pool_size, "no candidates")
    top_entity, top_count = candidates[0]
    if top_count / pool_size > anchor_share_max:
        return ExpansionDecision(
            None, top_entity, top_count, pool_size, "anchor share exceeded"
        )
    if top_count < min_dominance * top_k_for_prf:
        return ExpansionDecision(None, top_entity, top_count, pool_size, "below dominance")
    return ExpansionDecision(
        f"{query} {top_entity}", top_entity, top_count, pool_size, "expanded"
    )
