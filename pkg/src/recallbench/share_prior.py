"""Entity-sharing prior: a bounded, rank-0-safe reranking boost.

Over the top pool_size fused candidates, build the undirected graph with an
edge between two candidates iff their extracted entity sets intersect.
deg_i counts a candidate's pool mates sharing at least one entity; when
max_deg is 0 the pass is a no-op.

alpha_eff = alpha, or alpha / (1 + max(0, max_deg - 1) / 4) when adaptive
scaling is on (denser graphs get proportionally smaller boosts).

Boosts:

    rank-0:      alpha_eff * deg_0 / max_deg               (uncapped)
    rank-i > 0:  min(alpha_eff * deg_i / max_deg,
                     score_0 - score_i - EPSILON)          floored at 0

The cap keeps every boosted trailing candidate strictly below the pre-boost
leader whenever it actually trailed; the floor handles exact score ties,
where the cap would otherwise go negative (boosts are non-negative by
contract).  Exact ties keep their original relative order because the
caller breaks final-score ties with the same seeded keys used before the
boost, so the top-1 result is always unchanged.
"""

from __future__ import annotations

from .lexical import extract_entities

# Margin in the rank-0 cap; value matches the worked example in the scoring
# contract and is not separately configurable.
EPSILON = 0.01


def entity_degrees(entity_sets: list[set[str]]) -> list[int]:
    n = len(entity_sets)
    degs = [0] * n
    for i in range(n):
        if not entity_sets[i]:
            continue
        for j in range(i + 1, n):
            if entity_sets[i] & entity_sets[j]:
                degs[i] += 1
                degs[j] += 1
    return degs


def share_prior_boosts(
    pool: list[tuple[str, float, str]],
    alpha: float,
    adaptive: bool = False,
) -> dict[str, float]:
    """Boost per memory id for a fused-score-ordered pool of (id, score, text)."""
    if alpha <= 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if not pool:
        return {}
    entity_sets = [extract_entities(text) for _, _, text in pool]
    degs = entity_degrees(entity_sets)
    max_deg = max(degs)
    if max_deg == 0:
        return {mid: 0.0 for mid, _, _ in pool}
    alpha_eff = alpha if not adaptive else alpha / (1.0 + max(0, max_deg - 1) / 4.0)
    top_score = pool[0][1]
    boosts: dict[str, float] = {}
    for rank, (mid, score, _) in enumerate(pool):
        raw = alpha_eff * degs[rank] / max_deg
        if rank == 0:
            boosts[mid] = raw
        else:
            boosts[mid] = max(0.0, min(raw, top_score - score - EPSILON))
    return boosts
