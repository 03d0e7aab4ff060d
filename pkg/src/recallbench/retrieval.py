"""Hybrid recall pipeline: fusion, expansion gates, rerank, filters.

Stage order is fixed and all levers are independent:

1. BM25 and vector candidates, each limited to k*5, each scoped by the
   actor's visibility before any rank is assigned.
2. Optional query expansion (dominance-gated PRF, then RM3 when both are
   configured); the expanded query's results replace the first pass.  PRF
   rewrites the query text, so both channels see it; RM3 reweights the
   lexical channel only.
3. Convex fusion: fused = (1 - vw) * bm25_norm + vw * cos_sim, absent
   channels contributing 0.  bm25_norm is min-max over the returned BM25
   candidates.
4. Lifecycle filter: SCHEMA candidates whose folded status is DEPRECATED
   are dropped (respect_schema_lifecycle).
5. share_prior rerank when configured.
6. Extraction-confidence multiplier when enabled.
7. Sort by final score descending, seeded tie-break, truncate to k.

Every tie anywhere in one recall call is broken by the same keyed shuffle
(tie_seed, original query text, memory id), so reruns are bit-identical and
tie order is uniform across ids.

Candidates absent from the BM25 channel carry bm25_rank -1; real ranks are
contiguous 0..m-1 over that channel's returns.
"""

from __future__ import annotations

from dataclasses import dataclass

from .lexical import (
    bm25_search,
    bm25_search_weighted,
    corpus_rarity,
    minmax_normalize,
    tie_key,
    tokenize,
)
from .lifecycle import STATUS_DEPRECATED
from .memory import TYPE_SCHEMA
from .prf import choose_expansion_entity
from .rm3 import Rm3Config, rm3_weights
from .share_prior import share_prior_boosts


@dataclass(frozen=True)
class RetrievalConfig:
    vector_weight: float = 0.3
    k: int = 10
    query_expansion_min_dominance: float | None = None
    top_k_for_prf: int = 10
    max_entities: int = 4
    query_expansion_idf_min_rarity: float | None = None
    anchor_share_max: float = 0.5
    share_prior_alpha: float | None = None
    share_prior_pool: int = 20
    share_prior_adaptive_alpha: bool = False
    use_extraction_confidence: bool = True
    respect_schema_lifecycle: bool = True
    deprecate_quorum_k: int = 1
    rm3: Rm3Config | None = None
    tie_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.vector_weight <= 1.0:
            raise ValueError(f"vector_weight must be in [0,1], got {self.vector_weight}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.top_k_for_prf < 1:
            raise ValueError(f"top_k_for_prf must be >= 1, got {self.top_k_for_prf}")
        if self.max_entities < 1:
            raise ValueError(f"max_entities must be >= 1, got {self.max_entities}")
        if self.query_expansion_min_dominance is not None and self.query_expansion_min_dominance <= 0:
            raise ValueError("query_expansion_min_dominance must be > 0 when set")
        if self.query_expansion_idf_min_rarity is not None and not (
            0.0 <= self.query_expansion_idf_min_rarity <= 1.0
        ):
            raise ValueError("query_expansion_idf_min_rarity must be in [0,1] when set")
        if not 0.0 < self.anchor_share_max <= 1.0:
            raise ValueError(f"anchor_share_max must be in (0,1], got {self.anchor_share_max}")
        if self.share_prior_alpha is not None and self.share_prior_alpha <= 0:
            raise ValueError("share_prior_alpha must be > 0 when set")
        if self.share_prior_pool < 1:
            raise ValueError(f"share_prior_pool must be >= 1, got {self.share_prior_pool}")
        if self.deprecate_quorum_k < 1:
            raise ValueError(f"deprecate_quorum_k must be >= 1, got {self.deprecate_quorum_k}")


@dataclass(frozen=True)
class ScoredCandidate:
    memory_id: str
    bm25_raw: float
    bm25_norm: float
    bm25_rank: int
    cos_sim: float
    fused: float
    share_prior_boost: float
    ec_multiplier: float
    final: float


def _run_channels(store, query_text: str, tokens, limit, scope, tie_seed, query_key):
    bm25 = bm25_search(
        store.index, tokens, limit=limit, scope=scope, tie_seed=tie_seed, query_key=query_key
    )
    query_vec = store.embedder.embed(query_text)
    vector = store.vector_search(
        query_vec, limit=limit, scope=scope, tie_seed=tie_seed, query_key=query_key
    )
    return bm25, vector


def _fuse(bm25, vector, vw, tie_seed, query_key):
    """Union the channels into per-candidate partial scores, fused and sorted."""
    bm25_map = {doc_id: (raw, rank) for doc_id, raw, rank in bm25}
    norm_map: dict[str, float] = {}
    if bm25:
        norms = minmax_normalize([raw for _, raw, _ in bm25])
        norm_map = {doc_id: norm for (doc_id, _, _), norm in zip(bm25, norms)}
    cos_map = dict(vector)
    rows = []
    for mid in set(bm25_map) | set(cos_map):
        raw, rank = bm25_map.get(mid, (0.0, -1))
        norm = norm_map.get(mid, 0.0)
        cos = cos_map.get(mid, 0.0)
        fused = (1.0 - vw) * norm + vw * cos
        rows.append((mid, raw, norm, rank, cos, fused))
    rows.sort(key=lambda r: (-r[5], tie_key(tie_seed, query_key, r[0])))
    return rows


def recall(store, actor: str, query: str, config: RetrievalConfig) -> list[ScoredCandidate]:
    """Ranked recall for one actor; see module docstring for stage order."""
    scope = store.visible_scope_for(actor)
    tokens = tokenize(query)
    if not tokens:
        return []
    limit = config.k * 5
    tie_seed = config.tie_seed
    query_key = query  # one tie table per call, stable across expansions

    bm25, vector = _run_channels(store, query, tokens, limit, scope, tie_seed, query_key)

    if config.query_expansion_min_dominance is not None:
        first_pass = _fuse(bm25, vector, config.vector_weight, tie_seed, query_key)
        pool_texts = []
        for mid, *_ in first_pass[: config.top_k_for_prf]:
            row = store.rows.get(mid)
            if row is not None:
                pool_texts.append(row.text)
        decision = choose_expansion_entity(
            pool_texts,
            query,
            min_dominance=config.query_expansion_min_dominance,
            top_k_for_prf=config.top_k_for_prf,
            max_entities=config.max_entities,
            idf_min_rarity=config.query_expansion_idf_min_rarity,
            anchor_share_max=config.anchor_share_max,
            rarity_fn=lambda entity: corpus_rarity(store.index, entity, scope),
        )
        if decision.expanded_query is not None:
            tokens = tokenize(decision.expanded_query)
            bm25, vector = _run_channels(
                store, decision.expanded_query, tokens, limit, scope, tie_seed, query_key
            )

    if config.rm3 is not None:
        weights = rm3_weights(
            store.index, tokens, config.rm3, scope=scope, tie_seed=tie_seed, query_key=query_key
        )
        if weights:
            bm25 = bm25_search_weighted(
                store.index, weights, limit=limit, scope=scope,
                tie_seed=tie_seed, query_key=query_key,
            )

    rows = _fuse(bm25, vector, config.vector_weight, tie_seed, query_key)

    if config.respect_schema_lifecycle:
        snapshot = None
        kept = []
        for row_tuple in rows:
            memory = store.rows.get(row_tuple[0])
            if memory is not None and memory.memory_type == TYPE_SCHEMA and memory.schema_id:
                if snapshot is None:
                    snapshot = store.lifecycle_snapshot(config.deprecate_quorum_k)
                state = snapshot.get(memory.schema_id)
                if state is not None and state.status == STATUS_DEPRECATED:
                    continue
            kept.append(row_tuple)
        rows = kept

    boosts: dict[str, float] = {}
    if config.share_prior_alpha is not None and rows:
        pool = []
        for mid, _, _, _, _, fused in rows[: config.share_prior_pool]:
            memory = store.rows.get(mid)
            pool.append((mid, fused, memory.text if memory is not None else ""))
        boosts = share_prior_boosts(
            pool, config.share_prior_alpha, adaptive=config.share_prior_adaptive_alpha
        )

    results = []
    for mid, raw, norm, rank, cos, fused in rows:
        memory = store.rows.get(mid)
        if config.use_extraction_confidence and memory is not None:
            ec = memory.extraction_confidence
        else:
            ec = 1.0
        boost = boosts.get(mid, 0.0)
        results.append(
            ScoredCandidate(
                memory_id=mid,
                bm25_raw=raw,
                bm25_norm=norm,
                bm25_rank=rank,
                cos_sim=cos,
                fused=fused,
                share_prior_boost=boost,
                ec_multiplier=ec,
                final=(fused + boost) * ec,
            )
        )
    results.sort(key=lambda c: (-c.final, tie_key(tie_seed, query_key, c.memory_id)))
    return results[: config.k]
