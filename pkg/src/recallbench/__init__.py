"""Deterministic agent-memory store with hybrid recall and a collision benchmark.

The package splits into four layers:

- storage: append-only event log, replayable memory store, governed write
  path (dedup, merge, fact extraction), schema lifecycle reducer.
- retrieval: BM25 inverted index, trigram hash embeddings, convex fusion,
  PRF / RM3 expansion, share_prior rerank, ACL scoping.
- evaluation: entity-collision corpus generator, paired cells, bootstrap
  CIs, interaction estimator, vector-weight routing.
- surface: result artifacts, registry verification, report rendering, CLI.
"""

from .acl import SCOPE_ALL, SCOPE_OWN, Grant, resolve_scope
from .collision import (
    TAGS,
    VALID_K,
    CollisionCorpus,
    CollisionSpec,
    EngineArm,
    arm_hits,
    build_answer_oracle,
    cell_config,
    generate,
    ingest,
    run_cell,
)
from .embedders import (
    HashTrigramEmbedder,
    PrecomputedVectors,
    cosine,
    load_precomputed_vectors,
    save_precomputed_vectors,
)
from .errors import (
    LifecycleViolation,
    LockUnavailable,
    MissingVectorError,
    PermissionDenied,
    RecallBenchError,
    TornLogError,
)
from .eventlog import EventLog, WriteEvent, read_log
from .lexical import Bm25Params, InvertedIndex, bm25_search, corpus_rarity, minmax_normalize
from .lifecycle import (
    MODE_LENIENT,
    MODE_STRICT,
    LifecycleEvent,
    SchemaState,
    SnapshotCache,
    reduce_events,
)
from .memory import Memory, StorageConfig
from .retrieval import RetrievalConfig, ScoredCandidate, recall
from .rm3 import Rm3Config, rm3_weights
from .stats import (
    CIReport,
    PairedResult,
    RouterReport,
    hit_at_k,
    interaction_ci,
    mrr,
    paired_bootstrap_ci,
    pool_results,
    router_oracle,
    routing_signals,
    threshold_policy_eval,
)
from .store import MemoryStore, RememberResult, replay_projection

__version__ = "0.1.0"

__all__ = [
    "SCOPE_ALL",
    "SCOPE_OWN",
    "Grant",
    "resolve_scope",
    "TAGS",
    "VALID_K",
    "CollisionCorpus",
    "CollisionSpec",
    "EngineArm",
    "arm_hits",
    "build_answer_oracle",
    "cell_config",
    "generate",
    "ingest",
    "run_cell",
    "HashTrigramEmbedder",
    "PrecomputedVectors",
    "cosine",
    "load_precomputed_vectors",
    "save_precomputed_vectors",
    "LifecycleViolation",
    "LockUnavailable",
    "MissingVectorError",
    "PermissionDenied",
    "RecallBenchError",
    "TornLogError",
    "EventLog",
    "WriteEvent",
    "read_log",
    "Bm25Params",
    "InvertedIndex",
    "bm25_search",
    "corpus_rarity",
    "minmax_normalize",
    "MODE_LENIENT",
    "MODE_STRICT",
    "LifecycleEvent",
    "SchemaState",
    "SnapshotCache",
    "reduce_events",
    "Memory",
    "StorageConfig",
    "RetrievalConfig",
    "ScoredCandidate",
    "recall",
    "Rm3Config",
    "rm3_weights",
    "CIReport",
    "PairedResult",
    "RouterReport",
    "hit_at_k",
    "interaction_ci",
    "mrr",
    "paired_bootstrap_ci",
    "pool_results",
    "router_oracle",
    "routing_signals",
    "threshold_policy_eval",
    "MemoryStore",
    "RememberResult",
    "replay_projection",
    "__version__",
]
