"""Entity-collision corpus generator and paired evaluation driver.

Construction, per tag and collision degree K: each of n_entities synthetic
entities gets K answers drawn without replacement from the tag's answer
vocabulary.  The first draw is the gold answer; the rest become distractor
documents that keep the entity tokens and flip only the answer slot.  The
query asks for the entity's answer without containing it, so lexical
retrieval faces K interchangeable candidates.

With paraphrase off, every document in an entity group uses the same fixed
template, which keeps document lengths equal and BM25 scores exactly tied
across the group; the seeded tie shuffle then makes hit@1 average 1/K for
a pure lexical arm.  Answer vocabularies are fixed in-repo, 16 entries per
tag, with a uniform token count inside each tag so the tie stays exact.

Entity strings are two-token synthetic names ("entity07 person07"), which
cannot collide with vocabulary words or template words.

run_cell ingests the corpus into one fresh store per arm with write-time
near-duplicate suppression effectively off (threshold 1.0) and merging not
run: the protocol requires all K collision documents to land, and sibling
documents are deliberate near-duplicates.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .embedders import PrecomputedVectors
from .memory import TYPE_FACT, StorageConfig
from .retrieval import RetrievalConfig, recall
from .store import MemoryStore

TAGS = ("preference", "project", "technical", "service", "tool")
VALID_K = (1, 2, 4, 8, 16)

# One vocabulary per tag, 16 answers each, uniform token count within a tag.
VOCABULARIES: dict[str, tuple[str, ...]] = {
    "service": (
        "aws", "gcp", "azure", "heroku", "netlify", "vercel", "railway",
        "linode", "vultr", "digitalocean", "cloudflare", "fastly",
        "supabase", "firebase", "datadog", "render",
    ),
    "tool": (
        "git", "docker", "postgres", "redis", "nginx", "kafka", "terraform",
        "ansible", "jenkins", "grafana", "prometheus", "bazel", "webpack",
        "tmux", "vim", "rsync",
    ),
    "technical": (
        "rust", "golang", "python", "typescript", "kotlin", "swift", "scala",
        "haskell", "erlang", "elixir", "clojure", "fortran", "julia", "zig",
        "lua", "perl",
    ),
    "project": (
        "atlas", "borealis", "cascade", "dynamo", "everest", "falcon",
        "gemini", "horizon", "icarus", "jupiter", "kestrel", "lyra",
        "meridian", "nimbus", "orion", "pegasus",
    ),
    "preference": (
        "dark mode", "light mode", "compact layout", "verbose logging",
        "silent alerts", "manual saves", "automatic updates",
        "keyboard shortcuts", "large fonts", "split panes",
        "inline previews", "nested folders", "weekly digests",
        "instant notifications", "minimal themes", "floating windows",
    ),
}

FIXED_TEMPLATE = "{entity} uses {answer} for {tag}."
QUERY_TEMPLATE = "what does {entity} use for {tag}?"

# Each rewrite mentions the entity and the answer exactly once.
DEFAULT_PARAPHRASE_TEMPLATES = (
    "for {tag}, {entity} relies on {answer}.",
    "{entity} prefers {answer} when handling {tag}.",
    "when dealing with {tag}, {entity} picks {answer}.",
    "{entity} settled on {answer} as the {tag} option.",
    "the {tag} pick of {entity} is {answer}.",
)


@dataclass(frozen=True)
class CollisionSpec:
    tag: str
    K: int
    n_entities: int = 32
    seed: int = 0
    paraphrase: bool = False
    paraphrase_templates: tuple = DEFAULT_PARAPHRASE_TEMPLATES

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown tag {self.tag!r}; expected one of {TAGS}")
        if self.K not in VALID_K:
            raise ValueError(f"K must be one of {VALID_K}, got {self.K}")
        if self.n_entities < 1:
            raise ValueError(f"n_entities must be >= 1, got {self.n_entities}")
        vocab = VOCABULARIES[self.tag]
        if self.K > len(vocab):
            raise ValueError(
                f"K={self.K} exceeds the {self.tag!r} vocabulary size {len(vocab)}"
            )
        if self.paraphrase and len(self.paraphrase_templates) < 4:
            raise ValueError("paraphrase requires at least 4 templates")


@dataclass(frozen=True)
class CollisionDoc:
    doc_id: str
    text: str
    entity: str
    answer: str
    is_gold: bool


@dataclass(frozen=True)
class CollisionQuery:
    query: str
    gold_doc_id: str
    entity: str


@dataclass(frozen=True)
class CollisionCorpus:
    spec: CollisionSpec
    docs: tuple
    queries: tuple


def generate(spec: CollisionSpec) -> CollisionCorpus:
    """Deterministic corpus for one (tag, K) cell."""
    rng = random.Random(spec.seed)
    vocab = VOCABULARIES[spec.tag]
    docs: list[CollisionDoc] = []
    queries: list[CollisionQuery] = []
    for i in range(spec.n_entities):
        entity = f"entity{i:02d} person{i:02d}"
        answers = rng.sample(vocab, spec.K)
        gold_doc_id = f"d{i:03d}_0"
        for j, answer in enumerate(answers):
            if spec.paraphrase:
                template = rng.choice(spec.paraphrase_templates)
            else:
                template = FIXED_TEMPLATE
            docs.append(
                CollisionDoc(
                    doc_id=f"d{i:03d}_{j}",
                    text=template.format(entity=entity, answer=answer, tag=spec.tag),
                    entity=entity,
                    answer=answer,
                    is_gold=(j == 0),
                )
            )
        queries.append(
            CollisionQuery(
                query=QUERY_TEMPLATE.format(entity=entity, tag=spec.tag),
                gold_doc_id=gold_doc_id,
                entity=entity,
            )
        )
    return CollisionCorpus(spec=spec, docs=tuple(docs), queries=tuple(queries))


def corpus_to_json(corpus: CollisionCorpus) -> dict:
    """Audit dump: spec echo plus full doc and query listings."""
    spec = corpus.spec
    return {
        "spec": {
            "tag": spec.tag,
            "K": spec.K,
            "n_entities": spec.n_entities,
            "seed": spec.seed,
            "paraphrase": spec.paraphrase,
            "paraphrase_templates": list(spec.paraphrase_templates),
        },
        "docs": [
            {
                "doc_id": d.doc_id,
                "text": d.text,
                "entity": d.entity,
                "answer": d.answer,
                "is_gold": d.is_gold,
            }
            for d in corpus.docs
        ],
        "queries": [
            {"query": q.query, "gold_doc_id": q.gold_doc_id, "entity": q.entity}
            for q in corpus.queries
        ],
    }


def build_answer_oracle(corpus: CollisionCorpus) -> PrecomputedVectors:
    """One-hot embedder separating the (entity, answer) slot by construction.

    Every document maps to the basis vector of its own (entity, answer)
    pair; every query maps to the basis vector of its entity's gold pair.
    Cosine is therefore 1.0 for the gold document and 0.0 for everything
    else, so a pure vector arm must rank gold first at every K.
    """
    pairs = sorted({(d.entity, d.answer) for d in corpus.docs})
    basis = {pair: idx for idx, pair in enumerate(pairs)}
    dim = len(pairs)
    gold_answer = {d.entity: d.answer for d in corpus.docs if d.is_gold}

    def one_hot(idx: int) -> list[float]:
        vec = [0.0] * dim
        vec[idx] = 1.0
        return vec

    mapping: dict[str, list[float]] = {}
    for doc in corpus.docs:
        mapping[doc.text] = one_hot(basis[(doc.entity, doc.answer)])
    for query in corpus.queries:
        mapping.setdefault(
            query.query, one_hot(basis[(query.entity, gold_answer[query.entity])])
        )
    return PrecomputedVectors.from_mapping(mapping, encoder="answer-oracle")


# Near-duplicate suppression must not eat collision documents, and sibling
# docs are near-duplicates by design, so ingest runs with the gate at 1.0.
INGEST_STORAGE = StorageConfig(write_dedup_threshold=1.0, merge_threshold=1.0)

EVAL_ACTOR = "eval"


def ingest(corpus: CollisionCorpus, embedder) -> tuple[MemoryStore, dict]:
    """Fresh single-actor store holding the corpus; returns doc->memory map."""
    store = MemoryStore(config=INGEST_STORAGE, embedder=embedder)
    doc_to_memory: dict[str, str] = {}
    for doc in corpus.docs:
        result = store.remember(
            actor="",
            text=doc.text,
            memory_type=TYPE_FACT,
            salience=0.5,
            extraction_confidence=1.0,
        )
        if not result.stored:
            raise RuntimeError(f"collision doc failed to land: {doc.doc_id}")
        doc_to_memory[doc.doc_id] = result.memory.id
    return store, doc_to_memory


@dataclass(frozen=True)
class EngineArm:
    """One evaluation arm: a retrieval config plus the embedder it runs with."""

    label: str
    config: RetrievalConfig
    embedder: object


@dataclass(frozen=True)
class CellResult:
    query_ids: tuple
    a: tuple
    b: tuple
    label_a: str
    label_b: str


def arm_hits(corpus: CollisionCorpus, arm: EngineArm) -> list[int]:
    """Per-query hit@1 indicators for a single arm over a fresh ingest."""
    store, doc_to_memory = ingest(corpus, arm.embedder)
    hits = []
    for query in corpus.queries:
        ranked = recall(store, EVAL_ACTOR, query.query, arm.config)
        gold_mid = doc_to_memory[query.gold_doc_id]
        hits.append(1 if ranked and ranked[0].memory_id == gold_mid else 0)
    return hits


def run_cell(corpus: CollisionCorpus, arm_a: EngineArm, arm_b: EngineArm) -> CellResult:
    """Paired per-query hit@1 indicators for two arms over one corpus."""
    return CellResult(
        query_ids=tuple(q.gold_doc_id for q in corpus.queries),
        a=tuple(arm_hits(corpus, arm_a)),
        b=tuple(arm_hits(corpus, arm_b)),
        label_a=arm_a.label,
        label_b=arm_b.label,
    )


def cell_config(vw: float, seed: int, k: int = 10) -> RetrievalConfig:
    """Ship-default evaluation config at a given vector weight and tie seed."""
    return RetrievalConfig(vector_weight=vw, k=k, tie_seed=seed)
