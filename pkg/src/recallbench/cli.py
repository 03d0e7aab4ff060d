"""Command-line surface: corpora, sweeps, routing, replay, artifacts.

Subcommands:

- generate: write one collision corpus as JSON.
- sweep: paired two-arm evaluation over a tag x K grid, one artifact per tag.
- router: vector-weight oracle and optional threshold policy on one cell.
- lifecycle-replay: fold a write log's lifecycle events into schema states.
- store-verify: parse and replay a write log, reporting projection counts.
- verify-registry: check every claim -> artifact-path row in a registry.
- report: render sweep artifacts to a TSV plus figures.

Exit codes: 0 success, 1 runtime failure (missing vector, torn log,
failed registry), 2 usage error.  The RECALLBENCH_SEED environment
variable overrides the default seed; an explicit --seed wins over both.

Every retrieval flag maps to exactly one config field, and the defaults
equal the shipped configuration: vw=0.3, expansion off, reranker off,
extraction confidence on, lifecycle respected, quorum k=1.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .artifacts import (
    KIND_ROUTER,
    KIND_SWEEP,
    build_artifact,
    verify_registry,
    write_artifact,
)
from .collision import (
    EVAL_ACTOR,
    TAGS,
    VALID_K,
    VOCABULARIES,
    CollisionSpec,
    EngineArm,
    build_answer_oracle,
    corpus_to_json,
    generate,
    ingest,
    run_cell,
)
from .embedders import HashTrigramEmbedder, load_precomputed_vectors
from .errors import MissingVectorError, RecallBenchError
from .eventlog import read_log
from .lifecycle import MODE_LENIENT, MODE_STRICT, reduce_events
from .memory import STATE_ACTIVE, STATE_SUPPRESSED
from .report import render_report
from .retrieval import RetrievalConfig, recall
from .rm3 import Rm3Config
from .stats import (
    PairedResult,
    paired_bootstrap_ci,
    pool_results,
    router_oracle,
    routing_signals,
    threshold_policy_eval,
)
from .store import replay_projection

SEED_ENV = "RECALLBENCH_SEED"
DEFAULT_SEED = 42

SIGNAL_NAMES = ("raw_gap", "norm_gap", "crowd095")


class UsageError(ValueError):
    """Bad arguments detected after parsing; maps to exit code 2."""


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return DEFAULT_SEED


def _embedder_factory(spec_str: str):
    """Map an --embed value to a corpus -> embedder callable.

    hash and precomputed backends are corpus-independent and shared; the
    oracle backend is built per corpus because its basis is the corpus's
    (entity, answer) pairs.
    """
    if spec_str == "hash":
        shared = HashTrigramEmbedder()
        return lambda corpus: shared
    if spec_str.startswith("hash:"):
        try:
            dim = int(spec_str.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad hash dim in --embed {spec_str!r}") from None
        shared = HashTrigramEmbedder(dim=dim)
        return lambda corpus: shared
    if spec_str == "oracle":
        return build_answer_oracle
    if spec_str.startswith("precomputed:"):
        path = spec_str.split(":", 1)[1]
        if not path:
            raise UsageError("--embed precomputed: needs a file path")
        shared = load_precomputed_vectors(path)
        return lambda corpus: shared
    raise UsageError(
        f"unknown embedder {spec_str!r}; expected hash, hash:<dim>, oracle, "
        "or precomputed:<path>"
    )


def _add_retrieval_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("retrieval levers")
    group.add_argument("--k", type=int, default=10, help="result depth (default 10)")
    group.add_argument("--min-dominance", type=float, default=None,
                       help="enable PRF at this dominance fraction (default off)")
    group.add_argument("--prf-top-k", type=int, default=10,
                       help="first-pass pool size mined for expansion (default 10)")
    group.add_argument("--max-entities", type=int, default=4,
                       help="expansion candidates kept after ranking (default 4)")
    group.add_argument("--idf-min-rarity", type=float, default=None,
                       help="drop expansion candidates below this rarity (default off)")
    group.add_argument("--anchor-share-max", type=float, default=0.5,
                       help="block expansion above this pool share (default 0.5)")
    group.add_argument("--share-prior-alpha", type=float, default=None,
                       help="enable the share_prior rerank at this boost (default off)")
    group.add_argument("--share-prior-pool", type=int, default=20,
                       help="rerank pool size (default 20)")
    group.add_argument("--share-prior-adaptive-alpha", action="store_true",
                       help="scale alpha down by graph degree")
    group.add_argument("--no-extraction-confidence", action="store_true",
                       help="disable the extraction-confidence multiplier")
    group.add_argument("--ignore-lifecycle", action="store_true",
                       help="rank DEPRECATED schema memories too")
    group.add_argument("--quorum-k", type=int, default=1,
                       help="distinct DEPRECATE votes needed (default 1)")
    group.add_argument("--rm3", action="store_true",
                       help="enable RM3 lexical expansion")
    group.add_argument("--rm3-fb-docs", type=int, default=10)
    group.add_argument("--rm3-fb-terms", type=int, default=10)
    group.add_argument("--rm3-lambda", type=float, default=0.5)
    group.add_argument("--rm3-epsilon", type=float, default=0.01)


def _config_from_args(args, vw: float, tie_seed: int) -> RetrievalConfig:
    rm3 = None
    if args.rm3:
        rm3 = Rm3Config(
            fb_docs=args.rm3_fb_docs,
            fb_terms=args.rm3_fb_terms,
            lam=args.rm3_lambda,
            epsilon=args.rm3_epsilon,
        )
    try:
        return RetrievalConfig(
            vector_weight=vw,
            k=args.k,
            query_expansion_min_dominance=args.min_dominance,
            top_k_for_prf=args.prf_top_k,
            max_entities=args.max_entities,
            query_expansion_idf_min_rarity=args.idf_min_rarity,
            anchor_share_max=args.anchor_share_max,
            share_prior_alpha=args.share_prior_alpha,
            share_prior_pool=args.share_prior_pool,
            share_prior_adaptive_alpha=args.share_prior_adaptive_alpha,
            use_extraction_confidence=not args.no_extraction_confidence,
            respect_schema_lifecycle=not args.ignore_lifecycle,
            deprecate_quorum_k=args.quorum_k,
            rm3=rm3,
            tie_seed=tie_seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _retrieval_echo(args) -> dict:
    """Spec echo of every retrieval lever, for the artifact."""
    echo = {
        "k": args.k,
        "min_dominance": args.min_dominance,
        "prf_top_k": args.prf_top_k,
        "max_entities": args.max_entities,
        "idf_min_rarity": args.idf_min_rarity,
        "anchor_share_max": args.anchor_share_max,
        "share_prior_alpha": args.share_prior_alpha,
        "share_prior_pool": args.share_prior_pool,
        "share_prior_adaptive_alpha": args.share_prior_adaptive_alpha,
        "extraction_confidence": not args.no_extraction_confidence,
        "respect_lifecycle": not args.ignore_lifecycle,
        "quorum_k": args.quorum_k,
        "rm3": None,
    }
    if args.rm3:
        echo["rm3"] = {
            "fb_docs": args.rm3_fb_docs,
            "fb_terms": args.rm3_fb_terms,
            "lambda": args.rm3_lambda,
            "epsilon": args.rm3_epsilon,
        }
    return echo


def _check_cell_args(tags, k_grid) -> None:
    for tag in tags:
        if tag not in TAGS:
            raise UsageError(f"unknown tag {tag!r}; expected one of {', '.join(TAGS)}")
    for k in k_grid:
        if k not in VALID_K:
            raise UsageError(f"K must be one of {VALID_K}, got {k}")
    for tag in tags:
        vocab = len(VOCABULARIES[tag])
        for k in k_grid:
            if k > vocab:
                raise UsageError(
                    f"K={k} exceeds the {tag} vocabulary ({vocab} answers)"
                )


def _emit(payload: dict, out_path: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        print(f"wrote {out_path}")
    else:
        sys.stdout.write(text)


def cmd_generate(args) -> int:
    seed = _resolve_seed(args)
    _check_cell_args([args.tag], [args.K])
    try:
        spec = CollisionSpec(
            tag=args.tag,
            K=args.K,
            n_entities=args.n_entities,
            seed=seed,
            paraphrase=args.paraphrase,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(corpus_to_json(generate(spec)), args.out)
    return 0


def _artifact_path_for_tag(out: str, tag: str, multi: bool) -> str:
    if not multi:
        return out
    root, ext = os.path.splitext(out)
    return f"{root}.{tag}{ext}" if ext else f"{out}.{tag}"


def cmd_sweep(args) -> int:
    seed = _resolve_seed(args)
    tags = args.tag if args.tag else list(TAGS)
    _check_cell_args(tags, args.K)
    if args.repetitions < 1:
        raise UsageError(f"--repetitions must be >= 1, got {args.repetitions}")
    if args.resamples < 1:
        raise UsageError(f"--resamples must be >= 1, got {args.resamples}")
    vw_a, vw_b = args.vw
    for vw in (vw_a, vw_b):
        if not 0.0 <= vw <= 1.0:
            raise UsageError(f"--vw values must be in [0,1], got {vw}")
    factory = _embedder_factory(args.embed)
    _config_from_args(args, vw_a, seed)  # fail fast on bad lever values

    def eval_cell(tag: str, K: int) -> dict:
        reps = []
        for rep in range(args.repetitions):
            s = seed + rep
            corpus = generate(CollisionSpec(
                tag=tag, K=K, n_entities=args.n_entities, seed=s,
                paraphrase=args.paraphrase,
            ))
            embedder = factory(corpus)
            cell = run_cell(
                corpus,
                EngineArm(f"vw={vw_a}", _config_from_args(args, vw_a, s), embedder),
                EngineArm(f"vw={vw_b}", _config_from_args(args, vw_b, s), embedder),
            )
            reps.append(PairedResult(cell.query_ids, cell.a, cell.b,
                                     cell.label_a, cell.label_b))
        pooled = pool_results(reps)
        ci = paired_bootstrap_ci(pooled, resamples=args.resamples, seed=seed)
        return {
            "tag": tag,
            "K": K,
            "n": pooled.n,
            "label_a": pooled.label_a,
            "label_b": pooled.label_b,
            "hit_at_1_a": sum(pooled.a) / pooled.n,
            "hit_at_1_b": sum(pooled.b) / pooled.n,
            "delta": ci.point,
            "ci_lo": ci.lo,
            "ci_hi": ci.hi,
            "significant": ci.significant,
            "resamples": ci.resamples,
            "ci_seed": ci.seed,
        }

    grid = [(tag, K) for tag in tags for K in args.K]
    workers = args.workers if args.workers else min(4, len(grid))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = dict(zip(grid, pool.map(lambda tk: eval_cell(*tk), grid)))
    else:
        results = {tk: eval_cell(*tk) for tk in grid}

    multi = len(tags) > 1
    for tag in tags:
        spec_echo = {
            "tag": tag,
            "K_grid": list(args.K),
            "n_entities": args.n_entities,
            "seed": seed,
            "embedder": args.embed,
            "vw_arms": [vw_a, vw_b],
            "repetitions": args.repetitions,
            "paraphrase": args.paraphrase,
            "retrieval": _retrieval_echo(args),
        }
        cells = [results[(tag, K)] for K in args.K]
        artifact = build_artifact(KIND_SWEEP, spec_echo, cells, seed)
        path = _artifact_path_for_tag(args.out, tag, multi)
        write_artifact(path, artifact)
        print(f"wrote {path}")
    return 0


def cmd_router(args) -> int:
    seed = _resolve_seed(args)
    _check_cell_args([args.tag], [args.K])
    if args.repetitions < 1:
        raise UsageError(f"--repetitions must be >= 1, got {args.repetitions}")
    vw_grid = sorted(set(args.vw_grid))
    if len(vw_grid) < 2:
        raise UsageError("--vw-grid needs at least two distinct weights")
    for vw in vw_grid:
        if not 0.0 <= vw <= 1.0:
            raise UsageError(f"--vw-grid values must be in [0,1], got {vw}")
    factory = _embedder_factory(args.embed)

    per_query_hits: dict = {vw: [] for vw in vw_grid}
    signals: list = []
    for rep in range(args.repetitions):
        s = seed + rep
        corpus = generate(CollisionSpec(
            tag=args.tag, K=args.K, n_entities=args.n_entities, seed=s,
            paraphrase=args.paraphrase,
        ))
        embedder = factory(corpus)
        store, doc_to_memory = ingest(corpus, embedder)
        # Signals must predate routing, so they come from one reference
        # pass at the most lexical weight in the grid.
        base_config = _config_from_args(args, vw_grid[0], s)
        configs = {vw: _config_from_args(args, vw, s) for vw in vw_grid}
        for query in corpus.queries:
            base = recall(store, EVAL_ACTOR, query.query, base_config)
            signals.append(routing_signals(base)[args.signal])
            gold = doc_to_memory[query.gold_doc_id]
            for vw in vw_grid:
                ranked = recall(store, EVAL_ACTOR, query.query, configs[vw])
                hit = 1 if ranked and ranked[0].memory_id == gold else 0
                per_query_hits[vw].append(hit)

    report = router_oracle(per_query_hits)
    cell: dict = {
        "tag": args.tag,
        "K": args.K,
        "n": len(signals),
        "signal": args.signal,
        "oracle": report.to_json(),
        "policy": None,
    }
    if args.tau is not None:
        low_vw = args.low_vw if args.low_vw is not None else vw_grid[0]
        high_vw = args.high_vw if args.high_vw is not None else vw_grid[-1]
        for vw, name in ((low_vw, "--low-vw"), (high_vw, "--high-vw")):
            if vw not in per_query_hits:
                raise UsageError(f"{name} {vw} is not in --vw-grid")
        policy = threshold_policy_eval(
            signals, args.tau, low_vw, high_vw, per_query_hits,
            resamples=args.resamples, seed=seed,
        )
        cell["policy"] = {
            "tau": args.tau,
            "low_vw": low_vw,
            "high_vw": high_vw,
            "policy_hit1": policy["policy_hit1"],
            "static_best_vw": policy["static_best_vw"],
            "static_best_hit1": policy["static_best_hit1"],
            "delta_ci": policy["delta_ci"].to_json(),
            "chosen_high": sum(1 for c in policy["choices"] if c == high_vw),
        }
    spec_echo = {
        "tag": args.tag,
        "K": args.K,
        "n_entities": args.n_entities,
        "seed": seed,
        "embedder": args.embed,
        "vw_grid": vw_grid,
        "repetitions": args.repetitions,
        "paraphrase": args.paraphrase,
        "retrieval": _retrieval_echo(args),
    }
    artifact = build_artifact(KIND_ROUTER, spec_echo, [cell], seed)
    if args.out:
        write_artifact(args.out, artifact)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(json.dumps(artifact, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_lifecycle_replay(args) -> int:
    if args.quorum_k < 1:
        raise UsageError(f"--quorum-k must be >= 1, got {args.quorum_k}")
    events = read_log(args.log)
    projection = replay_projection(events)
    mode = MODE_STRICT if args.strict else MODE_LENIENT
    states = reduce_events(
        projection.lifecycle_events, mode=mode, deprecate_quorum_k=args.quorum_k
    )
    payload = {
        "log": args.log,
        "mode": mode,
        "quorum_k": args.quorum_k,
        "lifecycle_events": len(projection.lifecycle_events),
        "schemas": {
            sid: {
                "status": st.status,
                "version": st.version,
                "last_window_id": st.last_window_id,
                "pending_deprecate_votes": len(st.pending_deprecate_emitters),
            }
            for sid, st in sorted(states.items())
        },
    }
    _emit(payload, args.out)
    return 0


def cmd_store_verify(args) -> int:
    events = read_log(args.log)
    projection = replay_projection(events)
    active = sum(1 for m in projection.rows.values() if m.state == STATE_ACTIVE)
    suppressed = sum(
        1 for m in projection.rows.values() if m.state == STATE_SUPPRESSED
    )
    payload = {
        "log": args.log,
        "events": len(events),
        "counts_by_kind": dict(sorted(projection.counts_by_kind.items())),
        "memories": len(projection.rows),
        "active": active,
        "suppressed": suppressed,
        "lifecycle_events": len(projection.lifecycle_events),
    }
    _emit(payload, args.out)
    return 0


def cmd_verify_registry(args) -> int:
    failures = verify_registry(args.registry)
    if failures:
        for failure in failures:
            print(f"FAIL {failure}", file=sys.stderr)
        return 1
    print("registry verified")
    return 0


def cmd_report(args) -> int:
    paths = render_report(args.artifacts, args.out_dir)
    for name in ("tsv", "delta_fig", "hit_fig"):
        print(f"wrote {paths[name]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recallbench",
        description="Collision-benchmark evaluation for hybrid agent memory.",
        epilog=f"Seed resolution: --seed, then ${SEED_ENV}, then {DEFAULT_SEED}.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="write one collision corpus as JSON")
    p_gen.add_argument("--tag", required=True)
    p_gen.add_argument("--K", type=int, required=True)
    p_gen.add_argument("--n-entities", type=int, default=32)
    p_gen.add_argument("--seed", type=int, default=None)
    p_gen.add_argument("--paraphrase", action="store_true")
    p_gen.add_argument("--out", default=None)
    p_gen.set_defaults(func=cmd_generate)

    p_sweep = sub.add_parser("sweep", help="paired two-arm sweep over tag x K")
    p_sweep.add_argument("--tag", nargs="+", default=None,
                         help="tags to sweep (default: all)")
    p_sweep.add_argument("--K", type=int, nargs="+", default=list(VALID_K))
    p_sweep.add_argument("--n-entities", type=int, default=32)
    p_sweep.add_argument("--embed", default="hash",
                         help="hash, hash:<dim>, oracle, or precomputed:<path>")
    p_sweep.add_argument("--vw", type=float, nargs=2, required=True,
                         metavar=("VW_A", "VW_B"))
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--repetitions", type=int, default=1)
    p_sweep.add_argument("--resamples", type=int, default=2000)
    p_sweep.add_argument("--paraphrase", action="store_true")
    p_sweep.add_argument("--workers", type=int, default=None)
    p_sweep.add_argument("--out", required=True)
    _add_retrieval_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_router = sub.add_parser("router", help="vw oracle and threshold policy")
    p_router.add_argument("--tag", required=True)
    p_router.add_argument("--K", type=int, required=True)
    p_router.add_argument("--n-entities", type=int, default=32)
    p_router.add_argument("--embed", default="hash")
    p_router.add_argument("--vw-grid", type=float, nargs="+", required=True)
    p_router.add_argument("--signal", choices=SIGNAL_NAMES, default="norm_gap")
    p_router.add_argument("--tau", type=float, default=None,
                          help="evaluate a threshold policy at this cut")
    p_router.add_argument("--low-vw", type=float, default=None)
    p_router.add_argument("--high-vw", type=float, default=None)
    p_router.add_argument("--seed", type=int, default=None)
    p_router.add_argument("--repetitions", type=int, default=1)
    p_router.add_argument("--resamples", type=int, default=2000)
    p_router.add_argument("--paraphrase", action="store_true")
    p_router.add_argument("--out", default=None)
    _add_retrieval_flags(p_router)
    p_router.set_defaults(func=cmd_router)

    p_replay = sub.add_parser("lifecycle-replay",
                              help="fold a log's lifecycle events")
    p_replay.add_argument("--log", required=True)
    p_replay.add_argument("--quorum-k", type=int, default=1)
    p_replay.add_argument("--strict", action="store_true")
    p_replay.add_argument("--out", default=None)
    p_replay.set_defaults(func=cmd_lifecycle_replay)

    p_verify = sub.add_parser("store-verify",
                              help="parse and replay a write log")
    p_verify.add_argument("--log", required=True)
    p_verify.add_argument("--out", default=None)
    p_verify.set_defaults(func=cmd_store_verify)

    p_reg = sub.add_parser("verify-registry",
                           help="check claim -> artifact rows")
    p_reg.add_argument("registry")
    p_reg.set_defaults(func=cmd_verify_registry)

    p_report = sub.add_parser("report",
                              help="render sweep artifacts to TSV + figures")
    p_report.add_argument("artifacts", nargs="+")
    p_report.add_argument("--out-dir", default="report")
    p_report.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except MissingVectorError as exc:
        print(f"error: no precomputed vector for text: {exc.text!r}", file=sys.stderr)
        return 1
    except (RecallBenchError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
