"""Metrics and inference: hit@k, MRR, paired bootstrap CIs, interaction
estimates, and the vector-weight routing oracle with threshold policies.

All intervals are percentile bootstrap (2.5/97.5) on the mean of per-query
statistics, resampling query indices with replacement under a fixed seed.
Significance means the interval excludes zero.

The interaction statistic for four matched arms (control, lever P only,
lever R only, both) is

    (CB - C0) - ((CP - C0) + (CR - C0))

computed per draw with ONE shared index vector applied to all four arms,
so the resampled queries stay matched across arms.

Routing signals are computed from the pre-routing lexical channel:
raw_gap = bm25_top1 - bm25_top2, norm_gap = raw_gap / max(bm25_top1, eps),
and crowd095 = number of candidates whose min-max-normalized fused score
is >= 0.95.  A threshold policy picks high_vw when signal < tau, else
low_vw.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIGNAL_EPS = 1e-9


@dataclass(frozen=True)
class PairedResult:
    """Per-query indicator pairs for two arms over identical queries."""

    query_ids: tuple
    a: tuple
    b: tuple
    label_a: str = "A"
    label_b: str = "B"

    def __post_init__(self):
        if not (len(self.query_ids) == len(self.a) == len(self.b)):
            raise ValueError("query_ids, a, b must have equal length")

    @property
    def n(self) -> int:
        return len(self.query_ids)

    def diffs(self) -> np.ndarray:
        return np.asarray(self.b, dtype=float) - np.asarray(self.a, dtype=float)


def pool_results(cells: list[PairedResult]) -> PairedResult:
    """Concatenate matched cells (e.g. repetitions) into one paired set."""
    if not cells:
        raise ValueError("cannot pool zero cells")
    qids: list = []
    a: list = []
    b: list = []
    for idx, cell in enumerate(cells):
        qids.extend(f"r{idx}:{qid}" for qid in cell.query_ids)
        a.extend(cell.a)
        b.extend(cell.b)
    return PairedResult(
        query_ids=tuple(qids), a=tuple(a), b=tuple(b),
        label_a=cells[0].label_a, label_b=cells[0].label_b,
    )


@dataclass(frozen=True)
class CIReport:
    point: float
    lo: float
    hi: float
    resamples: int
    seed: int
    n: int
    significant: bool

    def to_json(self) -> dict:
        return {
            "point": self.point,
            "ci_lo": self.lo,
            "ci_hi": self.hi,
            "resamples": self.resamples,
            "seed": self.seed,
            "n": self.n,
            "significant": self.significant,
        }


def hit_at_k(gold_rank: int | None, k: int) -> int:
    """gold_rank is 0-based, None when gold is absent from the ranking."""
    return 1 if gold_rank is not None and gold_rank < k else 0


def mrr(gold_ranks: list) -> float:
    """Mean reciprocal rank over 0-based gold ranks (None counts 0)."""
    if not gold_ranks:
        raise ValueError("mrr over zero queries is undefined")
    total = sum(1.0 / (r + 1) for r in gold_ranks if r is not None)
    return total / len(gold_ranks)


def _percentile_ci(draws: np.ndarray) -> tuple[float, float]:
    lo, hi = np.percentile(draws, [2.5, 97.5])
    return float(lo), float(hi)


def paired_bootstrap_ci(
    pairs: PairedResult, resamples: int = 10000, seed: int = 0
) -> CIReport:
    """Percentile CI on mean(B - A) with query-level resampling."""
    n = pairs.n
    if n < 1:
        raise ValueError("paired_bootstrap_ci requires at least one pair")
    if resamples < 1:
        raise ValueError(f"resamples must be >= 1, got {resamples}")
    diffs = pairs.diffs()
    point = float(diffs.mean())
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(resamples, n))
    draws = diffs[idx].mean(axis=1)
    lo, hi = _percentile_ci(draws)
    return CIReport(
        point=point, lo=lo, hi=hi, resamples=resamples, seed=seed, n=n,
        significant=not (lo <= 0.0 <= hi),
    )


def interaction_ci(
    c0: PairedResult,
    cp: PairedResult,
    cr: PairedResult,
    cb: PairedResult,
    resamples: int = 10000,
    seed: int = 0,
) -> CIReport:
    """Super-additivity CI across four matched arms sharing one resample index.

    Each PairedResult here carries the same baseline indicators in slot a
    and the arm's indicators in slot b; only slot b differs across arms.
    The statistic uses the arm indicator lists directly.
    """
    qids = c0.query_ids
    for arm in (cp, cr, cb):
        if arm.query_ids != qids:
            raise ValueError("interaction arms must share identical query ids")
    n = len(qids)
    if n < 1:
        raise ValueError("interaction_ci requires at least one query")
    h0 = np.asarray(c0.b, dtype=float)
    hp = np.asarray(cp.b, dtype=float)
    hr = np.asarray(cr.b, dtype=float)
    hb = np.asarray(cb.b, dtype=float)
    per_query = (hb - h0) - ((hp - h0) + (hr - h0))
    point = float(per_query.mean())
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(resamples, n))
    draws = per_query[idx].mean(axis=1)
    lo, hi = _percentile_ci(draws)
    return CIReport(
        point=point, lo=lo, hi=hi, resamples=resamples, seed=seed, n=n,
        significant=not (lo <= 0.0 <= hi),
    )


@dataclass(frozen=True)
class RouterReport:
    oracle_hit1: float
    static_best_vw: float
    static_best_hit1: float
    headroom: float

    def to_json(self) -> dict:
        return {
            "oracle_hit1": self.oracle_hit1,
            "static_best_vw": self.static_best_vw,
            "static_best_hit1": self.static_best_hit1,
            "headroom": self.headroom,
        }


def router_oracle(per_query_hits: dict) -> RouterReport:
    """Per-query best-arm upper bound vs the best static vector weight.

    per_query_hits maps vw -> indicator list; all lists must be matched and
    equally long.  Static-best ties resolve to the smaller vw.
    """
    if not per_query_hits:
        raise ValueError("router_oracle requires at least one arm")
    vws = sorted(per_query_hits)
    lengths = {len(per_query_hits[vw]) for vw in vws}
    if len(lengths) != 1:
        raise ValueError("router arms must cover identical query sets")
    n = lengths.pop()
    if n < 1:
        raise ValueError("router_oracle requires at least one query")
    matrix = np.asarray([per_query_hits[vw] for vw in vws], dtype=float)
    oracle = float(matrix.max(axis=0).mean())
    means = matrix.mean(axis=1)
    best_idx = int(np.argmax(means))  # argmax takes the first = smallest vw on ties
    return RouterReport(
        oracle_hit1=oracle,
        static_best_vw=float(vws[best_idx]),
        static_best_hit1=float(means[best_idx]),
        headroom=oracle - float(means[best_idx]),
    )


def route_by_threshold(signals: list, tau: float, low_vw: float, high_vw: float) -> list:
    """Pick high_vw when the signal is below tau, else low_vw."""
    return [high_vw if s < tau else low_vw for s in signals]


def threshold_policy_eval(
    signals: list,
    tau: float,
    low_vw: float,
    high_vw: float,
    per_query_hits: dict,
    resamples: int = 10000,
    seed: int = 0,
) -> dict:
    """Score a single-signal threshold policy against the best static arm.

    Signals must be recorded before routing.  Returns the policy hit rate,
    the chosen arm per query, and a paired CI of policy minus static best.
    """
    report = router_oracle(per_query_hits)
    choices = route_by_threshold(signals, tau, low_vw, high_vw)
    n = len(signals)
    arm_lengths = {len(v) for v in per_query_hits.values()}
    if arm_lengths != {n}:
        raise ValueError("signals and hit arms must cover identical query sets")
    policy_hits = [per_query_hits[choice][i] for i, choice in enumerate(choices)]
    static_hits = per_query_hits[report.static_best_vw]
    pairs = PairedResult(
        query_ids=tuple(range(n)),
        a=tuple(static_hits),
        b=tuple(policy_hits),
        label_a=f"static vw={report.static_best_vw}",
        label_b=f"policy tau={tau}",
    )
    ci = paired_bootstrap_ci(pairs, resamples=resamples, seed=seed)
    return {
        "policy_hit1": float(np.mean(policy_hits)),
        "static_best_vw": report.static_best_vw,
        "static_best_hit1": report.static_best_hit1,
        "delta_ci": ci,
        "choices": choices,
    }


def routing_signals(candidates: list) -> dict:
    """Pre-routing signals from one ranked candidate list.

    raw_gap and norm_gap read the lexical channel's top margin; crowd095
    counts candidates whose min-max-normalized fused score is >= 0.95.
    """
    bm25_scores = sorted(
        (c.bm25_raw for c in candidates if c.bm25_rank >= 0), reverse=True
    )
    top1 = bm25_scores[0] if bm25_scores else 0.0
    top2 = bm25_scores[1] if len(bm25_scores) > 1 else 0.0
    raw_gap = top1 - top2
    norm_gap = raw_gap / max(top1, SIGNAL_EPS)
    fused = [c.fused for c in candidates]
    crowd = 0
    if fused:
        lo, hi = min(fused), max(fused)
        if hi == lo:
            crowd = len(fused)
        else:
            crowd = sum(1 for f in fused if (f - lo) / (hi - lo) >= 0.95)
    return {"raw_gap": raw_gap, "norm_gap": norm_gap, "crowd095": crowd}
