"""Entity-mining query expansion and its safety gates."""

import pytest

from recallbench.prf import ExpansionDecision, choose_expansion_entity


def decide(pool, query="what does alice use", **overrides):
    kwargs = dict(
        min_dominance=0.3,
        top_k_for_prf=10,
        max_entities=4,
        idf_min_rarity=None,
        anchor_share_max=0.5,
        rarity_fn=lambda entity: 1.0,
    )
    kwargs.update(overrides)
    return choose_expansion_entity(pool, query, **kwargs)


class TestGates:
    def test_empty_pool(self):
        decision = decide([])
        assert decision.reason == "empty pool"
        assert decision.expanded_query is None
        assert decision.pool_size == 0

    def test_no_candidates_when_pool_is_all_stopwords(self):
        decision = decide(["the and of", "is it to"])
        assert decision.reason == "no candidates"
        assert decision.expanded_query is None
        assert decision.pool_size == 2

    def test_expansion_appends_dominant_entity(self):
        pool = [
            "alice uses postgres daily",
            "postgres replica lagged",
            "postgres upgrade planned",
            "bob tried sqlite once",
            "carol ships golang services",
            "dana likes tea breaks",
            "erin rides bikes",
            "frank collects stamps",
        ]
        decision = decide(pool, query="what does alice use")
        assert decision.reason == "expanded"
        assert decision.top_entity == "postgres"
        assert decision.top_count == 3
        assert decision.expanded_query == "what does alice use postgres"

    def test_anchor_share_gate_blocks_crowding(self):
        # 3 of 4 pool docs mention the same entity: share 0.75 > 0.5.
        pool = [
            "postgres primary db",
            "postgres replica db",
            "postgres backup db",
            "unrelated note here",
        ]
        decision = decide(pool)
        assert decision.reason == "anchor share exceeded"
        assert decision.top_entity == "postgres"
        assert decision.expanded_query is None

    def test_anchor_share_uses_actual_pool_size(self):
        # Share is over the docs actually present, not the configured k.
        pool = ["postgres notes", "postgres again", "other thing entirely"]
        decision = decide(pool, anchor_share_max=0.5, min_dominance=0.1)
        assert decision.top_count == 2
        assert decision.pool_size == 3
        assert decision.reason == "anchor share exceeded"

    def test_dominance_gate_compares_against_configured_pool(self):
        # top_count 2 < 0.3 * 10 blocks even though the share is modest.
        pool = [
            "postgres first mention",
            "postgres second sighting",
            "alpha aardvark",
            "beta bobcat",
            "gamma gecko",
            "delta dingo",
            "epsilon emu",
        ]
        decision = decide(pool, min_dominance=0.3, top_k_for_prf=10)
        assert decision.reason == "below dominance"
        assert decision.expanded_query is None

    def test_rarity_filter_runs_before_truncation(self):
        # With a candidate cap of 1, a frequency-first truncation would keep
        # only the common term and then filter it to nothing; filtering
        # first leaves the rare term standing.
        pool = [
            "common rare",
            "common thing",
            "common other",
            "common stuff",
            "common filler",
            "common more",
        ]
        decision = decide(
            pool,
            idf_min_rarity=0.5,
            rarity_fn=lambda e: 0.9 if e == "rare" else 0.1,
            max_entities=1,
            min_dominance=0.05,
            anchor_share_max=0.9,
        )
        assert decision.reason == "expanded"
        assert decision.top_entity == "rare"

    def test_frequency_ties_break_alphabetically(self):
        pool = ["zebra apple", "zebra apple", "zebra apple"]
        decision = decide(pool, min_dominance=0.05, anchor_share_max=1.0)
        assert decision.top_entity == "apple"

    def test_query_tokens_are_eligible_candidates(self):
        # Mining does not exclude query terms; a dominant query echo can be
        # chosen (and then blocked only by the share gate if crowded).
        pool = ["alice postgres", "alice sqlite", "alice redis", "other row", "more rows"]
        decision = decide(pool, query="alice", min_dominance=0.05, anchor_share_max=0.7)
        assert decision.top_entity == "alice"
        assert decision.expanded_query == "alice alice"

    def test_decision_is_frozen(self):
        decision = decide([])
        with pytest.raises(AttributeError):
            decision.reason = "other"
