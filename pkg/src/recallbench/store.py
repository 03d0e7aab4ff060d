"""Governed memory store: event-sourced rows plus derived read state.

All durable truth lives in the event log; the store is a fold over it.
Opening a store on an existing log replays every event through the same
apply function used for live writes, so replayed state and incrementally
built state cannot diverge.

Write governance on remember():

* dedup — before appending, the new text's vector is compared against the
  nearest stored active vectors.  The scan takes the global top-N by cosine
  (N = dedup_pool_filtered when the writer's visibility is actually
  filtered, else dedup_pool_unfiltered), walks them best-first, skips rows
  the writer cannot see and rows that fail to load, and short-circuits on
  the first visible neighbor at or above write_dedup_threshold.  A skipped
  row never suppresses a write.
* merge — a separate mechanical pass over stored rows: any live pair with
  cosine >= merge_threshold and the same owner (exact agent_id equality,
  so "" only merges with "") suppresses the lower-salience row, breaking
  ties toward the later created_at.  The pass is deterministic and
  idempotent; suppression is recorded as a SUPPRESS event, never a delete.

Memory ids are derived from the event seq, so ids, created_at, and replay
order are all the same total order.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .acl import Grant, resolve_scope
from .errors import RecallBenchError
from .eventlog import (
    KIND_LIFECYCLE,
    KIND_REMEMBER,
    KIND_SUPPRESS,
    EventLog,
    WriteEvent,
)
from . import lexical
from .lexical import InvertedIndex, tie_keys_array
from .lifecycle import LifecycleEvent, SchemaState, SnapshotCache
from .memory import (
    STATE_ACTIVE,
    STATE_SUPPRESSED,
    TYPE_EPISODE,
    TYPE_FACT,
    Memory,
    StorageConfig,
    clamp01,
)


def memory_id_for_seq(seq: int) -> str:
    return f"m{seq:08d}"


@dataclass(frozen=True)
class RememberResult:
    """Outcome of a remember call: stored row, or the id it deduped against."""

    memory: Memory | None
    deduped_against: str | None = None

    @property
    def stored(self) -> bool:
        return self.memory is not None


@dataclass
class Projection:
    """Derived read state after folding a write-event prefix."""

    rows: dict[str, Memory] = field(default_factory=dict)
    lifecycle_events: list[LifecycleEvent] = field(default_factory=list)
    events_applied: int = 0
    counts_by_kind: dict[str, int] = field(default_factory=dict)


def _memory_from_event(event: WriteEvent) -> Memory:
    payload = event.payload
    return Memory(
        id=memory_id_for_seq(event.seq),
        agent_id=payload["agent_id"],
        memory_type=payload["memory_type"],
        text=payload["text"],
        salience=payload["salience"],
        extraction_confidence=payload["extraction_confidence"],
        state=STATE_ACTIVE,
        created_at=event.seq,
        schema_id=payload.get("schema_id"),
    )


def replay_projection(events: list[WriteEvent]) -> Projection:
    """Pure fold of a write-event sequence into read state."""
    proj = Projection()
    for event in events:
        proj.counts_by_kind[event.kind] = proj.counts_by_kind.get(event.kind, 0) + 1
        if event.kind == KIND_REMEMBER:
            memory = _memory_from_event(event)
            proj.rows[memory.id] = memory
        elif event.kind == KIND_SUPPRESS:
            target = proj.rows.get(event.payload["memory_id"])
            if target is not None and target.state == STATE_ACTIVE:
                proj.rows[target.id] = Memory(
                    id=target.id,
                    agent_id=target.agent_id,
                    memory_type=target.memory_type,
                    text=target.text,
                    salience=target.salience,
                    extraction_confidence=target.extraction_confidence,
                    state=STATE_SUPPRESSED,
                    created_at=target.created_at,
                    schema_id=target.schema_id,
                )
        elif event.kind == KIND_LIFECYCLE:
            p = event.payload
            proj.lifecycle_events.append(
                LifecycleEvent(
                    schema_id=p["schema_id"],
                    action=p["action"],
                    window_id=p["window_id"],
                    emitter_id=p.get("emitter_id"),
                )
            )
        proj.events_applied += 1
    return proj


class MemoryStore:
    """Event-sourced memory store with governed writes and scoped reads."""

    def __init__(
        self,
        config: StorageConfig | None = None,
        embedder=None,
        grants: dict[str, Grant] | None = None,
        log: EventLog | None = None,
    ):
        if embedder is None:
            raise ValueError("MemoryStore requires an embedder")
        self.config = config or StorageConfig()
        self.embedder = embedder
        self.grants = dict(grants) if grants else {}
        self.log = log if log is not None else EventLog()
        self._write_mutex = threading.RLock()
        self.rows: dict[str, Memory] = {}
        self.lifecycle_events: list[LifecycleEvent] = []
        self.index = InvertedIndex()
        # Vector state lives in one growing float64 buffer so similarity
        # scans are single matrix products instead of per-row Python loops.
        self._vec_ids: list[str] = []
        self._vec_pos: dict[str, int] = {}
        self._vec_buf: np.ndarray | None = None
        self._vec_norms: np.ndarray | None = None
        self._vec_active: np.ndarray | None = None
        self._vec_idhash: np.ndarray | None = None
        self._vec_count = 0
        self._lifecycle_cache = SnapshotCache()
        for event in self.log.events():
            self._apply(event)

    # -- vector buffer --

    def _vec_add(self, memory_id: str, vector: np.ndarray) -> None:
        vector = np.asarray(vector, dtype=np.float64)
        if vector.ndim != 1:
            raise ValueError("embedder must return 1-D vectors")
        if self._vec_buf is None:
            capacity = 64
            self._vec_buf = np.zeros((capacity, vector.shape[0]))
            self._vec_norms = np.zeros(capacity)
            self._vec_active = np.zeros(capacity, dtype=bool)
            self._vec_idhash = np.zeros(capacity, dtype=np.uint64)
        elif vector.shape[0] != self._vec_buf.shape[1]:
            raise ValueError(
                f"vector dim {vector.shape[0]} != store dim {self._vec_buf.shape[1]}"
            )
        if self._vec_count == self._vec_buf.shape[0]:
            self._vec_buf = np.vstack([self._vec_buf, np.zeros_like(self._vec_buf)])
            self._vec_norms = np.concatenate([self._vec_norms, np.zeros_like(self._vec_norms)])
            self._vec_active = np.concatenate(
                [self._vec_active, np.zeros_like(self._vec_active)]
            )
            self._vec_idhash = np.concatenate(
                [self._vec_idhash, np.zeros_like(self._vec_idhash)]
            )
        pos = self._vec_count
        self._vec_buf[pos] = vector
        self._vec_norms[pos] = np.linalg.norm(vector)
        self._vec_active[pos] = True
        self._vec_idhash[pos] = np.uint64(lexical._id_hash(memory_id))
        self._vec_ids.append(memory_id)
        self._vec_pos[memory_id] = pos
        self._vec_count += 1

    def _vec_deactivate(self, memory_id: str) -> None:
        pos = self._vec_pos.get(memory_id)
        if pos is not None:
            self._vec_active[pos] = False

    def active_vector(self, memory_id: str) -> np.ndarray | None:
        pos = self._vec_pos.get(memory_id)
        if pos is None or not self._vec_active[pos]:
            return None
        return self._vec_buf[pos].copy()

    def _vec_sims(self, vector: np.ndarray, positions: np.ndarray) -> np.ndarray:
        """Cosines of `vector` against buffer rows at `positions`."""
        vector = np.asarray(vector, dtype=np.float64)
        qnorm = float(np.linalg.norm(vector))
        if qnorm == 0.0 or positions.size == 0:
            return np.zeros(positions.size)
        sub = self._vec_buf[positions]
        norms = self._vec_norms[positions]
        dots = sub @ vector
        return np.where(norms > 0.0, dots / np.where(norms > 0.0, norms, 1.0) / qnorm, 0.0)

    # -- event application (shared by live writes and replay) --

    def _apply(self, event: WriteEvent) -> Memory | None:
        if event.kind == KIND_REMEMBER:
            memory = _memory_from_event(event)
            self.rows[memory.id] = memory
            self.index.add(memory.id, memory.text, memory.agent_id)
            try:
                self._vec_add(memory.id, self.embedder.embed(memory.text))
            except RecallBenchError:
                # A row without a vector stays searchable lexically; vector
                # surfaces simply never see it.
                pass
            return memory
        if event.kind == KIND_SUPPRESS:
            target_id = event.payload["memory_id"]
            target = self.rows.get(target_id)
            if target is not None and target.state == STATE_ACTIVE:
                self.rows[target_id] = Memory(
                    id=target.id,
                    agent_id=target.agent_id,
                    memory_type=target.memory_type,
                    text=target.text,
                    salience=target.salience,
                    extraction_confidence=target.extraction_confidence,
                    state=STATE_SUPPRESSED,
                    created_at=target.created_at,
                    schema_id=target.schema_id,
                )
                self.index.remove(target_id)
                self._vec_deactivate(target_id)
            return None
        if event.kind == KIND_LIFECYCLE:
            p = event.payload
            self.lifecycle_events.append(
                LifecycleEvent(
                    schema_id=p["schema_id"],
                    action=p["action"],
                    window_id=p["window_id"],
                    emitter_id=p.get("emitter_id"),
                )
            )
            return None
        raise ValueError(f"unknown event kind: {event.kind!r}")

    # -- visibility helpers --

    def _writer_scope(self, agent_id: str) -> set[str] | None:
        """Visibility of the writing agent, used to filter dedup neighbors."""
        if not self.config.acl_enabled:
            return None
        grant = self.grants.get(agent_id)
        if grant is None:
            # System-internal writers (agent "") without an explicit grant
            # see their own rows plus system rows.
            return {agent_id, ""}
        if grant.scope == "ALL" or grant.federated:
            return None
        return {agent_id, ""}

    def visible_scope_for(self, actor: str) -> set[str] | None:
        return resolve_scope(actor, self.grants, self.config.acl_enabled)

    # -- write path --

    def dedup_check(self, vector: np.ndarray, writer_scope: set[str] | None) -> str | None:
        """Return the id of the first visible near-duplicate, or None.

        Scans the global top-N stored active vectors by cosine (N widened
        when the writer's view is filtered), walks them best-first, and
        skips invisible or unloadable rows rather than letting them block
        the write.
        """
        if self._vec_count == 0:
            return None
        positions = np.nonzero(self._vec_active[: self._vec_count])[0]
        if positions.size == 0:
            return None
        pool_size = (
            self.config.dedup_pool_filtered
            if writer_scope is not None
            else self.config.dedup_pool_unfiltered
        )
        sims = self._vec_sims(vector, positions)
        if positions.size > pool_size:
            top = np.argpartition(-sims, pool_size - 1)[:pool_size]
        else:
            top = np.arange(positions.size)
        pool = sorted(
            ((float(sims[i]), self._vec_ids[positions[i]]) for i in top),
            key=lambda item: (-item[0], item[1]),
        )
        for sim, mid in pool:
            if sim < self.config.write_dedup_threshold:
                break  # best-first walk: nothing further can qualify
            row = self.rows.get(mid)
            if row is None or row.state != STATE_ACTIVE:
                continue
            if writer_scope is not None and row.agent_id not in writer_scope:
                continue
            return mid
        return None

    def _write_row(
        self,
        agent_id: str,
        text: str,
        memory_type: str,
        salience: float,
        extraction_confidence: float,
        schema_id: str | None,
        apply_dedup: bool,
    ) -> RememberResult:
        if not text:
            raise ValueError("cannot remember empty text")
        vector = self.embedder.embed(text)
        with self._write_mutex:
            if apply_dedup:
                keeper = self.dedup_check(vector, self._writer_scope(agent_id))
                if keeper is not None:
                    return RememberResult(memory=None, deduped_against=keeper)
            event = self.log.append(
                KIND_REMEMBER,
                {
                    "agent_id": agent_id,
                    "memory_type": memory_type,
                    "text": text,
                    "salience": salience,
                    "extraction_confidence": clamp01(float(extraction_confidence)),
                    "schema_id": schema_id,
                },
            )
            memory = self._apply(event)
            return RememberResult(memory=memory)

    def remember(
        self,
        actor: str,
        text: str,
        memory_type: str = TYPE_FACT,
        salience: float = 0.5,
        extraction_confidence: float = 1.0,
        schema_id: str | None = None,
    ) -> RememberResult:
        """Governed write: ACL check, dedup gate, append, project."""
        if self.config.acl_enabled:
            resolve_scope(actor, self.grants, True)  # raises for unknown actors
        return self._write_row(
            agent_id=actor,
            text=text,
            memory_type=memory_type,
            salience=salience,
            extraction_confidence=extraction_confidence,
            schema_id=schema_id,
            apply_dedup=True,
        )

    def suppress(self, memory_id: str, reason: str) -> None:
        with self._write_mutex:
            if memory_id not in self.rows:
                raise KeyError(f"unknown memory id: {memory_id}")
            event = self.log.append(KIND_SUPPRESS, {"memory_id": memory_id, "reason": reason})
            self._apply(event)

    def append_lifecycle(self, lifecycle_event: LifecycleEvent) -> None:
        with self._write_mutex:
            event = self.log.append(
                KIND_LIFECYCLE,
                {
                    "schema_id": lifecycle_event.schema_id,
                    "action": lifecycle_event.action,
                    "window_id": lifecycle_event.window_id,
                    "emitter_id": lifecycle_event.emitter_id,
                },
            )
            self._apply(event)

    def mechanical_merge_pass(self) -> list[tuple[str, str]]:
        """Suppress near-duplicate same-owner rows; returns (loser, keeper) pairs.

        Rows are visited in created_at order; each row's merge_pool nearest
        live neighbors are checked.  Deterministic, and a second run on the
        resulting state suppresses nothing.
        """
        suppressed: list[tuple[str, str]] = []
        with self._write_mutex:
            alive = {mid for mid, row in self.rows.items() if row.state == STATE_ACTIVE}
            order = sorted(alive, key=lambda mid: self.rows[mid].created_at)
            for mid in order:
                if mid not in alive:
                    continue
                base_vec = self.active_vector(mid)
                if base_vec is None:
                    continue
                base = self.rows[mid]
                others = [
                    other
                    for other in alive
                    if other != mid and self._vec_pos.get(other) is not None
                    and self._vec_active[self._vec_pos[other]]
                ]
                if not others:
                    continue
                positions = np.asarray([self._vec_pos[o] for o in others])
                sims = self._vec_sims(base_vec, positions)
                neighbors = sorted(
                    zip((float(s) for s in sims), others),
                    key=lambda item: (-item[0], item[1]),
                )[: self.config.merge_pool]
                for sim, other in neighbors:
                    if sim < self.config.merge_threshold:
                        break
                    if mid not in alive:
                        break
                    other_row = self.rows[other]
                    if other_row.agent_id != base.agent_id:
                        continue
                    loser, keeper = _merge_loser(base, other_row)
                    self.suppress(loser.id, reason="merge")
                    alive.discard(loser.id)
                    suppressed.append((loser.id, keeper.id))
        return suppressed

    def extract_facts(self, confidence: float = 0.9) -> list[Memory]:
        """Deterministic fact synthesis: copy each active episode into a FACT.

        Facts inherit the episode's owner and salience; confidence comes from
        the caller.  Synthesis bypasses the dedup gate because the source
        episode itself is always a perfect-similarity neighbor.
        """
        created: list[Memory] = []
        with self._write_mutex:
            episodes = sorted(
                (
                    row
                    for row in self.rows.values()
                    if row.state == STATE_ACTIVE and row.memory_type == TYPE_EPISODE
                ),
                key=lambda row: row.created_at,
            )
            for episode in episodes:
                result = self._write_row(
                    agent_id=episode.agent_id,
                    text=episode.text,
                    memory_type=TYPE_FACT,
                    salience=episode.salience,
                    extraction_confidence=confidence,
                    schema_id=None,
                    apply_dedup=False,
                )
                created.append(result.memory)
        return created

    # -- read helpers --

    def active_rows(self) -> list[Memory]:
        return [row for row in self.rows.values() if row.state == STATE_ACTIVE]

    def vector_search(
        self,
        query_vector: np.ndarray,
        limit: int,
        scope: set[str] | None = None,
        tie_seed: int = 0,
        query_key: str = "",
    ) -> list[tuple[str, float]]:
        """Cosine scan over active, visible vectors (one matrix product).

        Scoping happens before the product so rows outside the scope cannot
        perturb visible scores even at the last-ulp level.
        """
        if limit < 1:
            raise ValueError(f"limit must be >= 1, got {limit}")
        if self._vec_count == 0:
            return []
        if scope is None:
            positions = np.nonzero(self._vec_active[: self._vec_count])[0]
        else:
            keep = []
            for pos in range(self._vec_count):
                if not self._vec_active[pos]:
                    continue
                row = self.rows.get(self._vec_ids[pos])
                if row is not None and row.agent_id in scope:
                    keep.append(pos)
            positions = np.asarray(keep, dtype=int)
        if positions.size == 0:
            return []
        sims = self._vec_sims(query_vector, positions)
        keys = tie_keys_array(tie_seed, query_key, self._vec_idhash[positions])
        order = np.lexsort((keys, -sims))[:limit]
        return [(self._vec_ids[positions[pos]], float(sims[pos])) for pos in order]

    def lifecycle_snapshot(
        self, deprecate_quorum_k: int = 1, mode: str = "LENIENT"
    ) -> dict[str, SchemaState]:
        return self._lifecycle_cache.snapshot(
            self.lifecycle_events, deprecate_quorum_k=deprecate_quorum_k, mode=mode
        )

    def projection(self) -> Projection:
        """Cold fold of the full log, for replay-equivalence checks."""
        return replay_projection(self.log.events())

    def stats(self) -> dict:
        rows = list(self.rows.values())
        by_kind: dict[str, int] = {}
        for event in self.log.events():
            by_kind[event.kind] = by_kind.get(event.kind, 0) + 1
        return {
            "events": len(self.log),
            "events_by_kind": by_kind,
            "rows": len(rows),
            "active": sum(1 for r in rows if r.state == STATE_ACTIVE),
            "suppressed": sum(1 for r in rows if r.state == STATE_SUPPRESSED),
            "lifecycle_events": len(self.lifecycle_events),
        }


def _merge_loser(a: Memory, b: Memory) -> tuple[Memory, Memory]:
    """(loser, keeper): lower salience loses; ties suppress the later row."""
    if a.salience != b.salience:
        return (a, b) if a.salience < b.salience else (b, a)
    return (a, b) if a.created_at > b.created_at else (b, a)
