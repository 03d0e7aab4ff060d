"""Event-sourced schema lifecycle: a pure reducer plus a snapshot cache.

Status graph (the only legal transitions):

    CREATE:        (absent)   -> INFERRED
    PROMOTE:       INFERRED   -> PROMOTED
    DEPRECATE:     INFERRED   -> DEPRECATED
    DEPRECATE:     PROMOTED   -> DEPRECATED
    RECOVER:       DEPRECATED -> INFERRED   (only from a window other than
                                             the one that last changed status)
    BUMP_VERSION:  any        -> same status, version + 1

DEPRECATE on an already-DEPRECATED schema is a no-op in both modes, not an
error.  Every other off-graph event is illegal: STRICT mode raises
LifecycleViolation, LENIENT mode drops the event and keeps folding.

Quorum: with deprecate_quorum_k == 1 a DEPRECATE fires immediately.  With
k > 1 each DEPRECATE must carry an emitter id; votes from distinct emitters
accumulate on the schema and the status flips exactly when the k-th
distinct emitter votes.  Duplicate emitters do not advance the ballot.
CREATE, PROMOTE, and RECOVER clear any pending ballot.

last_window_id records the window of the most recent applied status
transition.  Pending quorum votes and BUMP_VERSION do not move it; RECOVER
freshness is judged against the last real status change.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .errors import LifecycleViolation

STATUS_INFERRED = "INFERRED"
STATUS_PROMOTED = "PROMOTED"
STATUS_DEPRECATED = "DEPRECATED"

ACTION_CREATE = "CREATE"
ACTION_PROMOTE = "PROMOTE"
ACTION_DEPRECATE = "DEPRECATE"
ACTION_RECOVER = "RECOVER"
ACTION_BUMP_VERSION = "BUMP_VERSION"

VALID_ACTIONS = frozenset(
    {ACTION_CREATE, ACTION_PROMOTE, ACTION_DEPRECATE, ACTION_RECOVER, ACTION_BUMP_VERSION}
)

MODE_STRICT = "STRICT"
MODE_LENIENT = "LENIENT"


@dataclass(frozen=True)
class LifecycleEvent:
    schema_id: str
    action: str
    window_id: str
    emitter_id: str | None = None

    def __post_init__(self):
        if self.action not in VALID_ACTIONS:
            raise ValueError(f"unknown lifecycle action: {self.action!r}")


@dataclass(frozen=True)
class SchemaState:
    schema_id: str
    status: str
    version: int = 1
    last_window_id: str = ""
    pending_deprecate_emitters: frozenset = field(default_factory=frozenset)


def _illegal(mode: str, message: str) -> None:
    if mode == MODE_STRICT:
        raise LifecycleViolation(message)


def _apply(
    states: dict[str, SchemaState],
    event: LifecycleEvent,
    mode: str,
    quorum_k: int,
) -> None:
    """Apply one event to a mutable state map (reducer step)."""
    sid = event.schema_id
    state = states.get(sid)

    if event.action == ACTION_CREATE:
        if state is not None:
            _illegal(mode, f"CREATE on existing schema {sid}")
            return
        states[sid] = SchemaState(
            schema_id=sid,
            status=STATUS_INFERRED,
            version=1,
            last_window_id=event.window_id,
        )
        return

    if state is None:
        _illegal(mode, f"{event.action} on unknown schema {sid}")
        return

    if event.action == ACTION_BUMP_VERSION:
        states[sid] = replace(state, version=state.version + 1)
        return

    if event.action == ACTION_PROMOTE:
        if state.status != STATUS_INFERRED:
            _illegal(mode, f"PROMOTE on {state.status} schema {sid}")
            return
        states[sid] = replace(
            state,
            status=STATUS_PROMOTED,
            last_window_id=event.window_id,
            pending_deprecate_emitters=frozenset(),
        )
        return

    if event.action == ACTION_DEPRECATE:
        if state.status == STATUS_DEPRECATED:
            return  # no-op in both modes
        if quorum_k <= 1:
            states[sid] = replace(
                state,
                status=STATUS_DEPRECATED,
                last_window_id=event.window_id,
                pending_deprecate_emitters=frozenset(),
            )
            return
        if event.emitter_id is None:
            _illegal(mode, f"DEPRECATE without emitter under quorum k={quorum_k} on {sid}")
            return
        ballot = state.pending_deprecate_emitters | {event.emitter_id}
        if len(ballot) >= quorum_k:
            states[sid] = replace(
                state,
                status=STATUS_DEPRECATED,
                last_window_id=event.window_id,
                pending_deprecate_emitters=frozenset(),
            )
        else:
            states[sid] = replace(state, pending_deprecate_emitters=ballot)
        return

    if event.action == ACTION_RECOVER:
        if state.status != STATUS_DEPRECATED:
            _illegal(mode, f"RECOVER on {state.status} schema {sid}")
            return
        if event.window_id == state.last_window_id:
            _illegal(
                mode,
                f"RECOVER for {sid} from window {event.window_id!r} that deprecated it",
            )
            return
        states[sid] = replace(
            state,
            status=STATUS_INFERRED,
            last_window_id=event.window_id,
            pending_deprecate_emitters=frozenset(),
        )
        return

    raise AssertionError(f"unhandled action {event.action}")


def reduce_events(
    events: Iterable[LifecycleEvent],
    mode: str = MODE_LENIENT,
    deprecate_quorum_k: int = 1,
) -> dict[str, SchemaState]:
    """Fold a lifecycle event sequence into schema states.

    Pure: same events, mode, and quorum always give the same map.
    """
    if mode not in (MODE_STRICT, MODE_LENIENT):
        raise ValueError(f"mode must be STRICT or LENIENT, got {mode!r}")
    if deprecate_quorum_k < 1:
        raise ValueError(f"deprecate_quorum_k must be >= 1, got {deprecate_quorum_k}")
    states: dict[str, SchemaState] = {}
    for event in events:
        _apply(states, event, mode, deprecate_quorum_k)
    return states


class SnapshotCache:
    """Incremental reducer cache keyed by (event count, quorum k, mode).

    Calling snapshot() with a longer prefix of the same append-only event
    sequence folds only the new suffix on top of the cached states; a
    different k or mode forces a full rebuild.  Results are always equal to
    a cold fold of the same inputs, and returned maps are copies so callers
    cannot corrupt the cache.
    """

    def __init__(self):
        self._key: tuple[int, str] | None = None  # (quorum_k, mode)
        self._offset = 0
        self._states: dict[str, SchemaState] = {}

    def snapshot(
        self,
        events: Sequence[LifecycleEvent],
        deprecate_quorum_k: int = 1,
        mode: str = MODE_LENIENT,
    ) -> dict[str, SchemaState]:
        if mode not in (MODE_STRICT, MODE_LENIENT):
            raise ValueError(f"mode must be STRICT or LENIENT, got {mode!r}")
        if deprecate_quorum_k < 1:
            raise ValueError(f"deprecate_quorum_k must be >= 1, got {deprecate_quorum_k}")
        key = (deprecate_quorum_k, mode)
        if self._key != key or self._offset > len(events):
            self._key = key
            self._offset = 0
            self._states = {}
        states = dict(self._states)
        for event in events[self._offset:]:
            _apply(states, event, mode, deprecate_quorum_k)
        self._offset = len(events)
        self._states = states
        return dict(states)
