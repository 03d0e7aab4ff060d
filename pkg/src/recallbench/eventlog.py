"""Append-only write-event log: the single source of durable truth.

Every record is one line of canonical JSON (sorted keys, compact separators)
with the shape {"event_id", "kind", "payload", "seq"}.  seq starts at 1 and
increases by exactly 1 per append; event ids are derived from seq.

Appends are serialized by an in-process mutex plus an advisory flock on the
file descriptor.  The flock is taken non-blocking with a bounded retry loop;
if it cannot be acquired the append raises LockUnavailable instead of
stalling the caller.  Multi-process writers are not a supported deployment,
the flock just turns an accidental second writer into a loud error.

On open, the whole file is validated.  A torn final record (partial line,
malformed JSON, seq gap) raises TornLogError carrying the 1-based line
number, because silently resuming after a torn tail would fork history.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from typing import Iterator

try:
    import fcntl
except ImportError:  # non-POSIX fallback; in-process mutex still applies
    fcntl = None

from .errors import LockUnavailable, TornLogError

KIND_REMEMBER = "REMEMBER"
KIND_SUPPRESS = "SUPPRESS"
KIND_LIFECYCLE = "LIFECYCLE"
VALID_KINDS = frozenset({KIND_REMEMBER, KIND_SUPPRESS, KIND_LIFECYCLE})

_LOCK_RETRIES = 50
_LOCK_RETRY_SLEEP = 0.01


@dataclass(frozen=True)
class WriteEvent:
    event_id: str
    kind: str
    payload: dict
    seq: int


def _encode(event: WriteEvent) -> str:
    record = {
        "event_id": event.event_id,
        "kind": event.kind,
        "payload": event.payload,
        "seq": event.seq,
    }
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def _event_id_for(seq: int) -> str:
    return f"e{seq:08d}"


class EventLog:
    """Append-only event sequence, file-backed or in-memory.

    With a path, every append is written and flushed before the call
    returns; without one the log lives only in this process (useful for
    ephemeral evaluation stores).
    """

    def __init__(self, path: str | None = None):
        self.path = path
        self._mutex = threading.Lock()
        self._events: list[WriteEvent] = []
        self._fh = None
        if path is not None:
            existing = self._load_existing(path)
            self._events.extend(existing)
            self._fh = open(path, "a", encoding="utf-8", newline="\n")

    @staticmethod
    def _parse_line(line: str, lineno: int, path: str) -> WriteEvent:
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TornLogError(path, lineno, f"malformed JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise TornLogError(path, lineno, "record is not an object")
        missing = {"event_id", "kind", "payload", "seq"} - set(record)
        if missing:
            raise TornLogError(path, lineno, f"missing fields: {sorted(missing)}")
        if record["kind"] not in VALID_KINDS:
            raise TornLogError(path, lineno, f"unknown kind: {record['kind']!r}")
        if not isinstance(record["payload"], dict):
            raise TornLogError(path, lineno, "payload is not an object")
        return WriteEvent(
            event_id=record["event_id"],
            kind=record["kind"],
            payload=record["payload"],
            seq=record["seq"],
        )

    @classmethod
    def _load_existing(cls, path: str) -> list[WriteEvent]:
        if not os.path.exists(path):
            return []
        events: list[WriteEvent] = []
        with open(path, "r", encoding="utf-8", newline="") as fh:
            data = fh.read()
        if not data:
            return []
        if not data.endswith("\n"):
            lineno = data.count("\n") + 1
            raise TornLogError(path, lineno, "final record has no newline (torn write)")
        for lineno, line in enumerate(data.splitlines(), start=1):
            event = cls._parse_line(line, lineno, path)
            if event.seq != lineno:
                raise TornLogError(
                    path, lineno, f"seq {event.seq} out of order (expected {lineno})"
                )
            events.append(event)
        return events

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self) -> Iterator[WriteEvent]:
        return iter(self._events)

    def events(self) -> list[WriteEvent]:
        return list(self._events)

    def _acquire_flock(self):
        if self._fh is None or fcntl is None:
            return False
        for _ in range(_LOCK_RETRIES):
            try:
                fcntl.flock(self._fh.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
                return True
            except OSError:
                time.sleep(_LOCK_RETRY_SLEEP)
        raise LockUnavailable(
            f"could not lock {self.path} after {_LOCK_RETRIES} attempts"
        )

    def append(self, kind: str, payload: dict) -> WriteEvent:
        """Append one event; returns it with its assigned seq."""
        if kind not in VALID_KINDS:
            raise ValueError(f"unknown event kind: {kind!r}")
        with self._mutex:
            seq = len(self._events) + 1
            event = WriteEvent(
                event_id=_event_id_for(seq), kind=kind, payload=payload, seq=seq
            )
            if self._fh is not None:
                locked = self._acquire_flock()
                try:
                    self._fh.write(_encode(event) + "\n")
                    self._fh.flush()
                    os.fsync(self._fh.fileno())
                finally:
                    if locked:
                        fcntl.flock(self._fh.fileno(), fcntl.LOCK_UN)
            self._events.append(event)
            return event

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "EventLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_log(path: str) -> list[WriteEvent]:
    """Validate and parse a log file without opening it for append."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"no event log at {path}")
    return EventLog._load_existing(path)
