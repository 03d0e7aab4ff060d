"""Memory row types and storage-policy configuration."""

from __future__ import annotations

from dataclasses import dataclass, field

TYPE_EPISODE = "EPISODE"
TYPE_FACT = "FACT"
TYPE_SCHEMA = "SCHEMA"
MEMORY_TYPES = frozenset({TYPE_EPISODE, TYPE_FACT, TYPE_SCHEMA})

STATE_ACTIVE = "ACTIVE"
STATE_SUPPRESSED = "SUPPRESSED"


def clamp01(value: float) -> float:
    return 0.0 if value < 0.0 else 1.0 if value > 1.0 else value


@dataclass(frozen=True)
class Memory:
    """One stored memory row.  agent_id "" marks system-owned rows."""

    id: str
    agent_id: str
    memory_type: str
    text: str
    salience: float
    extraction_confidence: float
    state: str
    created_at: int
    schema_id: str | None = None

    def __post_init__(self):
        if self.memory_type not in MEMORY_TYPES:
            raise ValueError(f"unknown memory type: {self.memory_type!r}")
        if self.state not in (STATE_ACTIVE, STATE_SUPPRESSED):
            raise ValueError(f"unknown memory state: {self.state!r}")
        if not self.text:
            raise ValueError("memory text must be non-empty")
        if not 0.0 <= self.salience <= 1.0:
            raise ValueError(f"salience must be in [0,1], got {self.salience}")
        # Confidence tolerates out-of-range producers by clamping.
        object.__setattr__(
            self, "extraction_confidence", clamp01(float(self.extraction_confidence))
        )
        if (self.schema_id is not None) != (self.memory_type == TYPE_SCHEMA):
            raise ValueError("schema_id must be set exactly when memory_type is SCHEMA")


@dataclass(frozen=True)
class StorageConfig:
    """Write-path policy knobs.

    schema_promote_threshold is carried for forward compatibility with
    confidence-gated promotion; no code path branches on it today.
    """

    write_dedup_threshold: float = 0.92
    merge_threshold: float = 0.95
    dedup_pool_unfiltered: int = 5
    dedup_pool_filtered: int = 32
    merge_pool: int = 20
    acl_enabled: bool = False
    schema_promote_threshold: float = 0.6

    def __post_init__(self):
        for name in ("write_dedup_threshold", "merge_threshold", "schema_promote_threshold"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {value}")
        for name in ("dedup_pool_unfiltered", "dedup_pool_filtered", "merge_pool"):
            value = getattr(self, name)
            if value < 1:
                raise ValueError(f"{name} must be >= 1, got {value}")
