"""Access-control grants and visibility scope resolution.

A scope is either None (no filtering: every row is visible) or a set of
agent ids whose rows are visible.  The empty-string agent id marks
system-owned rows and is always included in a restricted scope, so scoped
readers still see shared system memories.

The same resolved scope must be applied to every read surface (both
retrieval channels, expansion-term mining, rarity statistics, reranker
pools, and write-time dedup), otherwise per-surface leaks become
cross-agent ranking signals.  Callers get the scope from resolve_scope and
pass it down; nothing below this module looks at grants directly.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import PermissionDenied

SCOPE_OWN = "OWN"
SCOPE_ALL = "ALL"


@dataclass(frozen=True)
class Grant:
    actor: str
    scope: str = SCOPE_OWN
    federated: bool = False

    def __post_init__(self):
        if self.scope not in (SCOPE_OWN, SCOPE_ALL):
            raise ValueError(f"grant scope must be OWN or ALL, got {self.scope!r}")


def resolve_scope(
    actor: str,
    grants: dict[str, Grant] | None,
    acl_enabled: bool,
) -> set[str] | None:
    """Resolve an actor's visibility set; None means unfiltered.

    With ACL off everything is visible.  With ACL on, an unknown actor is
    rejected; an OWN grant restricts to {actor, ""} unless the grant is
    federated, which widens back to everything.
    """
    if not acl_enabled:
        return None
    grant = (grants or {}).get(actor)
    if grant is None:
        raise PermissionDenied(f"no grant for actor {actor!r}")
    if grant.scope == SCOPE_ALL or grant.federated:
        return None
    return {actor, ""}
