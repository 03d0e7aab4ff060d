"""Versioned result artifacts and the claim registry.

An artifact is a single JSON document: schema version, a spec echo of the
run parameters, the per-cell results, and an environment stamp.  Everything
outside the stamp is a pure function of the command arguments, so re-running
a command reproduces the file byte-for-byte except the stamp block.

The registry is a tab-separated file of claim -> artifact-path rows; a row's
path is resolved relative to the registry file.  Verification checks that
every listed path exists and parses as an artifact.
"""

from __future__ import annotations

import datetime
import json
import os
import platform

SCHEMA_VERSION = 1

KIND_SWEEP = "sweep"
KIND_ROUTER = "router"
VALID_KINDS = frozenset({KIND_SWEEP, KIND_ROUTER})

# Keys every artifact must carry to count as parseable for the registry.
REQUIRED_KEYS = ("schema_version", "kind", "spec", "cells", "environment")


def environment_stamp(seed: int) -> dict:
    """The one block allowed to differ between reruns of the same command."""
    return {
        "artifact_version": SCHEMA_VERSION,
        "seed": seed,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "python": platform.python_version(),
        "platform": platform.platform(),
    }


def build_artifact(kind: str, spec_echo: dict, cells: list, seed: int) -> dict:
    if kind not in VALID_KINDS:
        raise ValueError(f"unknown artifact kind: {kind!r}")
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "spec": spec_echo,
        "cells": cells,
        "environment": environment_stamp(seed),
    }


def artifact_core(artifact: dict) -> dict:
    """Everything that must be byte-stable across reruns."""
    return {k: v for k, v in artifact.items() if k != "environment"}


def dumps_artifact(artifact: dict) -> str:
    return json.dumps(artifact, indent=2, sort_keys=True) + "\n"


def write_artifact(path: str, artifact: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_artifact(artifact))


def read_artifact(path: str) -> dict:
    """Parse and structurally validate one artifact file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"{path}: artifact root must be a JSON object")
    missing = [k for k in REQUIRED_KEYS if k not in data]
    if missing:
        raise ValueError(f"{path}: missing artifact keys: {', '.join(missing)}")
    if data["schema_version"] != SCHEMA_VERSION:
        raise ValueError(
            f"{path}: schema_version {data['schema_version']!r} not supported "
            f"(expected {SCHEMA_VERSION})"
        )
    if data["kind"] not in VALID_KINDS:
        raise ValueError(f"{path}: unknown artifact kind: {data['kind']!r}")
    if not isinstance(data["cells"], list):
        raise ValueError(f"{path}: cells must be a list")
    return data


def parse_registry(text: str) -> list:
    """claim<TAB>path rows; blank lines and # comments are skipped."""
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "\t" not in stripped:
            raise ValueError(f"registry line {lineno}: expected claim<TAB>path, got {line!r}")
        claim, path = stripped.split("\t", 1)
        claim = claim.strip()
        path = path.strip()
        if not claim or not path:
            raise ValueError(f"registry line {lineno}: empty claim or path")
        rows.append((claim, path))
    return rows


def verify_registry(registry_path: str) -> list:
    """Return failure messages, one per bad row; empty means verified."""
    with open(registry_path, "r", encoding="utf-8") as fh:
        rows = parse_registry(fh.read())
    base = os.path.dirname(os.path.abspath(registry_path))
    failures = []
    for claim, rel_path in rows:
        path = rel_path if os.path.isabs(rel_path) else os.path.join(base, rel_path)
        if not os.path.exists(path):
            failures.append(f"{claim}: missing artifact {path}")
            continue
        try:
            read_artifact(path)
        except ValueError as exc:
            failures.append(f"{claim}: corrupt artifact: {exc}")
    return failures
