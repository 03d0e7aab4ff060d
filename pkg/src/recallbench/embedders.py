"""Deterministic text-to-vector providers.

Two providers share one tiny interface (``dim`` attribute + ``embed(text)``):

* :class:`HashTrigramEmbedder` — signed bag of character trigrams, hashed into
  a fixed number of buckets and L2-normalized. Pure function of (text, dim).
* :class:`PrecomputedVectors` — exact-string lookup into vectors exported
  offline (dense encoders live outside this process). Unknown text is an
  error, never a silent fallback.

The hash is FNV-1a 64-bit; constants are pinned here so vectors are
reproducible across runs and platforms. The sign of each trigram's
contribution comes from bit 63 of the same hash.
"""

from __future__ import annotations

import base64
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import MissingVectorError

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash of ``data``."""
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def trigrams(text: str) -> list[str]:
    """Character trigrams of each whitespace token, wrapped in '^'/'$' markers.

    Every non-empty token yields at least one window ('a' -> '^a$'); an empty
    or whitespace-only text yields no trigrams at all.
    """
    grams: list[str] = []
    for token in text.lower().split():
        wrapped = f"^{token}$"
        grams.extend(wrapped[i : i + 3] for i in range(len(wrapped) - 2))
    return grams


@lru_cache(maxsize=1 << 18)
def _bucket_sign(gram: str, dim: int) -> tuple[int, float]:
    h = fnv1a64(gram.encode("utf-8"))
    return h % dim, (1.0 if (h >> 63) & 1 == 0 else -1.0)


def hash_trigram_embed(text: str, dim: int) -> np.ndarray:
    """Signed bag-of-trigrams embedding, L2-normalized float64 vector."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    vec = np.zeros(dim, dtype=np.float64)
    for gram in trigrams(text):
        bucket, sign = _bucket_sign(gram, dim)
        vec[bucket] += sign
    norm = math.sqrt(float(np.dot(vec, vec)))
    if norm > 0.0:
        vec /= norm
    return vec


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; 0.0 when either side is the zero vector."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dim mismatch: {a.shape} vs {b.shape}")
    na = math.sqrt(float(np.dot(a, a)))
    nb = math.sqrt(float(np.dot(b, b)))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b)) / (na * nb)


@dataclass(frozen=True)
class HashTrigramEmbedder:
    dim: int = 256

    def embed(self, text: str) -> np.ndarray:
        return hash_trigram_embed(text, self.dim)


# ---------------------------------------------------------------------------
# Precomputed-vector file format
#
#   dim=<d> count=<n> encoder=<name>
#   <escaped text>\t<base64 of little-endian float32>
#
# Text escaping: backslash, tab, newline, carriage return become
# \\ \t \n \r, so the raw text field never contains a literal tab or line
# break. Entries are one per line, order preserved. Writers and the loader
# below round-trip byte-exactly.
# ---------------------------------------------------------------------------

_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}


def escape_text(text: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


def unescape_text(escaped: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(escaped):
        ch = escaped[i]
        if ch == "\\":
            if i + 1 >= len(escaped):
                raise ValueError("dangling escape at end of text field")
            nxt = escaped[i + 1]
            if nxt not in _UNESCAPES:
                raise ValueError(f"unknown escape sequence: \\{nxt}")
            out.append(_UNESCAPES[nxt])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def encode_vector(vec: np.ndarray) -> str:
    return base64.b64encode(np.asarray(vec, dtype="<f4").tobytes()).decode("ascii")


def decode_vector(data: str, dim: int) -> np.ndarray:
    raw = base64.b64decode(data.encode("ascii"), validate=True)
    vec = np.frombuffer(raw, dtype="<f4")
    if vec.shape[0] != dim:
        raise ValueError(f"vector has {vec.shape[0]} floats, header says dim={dim}")
    return vec.astype(np.float64)


class PrecomputedVectors:
    """Immutable exact-text vector lookup."""

    def __init__(self, dim: int, encoder: str, mapping: dict[str, np.ndarray]):
        self.dim = dim
        self.encoder = encoder
        self._mapping = {t: np.asarray(v, dtype=np.float64) for t, v in mapping.items()}

    def __len__(self) -> int:
        return len(self._mapping)

    def __contains__(self, text: str) -> bool:
        return text in self._mapping

    def embed(self, text: str) -> np.ndarray:
        try:
            return self._mapping[text]
        except KeyError:
            raise MissingVectorError(text) from None

    @classmethod
    def from_mapping(cls, mapping: dict[str, np.ndarray], encoder: str = "inline") -> "PrecomputedVectors":
        dims = {np.asarray(v).shape[0] for v in mapping.values()}
        if len(dims) != 1:
            raise ValueError(f"mixed vector dims in mapping: {sorted(dims)}")
        return cls(dims.pop(), encoder, mapping)


def parse_vector_header(line: str) -> tuple[int, int, str]:
    fields = dict(part.split("=", 1) for part in line.strip().split(" ") if "=" in part)
    try:
        return int(fields["dim"]), int(fields["count"]), fields["encoder"]
    except (KeyError, ValueError) as exc:
        raise ValueError(f"bad vector-file header: {line!r}") from exc


def load_precomputed_vectors(path: str, expected_dim: int | None = None) -> PrecomputedVectors:
    """Load the vector file at ``path``; reject a dim that contradicts ``expected_dim``."""
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        header = fh.readline()
        if not header:
            raise ValueError(f"{path}: empty vector file")
        dim, count, encoder = parse_vector_header(header)
        if expected_dim is not None and dim != expected_dim:
            raise ValueError(f"{path}: file dim={dim} does not match configured dim={expected_dim}")
        mapping: dict[str, np.ndarray] = {}
        for i, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                escaped, data = line.split("\t", 1)
            except ValueError:
                raise ValueError(f"{path}:{i}: entry has no tab separator") from None
            text = unescape_text(escaped)
            if text in mapping:
                raise ValueError(f"{path}:{i}: duplicate text entry: {text!r}")
            mapping[text] = decode_vector(data, dim)
    if len(mapping) != count:
        raise ValueError(f"{path}: header count={count} but file holds {len(mapping)} entries")
    return PrecomputedVectors(dim, encoder, mapping)


def save_precomputed_vectors(path: str, entries: list[tuple[str, np.ndarray]], encoder: str) -> None:
    """Write the vector file format; entry order is preserved as given."""
    if not entries:
        raise ValueError("refusing to write an empty vector file")
    dims = {np.asarray(v).shape[0] for _, v in entries}
    if len(dims) != 1:
        raise ValueError(f"mixed vector dims: {sorted(dims)}")
    seen: set[str] = set()
    for text, _ in entries:
        if text in seen:
            raise ValueError(f"duplicate text entry: {text!r}")
        seen.add(text)
    dim = dims.pop()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"dim={dim} count={len(entries)} encoder={encoder}\n")
        for text, vec in entries:
            fh.write(f"{escape_text(text)}\t{encode_vector(vec)}\n")
