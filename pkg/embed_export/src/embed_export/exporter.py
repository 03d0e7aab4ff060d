"""Batch export of text vectors into the precomputed-vector file format.

The output format is the interface to the consuming retrieval package:

    dim=<d> count=<n> encoder=<name>
    <escaped text>\\t<base64 of little-endian float32>

One entry per input line, order preserved. Text fields escape backslash,
tab, newline, and carriage return as \\\\ \\t \\n \\r, so an entry line
always holds exactly one literal tab. The input text list uses the same
escaping, one text per line.

Vectors are unit-normalized before writing, always; the format has no
unnormalized variant.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass

import numpy as np

_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}


def escape_text(text: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


def unescape_text(escaped: str) -> str:
    out: list = []
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


@dataclass(frozen=True)
class ExportManifest:
    """One export run: where the texts come from, what encodes them, where
    the vectors go."""

    encoder: str
    dim: int
    texts_path: str
    out_path: str
    normalize: bool = True

    def __post_init__(self):
        if not self.normalize:
            raise ValueError("the vector file format only holds normalized vectors")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")


def read_text_list(path: str) -> list:
    """One escaped text per line; duplicates are an input error."""
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        lines = fh.read().splitlines()
    texts = [unescape_text(line) for line in lines]
    seen = set()
    for text in texts:
        if text in seen:
            raise ValueError(f"duplicate input text: {text!r}")
        seen.add(text)
    return texts


def _encode_vector(vec: np.ndarray) -> str:
    return base64.b64encode(np.asarray(vec, dtype="<f4").tobytes()).decode("ascii")


def write_vector_file(path: str, entries: list, encoder_name: str, dim: int) -> None:
    """entries: (text, unit vector) pairs, written in the given order."""
    if any(ch.isspace() for ch in encoder_name):
        raise ValueError(f"encoder name must not contain whitespace: {encoder_name!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"dim={dim} count={len(entries)} encoder={encoder_name}\n")
        for text, vec in entries:
            fh.write(f"{escape_text(text)}\t{_encode_vector(vec)}\n")


def export_file(texts_path: str, out_path: str, encoder, expect_dim: int | None = None) -> int:
    """Encode every text in ``texts_path`` and write the vector file.

    Returns the number of entries written. ``expect_dim`` guards against
    wiring the wrong encoder into a pipeline that promised another width.
    """
    if expect_dim is not None and encoder.dim != expect_dim:
        raise ValueError(
            f"encoder {encoder.name} has dim={encoder.dim}, expected {expect_dim}"
        )
    texts = read_text_list(texts_path)
    vectors = encoder.encode_batch(texts)
    entries = []
    for text, vec in zip(texts, vectors):
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (encoder.dim,):
            raise ValueError(
                f"encoder returned shape {vec.shape} for dim={encoder.dim}"
            )
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            vec = vec / norm
        entries.append((text, vec))
    write_vector_file(out_path, entries, encoder.name, encoder.dim)
    return len(entries)


def export_vectors(manifest: ExportManifest) -> int:
    """Run one manifest; the manifest dim must match the encoder exactly."""
    from .encoders import resolve_encoder

    encoder = resolve_encoder(manifest.encoder)
    return export_file(
        manifest.texts_path, manifest.out_path, encoder, expect_dim=manifest.dim
    )
