"""Batch sentence-embedding export into the precomputed-vector file format."""

from .encoders import HashProjectionEncoder, SentenceTransformerEncoder, resolve_encoder
from .exporter import (
    ExportManifest,
    escape_text,
    export_file,
    export_vectors,
    read_text_list,
    unescape_text,
    write_vector_file,
)

__all__ = [
    "ExportManifest",
    "HashProjectionEncoder",
    "SentenceTransformerEncoder",
    "escape_text",
    "export_file",
    "export_vectors",
    "read_text_list",
    "resolve_encoder",
    "unescape_text",
    "write_vector_file",
]
