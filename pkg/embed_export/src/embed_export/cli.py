"""Command-line entry point: encode a text list into a vector file."""

from __future__ import annotations

import argparse
import sys

from .encoders import resolve_encoder
from .exporter import ExportManifest, export_vectors


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="Encode a text list (one escaped text per line) into a "
                    "precomputed-vector file.",
    )
    parser.add_argument("--texts", required=True, help="input text list path")
    parser.add_argument("--out", required=True, help="output vector file path")
    parser.add_argument("--encoder", default="hashproj:384",
                        help="st:<model> or hashproj:<dim> (default hashproj:384)")
    parser.add_argument("--dim", type=int, default=None,
                        help="expected width; must equal the encoder's dim")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        encoder = resolve_encoder(args.encoder)
        manifest = ExportManifest(
            encoder=args.encoder,
            dim=args.dim if args.dim is not None else encoder.dim,
            texts_path=args.texts,
            out_path=args.out,
            normalize=True,
        )
        count = export_vectors(manifest)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {count} vectors (dim={manifest.dim}) to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
