"""Render sweep artifacts to a delimited summary plus figures.

Reads one or more sweep artifacts and writes, into an output directory:

- report.tsv: one row per cell (tag, K, both arm hit rates, delta, CI).
- delta_vs_k.png: per-tag delta curves over K with CI whiskers.
- hit_vs_k.png: per-tag hit@1 curves for both arms over K.

Figures use the Agg backend so rendering works headless.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .artifacts import KIND_SWEEP, read_artifact

TSV_COLUMNS = (
    "tag",
    "K",
    "n",
    "label_a",
    "label_b",
    "hit_at_1_a",
    "hit_at_1_b",
    "delta",
    "ci_lo",
    "ci_hi",
    "significant",
)


def _load_cells(artifact_paths: list) -> list:
    cells = []
    for path in artifact_paths:
        artifact = read_artifact(path)
        if artifact["kind"] != KIND_SWEEP:
            raise ValueError(f"{path}: report needs sweep artifacts, got kind={artifact['kind']!r}")
        cells.extend(artifact["cells"])
    cells.sort(key=lambda c: (c["tag"], c["K"]))
    return cells


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def write_tsv(cells: list, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(TSV_COLUMNS) + "\n")
        for cell in cells:
            fh.write("\t".join(_format(cell[col]) for col in TSV_COLUMNS) + "\n")


def _by_tag(cells: list) -> dict:
    groups: dict = {}
    for cell in cells:
        groups.setdefault(cell["tag"], []).append(cell)
    for rows in groups.values():
        rows.sort(key=lambda c: c["K"])
    return groups


def plot_delta_vs_k(cells: list, path: str) -> None:
    groups = _by_tag(cells)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for tag, rows in sorted(groups.items()):
        ks = [c["K"] for c in rows]
        deltas = [c["delta"] for c in rows]
        lo_err = [c["delta"] - c["ci_lo"] for c in rows]
        hi_err = [c["ci_hi"] - c["delta"] for c in rows]
        ax.errorbar(ks, deltas, yerr=[lo_err, hi_err], marker="o", capsize=3, label=tag)
    ax.axhline(0.0, color="gray", linewidth=0.8, linestyle="--")
    ax.set_xscale("log", base=2)
    ax.set_xticks(sorted({c["K"] for c in cells}))
    ax.get_xaxis().set_major_formatter(plt.ScalarFormatter())
    ax.set_xlabel("collision degree K")
    ax.set_ylabel("delta hit@1 (arm B - arm A)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_hit_vs_k(cells: list, path: str) -> None:
    groups = _by_tag(cells)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for tag, rows in sorted(groups.items()):
        ks = [c["K"] for c in rows]
        ax.plot(ks, [c["hit_at_1_a"] for c in rows], marker="o", linestyle="--",
                label=f"{tag} {rows[0]['label_a']}")
        ax.plot(ks, [c["hit_at_1_b"] for c in rows], marker="s",
                label=f"{tag} {rows[0]['label_b']}")
    ax.set_xscale("log", base=2)
    ax.set_xticks(sorted({c["K"] for c in cells}))
    ax.get_xaxis().set_major_formatter(plt.ScalarFormatter())
    ax.set_ylim(0.0, 1.05)
    ax.set_xlabel("collision degree K")
    ax.set_ylabel("hit@1")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_report(artifact_paths: list, out_dir: str) -> dict:
    """Write the TSV and both figures; returns the output file paths."""
    if not artifact_paths:
        raise ValueError("report needs at least one artifact path")
    cells = _load_cells(artifact_paths)
    if not cells:
        raise ValueError("artifacts contain no cells to report")
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "tsv": os.path.join(out_dir, "report.tsv"),
        "delta_fig": os.path.join(out_dir, "delta_vs_k.png"),
        "hit_fig": os.path.join(out_dir, "hit_vs_k.png"),
    }
    write_tsv(cells, paths["tsv"])
    plot_delta_vs_k(cells, paths["delta_fig"])
    plot_hit_vs_k(cells, paths["hit_fig"])
    return paths
