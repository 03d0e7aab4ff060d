"""Tests for the sweep report renderer (TSV plus figures)."""

import os

import pytest

from recallbench.artifacts import build_artifact, write_artifact
from recallbench.report import TSV_COLUMNS, render_report, write_tsv

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def sweep_cell(tag, collision_k, delta=0.1, hit_a=0.4):
    return {
        "tag": tag,
        "K": collision_k,
        "n": 64,
        "label_a": "vw=0.0",
        "label_b": "vw=0.5",
        "hit_at_1_a": hit_a,
        "hit_at_1_b": hit_a + delta,
        "delta": delta,
        "ci_lo": delta - 0.05,
        "ci_hi": delta + 0.05,
        "significant": delta > 0.05,
    }


@pytest.fixture
def sweep_path(tmp_path):
    cells = [
        sweep_cell("service", 4),
        sweep_cell("service", 16, delta=0.02),
        sweep_cell("tool", 4, delta=0.0, hit_a=0.25),
    ]
    artifact = build_artifact("sweep", {"tags": ["service", "tool"]}, cells, 42)
    path = str(tmp_path / "sweep.json")
    write_artifact(path, artifact)
    return path


class TestRenderReport:
    def test_writes_tsv_and_two_figures(self, sweep_path, tmp_path):
        out_dir = str(tmp_path / "out")
        paths = render_report([sweep_path], out_dir)
        assert set(paths) == {"tsv", "delta_fig", "hit_fig"}
        assert os.path.basename(paths["tsv"]) == "report.tsv"
        assert os.path.basename(paths["delta_fig"]) == "delta_vs_k.png"
        assert os.path.basename(paths["hit_fig"]) == "hit_vs_k.png"
        for path in paths.values():
            assert os.path.exists(path)
        for key in ("delta_fig", "hit_fig"):
            with open(paths[key], "rb") as fh:
                assert fh.read(8) == PNG_MAGIC
            assert os.path.getsize(paths[key]) > 1000

    def test_tsv_rows_sorted_by_tag_then_k(self, sweep_path, tmp_path):
        out_dir = str(tmp_path / "out")
        paths = render_report([sweep_path], out_dir)
        with open(paths["tsv"], "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        assert lines[0] == "\t".join(TSV_COLUMNS)
        rows = [line.split("\t") for line in lines[1:]]
        assert [(r[0], int(r[1])) for r in rows] == [
            ("service", 4), ("service", 16), ("tool", 4),
        ]

    def test_tsv_cell_values(self, sweep_path, tmp_path):
        paths = render_report([sweep_path], str(tmp_path / "out"))
        with open(paths["tsv"], "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        header = lines[0].split("\t")
        first = dict(zip(header, lines[1].split("\t")))
        assert first["tag"] == "service"
        assert first["K"] == "4"
        assert first["n"] == "64"
        assert first["hit_at_1_a"] == "0.400000"
        assert first["hit_at_1_b"] == "0.500000"
        assert first["delta"] == "0.100000"
        assert first["significant"] == "true"

    def test_merges_multiple_artifacts(self, sweep_path, tmp_path):
        other = build_artifact("sweep", {}, [sweep_cell("project", 8)], 42)
        other_path = str(tmp_path / "other.json")
        write_artifact(other_path, other)
        paths = render_report([sweep_path, other_path], str(tmp_path / "out"))
        with open(paths["tsv"], "r", encoding="utf-8") as fh:
            body = fh.read().splitlines()[1:]
        assert len(body) == 4
        assert body[0].startswith("project\t8\t")

    def test_rejects_router_artifacts(self, tmp_path):
        artifact = build_artifact("router", {}, [], 42)
        path = str(tmp_path / "router.json")
        write_artifact(path, artifact)
        with pytest.raises(ValueError, match="sweep artifacts"):
            render_report([path], str(tmp_path / "out"))

    def test_rejects_empty_inputs(self, tmp_path):
        with pytest.raises(ValueError, match="at least one artifact"):
            render_report([], str(tmp_path / "out"))
        empty = build_artifact("sweep", {}, [], 42)
        path = str(tmp_path / "empty.json")
        write_artifact(path, empty)
        with pytest.raises(ValueError, match="no cells"):
            render_report([path], str(tmp_path / "out"))

    def test_creates_output_directory(self, sweep_path, tmp_path):
        nested = str(tmp_path / "a" / "b")
        paths = render_report([sweep_path], nested)
        assert os.path.isdir(nested)
        assert os.path.exists(paths["tsv"])


class TestWriteTsv:
    def test_bool_and_float_formatting(self, tmp_path):
        path = str(tmp_path / "cells.tsv")
        write_tsv([sweep_cell("tool", 2, delta=0.0, hit_a=0.5)], path)
        with open(path, "r", encoding="utf-8") as fh:
            row = fh.read().splitlines()[1].split("\t")
        record = dict(zip(TSV_COLUMNS, row))
        assert record["significant"] == "false"
        assert record["delta"] == "0.000000"
        assert record["label_b"] == "vw=0.5"
