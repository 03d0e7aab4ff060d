"""Tests for the vector exporter; the consuming package's loader is the
reference reader for the file format."""

import base64

import numpy as np
import pytest

from embed_export import (
    ExportManifest,
    HashProjectionEncoder,
    escape_text,
    export_file,
    export_vectors,
    read_text_list,
    resolve_encoder,
    unescape_text,
)
from embed_export.cli import main as cli_main

TEXTS = [
    "alice uses postgres for the main database",
    "bob uses redis for the cache",
    "carol tracks deploys in grafana",
]


def write_texts(tmp_path, texts=TEXTS, name="texts.txt"):
    path = tmp_path / name
    path.write_text("".join(escape_text(t) + "\n" for t in texts), encoding="utf-8")
    return str(path)


class TestEncoders:
    def test_resolve_hashproj(self):
        encoder = resolve_encoder("hashproj:64")
        assert encoder.dim == 64
        assert encoder.name == "hashproj:64"

    def test_resolve_rejects_unknown(self):
        with pytest.raises(ValueError):
            resolve_encoder("word2vec:300")
        with pytest.raises(ValueError):
            resolve_encoder("hashproj:many")
        with pytest.raises(ValueError):
            resolve_encoder("st:")

    def test_hashproj_is_deterministic_and_unit_norm(self):
        a = HashProjectionEncoder(96)
        b = HashProjectionEncoder(96)
        va = a.encode("postgres handles the main database")
        vb = b.encode("postgres handles the main database")
        assert np.array_equal(va, vb)
        assert np.linalg.norm(va) == pytest.approx(1.0, abs=1e-9)

    def test_hashproj_distinguishes_texts(self):
        enc = HashProjectionEncoder(96)
        sim = float(np.dot(enc.encode("postgres database"), enc.encode("redis cache")))
        assert sim < 0.5

    def test_empty_text_is_zero_vector(self):
        enc = HashProjectionEncoder(32)
        assert np.linalg.norm(enc.encode("")) == 0.0


class TestTextList:
    def test_round_trips_escaped_texts(self, tmp_path):
        gnarly = ["plain text", "tab\there", "newline\nhere", "back\\slash"]
        path = write_texts(tmp_path, gnarly)
        assert read_text_list(path) == gnarly

    def test_duplicate_text_named_in_error(self, tmp_path):
        path = write_texts(tmp_path, ["same text", "other", "same text"])
        with pytest.raises(ValueError, match="same text"):
            read_text_list(path)

    def test_escape_round_trip(self):
        for text in ("a\tb", "a\nb", "a\\b", "a\rb", "plain"):
            assert unescape_text(escape_text(text)) == text


class TestExportFile:
    def test_header_arity_and_entry_count(self, tmp_path):
        out = tmp_path / "vectors.vec"
        encoder = resolve_encoder("hashproj:384")
        count = export_file(write_texts(tmp_path), str(out), encoder)
        assert count == 3
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "dim=384 count=3 encoder=hashproj:384"
        assert len(lines) == 4

    def test_entries_preserve_input_order(self, tmp_path):
        out = tmp_path / "vectors.vec"
        export_file(write_texts(tmp_path), str(out), resolve_encoder("hashproj:16"))
        body = out.read_text(encoding="utf-8").splitlines()[1:]
        assert [line.split("\t")[0] for line in body] == TEXTS

    def test_every_entry_is_unit_norm(self, tmp_path):
        out = tmp_path / "vectors.vec"
        export_file(write_texts(tmp_path), str(out), resolve_encoder("hashproj:48"))
        for line in out.read_text(encoding="utf-8").splitlines()[1:]:
            data = line.split("\t", 1)[1]
            vec = np.frombuffer(base64.b64decode(data), dtype="<f4")
            assert float(np.linalg.norm(vec)) == pytest.approx(1.0, abs=1e-6)

    def test_double_export_is_byte_identical(self, tmp_path):
        texts = write_texts(tmp_path)
        encoder = resolve_encoder("hashproj:64")
        a = tmp_path / "a.vec"
        b = tmp_path / "b.vec"
        export_file(texts, str(a), encoder)
        export_file(texts, str(b), encoder)
        assert a.read_bytes() == b.read_bytes()

    def test_expect_dim_mismatch_aborts(self, tmp_path):
        with pytest.raises(ValueError, match="dim=32"):
            export_file(write_texts(tmp_path), str(tmp_path / "x.vec"),
                        resolve_encoder("hashproj:32"), expect_dim=384)

    def test_duplicate_input_aborts_before_writing(self, tmp_path):
        path = write_texts(tmp_path, ["twice", "twice"])
        out = tmp_path / "x.vec"
        with pytest.raises(ValueError, match="twice"):
            export_file(path, str(out), resolve_encoder("hashproj:16"))
        assert not out.exists()


class TestManifest:
    def test_manifest_runs_export(self, tmp_path):
        out = tmp_path / "m.vec"
        manifest = ExportManifest(
            encoder="hashproj:128", dim=128,
            texts_path=write_texts(tmp_path), out_path=str(out),
        )
        assert export_vectors(manifest) == 3
        assert out.read_text(encoding="utf-8").startswith("dim=128 count=3 ")

    def test_manifest_dim_must_match_encoder(self, tmp_path):
        manifest = ExportManifest(
            encoder="hashproj:128", dim=384,
            texts_path=write_texts(tmp_path), out_path=str(tmp_path / "m.vec"),
        )
        with pytest.raises(ValueError):
            export_vectors(manifest)

    def test_unnormalized_export_is_not_a_thing(self, tmp_path):
        with pytest.raises(ValueError):
            ExportManifest(
                encoder="hashproj:16", dim=16,
                texts_path="t.txt", out_path="o.vec", normalize=False,
            )


class TestLoaderRoundTrip:
    """The consuming package's loader is the format's reference reader."""

    def test_round_trip_preserves_direction(self, tmp_path):
        loader_mod = pytest.importorskip("recallbench.embedders")
        out = tmp_path / "vectors.vec"
        encoder = resolve_encoder("hashproj:64")
        export_file(write_texts(tmp_path), str(out), encoder)
        loaded = loader_mod.load_precomputed_vectors(str(out))
        assert len(loaded) == 3
        assert loaded.dim == 64
        assert loaded.encoder == "hashproj:64"
        for text in TEXTS:
            sim = loader_mod.cosine(loaded.embed(text), encoder.encode(text))
            assert abs(sim - 1.0) <= 1e-6

    def test_loader_rejects_contradicted_dim(self, tmp_path):
        loader_mod = pytest.importorskip("recallbench.embedders")
        out = tmp_path / "vectors.vec"
        export_file(write_texts(tmp_path), str(out), resolve_encoder("hashproj:64"))
        with pytest.raises(ValueError, match="dim"):
            loader_mod.load_precomputed_vectors(str(out), expected_dim=384)

    def test_gnarly_texts_survive_the_full_loop(self, tmp_path):
        loader_mod = pytest.importorskip("recallbench.embedders")
        gnarly = ["tab\there", "newline\nhere", "back\\slash end"]
        out = tmp_path / "vectors.vec"
        encoder = resolve_encoder("hashproj:32")
        export_file(write_texts(tmp_path, gnarly), str(out), encoder)
        loaded = loader_mod.load_precomputed_vectors(str(out))
        for text in gnarly:
            assert text in loaded


class TestCli:
    def test_happy_path(self, tmp_path, capsys):
        out = tmp_path / "cli.vec"
        code = cli_main([
            "--texts", write_texts(tmp_path), "--out", str(out),
            "--encoder", "hashproj:64",
        ])
        assert code == 0
        assert "wrote 3 vectors (dim=64)" in capsys.readouterr().out
        assert out.exists()

    def test_dim_flag_mismatch_fails(self, tmp_path, capsys):
        code = cli_main([
            "--texts", write_texts(tmp_path), "--out", str(tmp_path / "x.vec"),
            "--encoder", "hashproj:64", "--dim", "384",
        ])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_encoder_fails(self, tmp_path, capsys):
        code = cli_main([
            "--texts", write_texts(tmp_path), "--out", str(tmp_path / "x.vec"),
            "--encoder", "elmo:big",
        ])
        assert code == 1
        assert "unknown encoder" in capsys.readouterr().err
