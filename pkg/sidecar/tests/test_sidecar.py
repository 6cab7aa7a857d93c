"""Sidecar conformance: byte protocol, SSQLEMB1 output (validated through
the engine's own reader), and error behavior of the real CLI."""

from __future__ import annotations

import json
import struct
import subprocess
import sys

import numpy as np
import pytest

from ssql_sidecar.models import DummyModel, ModelLoadError, load_model
from ssql_sidecar.protocol import write_embedding_file, write_vector_reply

SIDECAR = [sys.executable, "-m", "ssql_sidecar"]


def run_sidecar(args, stdin_bytes=b"", check=False):
    return subprocess.run(
        SIDECAR + args,
        input=stdin_bytes,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        check=check,
    )


class TestProtocol:
    def test_vector_reply_layout(self, tmp_path):
        import io

        stream = io.BytesIO()
        write_vector_reply(stream, np.array([1.0, -2.0, 0.5], dtype=np.float32))
        raw = stream.getvalue()
        assert struct.unpack_from("<I", raw, 0)[0] == 3
        assert struct.unpack_from("<3f", raw, 4) == (1.0, -2.0, 0.5)
        assert len(raw) == 4 + 3 * 4

    def test_embedding_file_size_arithmetic(self, tmp_path):
        model = DummyModel(16)
        records = [(i, model.embed_text(f"item {i}")) for i in range(1, 8)]
        out = tmp_path / "vectors.emb"
        write_embedding_file(out, 16, records)
        assert out.stat().st_size == 20 + 7 * (8 + 16 * 4)

    def test_duplicate_id_rejected(self, tmp_path):
        model = DummyModel(8)
        records = [(1, model.embed_text("a")), (1, model.embed_text("b"))]
        with pytest.raises(ValueError):
            write_embedding_file(tmp_path / "x.emb", 8, records)


class TestModels:
    def test_dummy_text_deterministic(self):
        model = load_model("dummy:32")
        a = model.embed_text("a photo of a cat")
        b = model.embed_text("a photo of a cat")
        assert np.array_equal(a, b)
        assert a.dtype == np.float32 and a.shape == (32,)

    def test_dummy_distinct_texts_differ(self):
        model = load_model("dummy:32")
        assert not np.array_equal(
            model.embed_text("a photo of a cat"), model.embed_text("a photo of a dog")
        )

    def test_unknown_kind(self):
        with pytest.raises(ModelLoadError):
            load_model("magic:3")

    def test_bad_dummy_dim(self):
        with pytest.raises(ModelLoadError):
            load_model("dummy:banana")


class TestEmbedTextCli:
    def test_emits_protocol_bytes(self):
        proc = run_sidecar(["embed-text", "--model", "dummy:24"], b"a photo of a cat\n")
        assert proc.returncode == 0, proc.stderr
        (dim,) = struct.unpack_from("<I", proc.stdout, 0)
        assert dim == 24
        assert len(proc.stdout) == 4 + 24 * 4
        values = np.frombuffer(proc.stdout[4:], dtype="<f4")
        assert np.isfinite(values).all()

    def test_identical_input_identical_bytes(self):
        first = run_sidecar(["embed-text", "--model", "dummy:24"], b"same text\n")
        second = run_sidecar(["embed-text", "--model", "dummy:24"], b"same text\n")
        assert first.stdout == second.stdout

    def test_empty_input_nonzero_exit(self):
        proc = run_sidecar(["embed-text", "--model", "dummy:24"], b"\n")
        assert proc.returncode != 0
        assert b"no input" in proc.stderr

    def test_bad_model_nonzero_exit_with_diagnostics(self):
        proc = run_sidecar(["embed-text", "--model", "nope:1"], b"hello\n")
        assert proc.returncode != 0
        assert b"model load failed" in proc.stderr

    def test_engine_consumes_the_sidecar(self):
        # the primary's subprocess client drives the real sidecar CLI
        from ssql.embedding import external_embed

        out = external_embed(
            SIDECAR + ["embed-text", "--model", "dummy:24"], "a photo of a cat", 24
        )
        assert out.dim == 24
        direct = DummyModel(24).embed_text("a photo of a cat")
        assert np.array_equal(out.values, direct)


class TestEmbedImagesCli:
    @pytest.fixture
    def image_dir(self, tmp_path):
        directory = tmp_path / "imgs"
        directory.mkdir()
        for name in ("a.png", "b.png", "c.png"):
            (directory / name).write_bytes(b"\x89PNG fake " + name.encode())
        return directory

    def test_writes_valid_embedding_file(self, image_dir, tmp_path):
        mapping = {"a.png": 1, "b.png": 2, "c.png": 3}
        ids_path = tmp_path / "ids.json"
        ids_path.write_text(json.dumps(mapping))
        out = tmp_path / "vectors.emb"
        proc = run_sidecar([
            "embed-images", "--model", "dummy:16",
            "--dir", str(image_dir), "--out", str(out), "--ids", str(ids_path),
        ])
        assert proc.returncode == 0, proc.stderr
        assert json.loads(proc.stdout) == {"records": 3, "skipped": 0, "dim": 16}
        # exact size from the format definition
        assert out.stat().st_size == 20 + 3 * (8 + 16 * 4)
        # the engine's reader accepts the file
        from ssql.embedding import read_embeddings

        dim, records = read_embeddings(out)
        assert dim == 16
        assert [r.image_id for r in records] == [1, 2, 3]

    def test_missing_file_warns_and_skips(self, image_dir, tmp_path):
        mapping = {"a.png": 1, "ghost.png": 9}
        ids_path = tmp_path / "ids.json"
        ids_path.write_text(json.dumps(mapping))
        out = tmp_path / "vectors.emb"
        proc = run_sidecar([
            "embed-images", "--model", "dummy:16",
            "--dir", str(image_dir), "--out", str(out), "--ids", str(ids_path),
        ])
        assert proc.returncode == 0
        assert b"skipping ghost.png" in proc.stderr
        assert json.loads(proc.stdout)["records"] == 1

    def test_duplicate_mapping_id_fails(self, image_dir, tmp_path):
        ids_path = tmp_path / "ids.json"
        ids_path.write_text(json.dumps({"a.png": 1, "b.png": 1}))
        proc = run_sidecar([
            "embed-images", "--model", "dummy:16",
            "--dir", str(image_dir), "--out", str(tmp_path / "x.emb"), "--ids", str(ids_path),
        ])
        assert proc.returncode != 0
        assert b"duplicate" in proc.stderr

    def test_zero_embedded_fails(self, image_dir, tmp_path):
        ids_path = tmp_path / "ids.json"
        ids_path.write_text(json.dumps({"ghost.png": 1}))
        proc = run_sidecar([
            "embed-images", "--model", "dummy:16",
            "--dir", str(image_dir), "--out", str(tmp_path / "x.emb"), "--ids", str(ids_path),
        ])
        assert proc.returncode != 0
        assert b"no image could be embedded" in proc.stderr

    def test_index_built_from_sidecar_file_serves_queries(self, image_dir, tmp_path):
        # full loop: sidecar file -> engine index -> subset scoring
        from ssql.embedding import normalize, read_embeddings
        from ssql.index import FlatIndex
        from ssql_sidecar.models import DummyModel

        mapping = {"a.png": 1, "b.png": 2, "c.png": 3}
        ids_path = tmp_path / "ids.json"
        ids_path.write_text(json.dumps(mapping))
        out = tmp_path / "vectors.emb"
        run_sidecar([
            "embed-images", "--model", "dummy:16",
            "--dir", str(image_dir), "--out", str(out), "--ids", str(ids_path),
        ], check=True)
        dim, records = read_embeddings(out)
        index = FlatIndex.build(records, dim=dim)
        query = normalize(records[0].vector)
        top = index.top_k(query, 1)
        assert top[0].image_id == 1
        assert top[0].score == pytest.approx(1.0, abs=1e-6)


CLIP_CHECKPOINT = "openai/clip-vit-base-patch32"


def _clip_available() -> bool:
    try:
        load_model(f"clip:{CLIP_CHECKPOINT}")
        return True
    except ModelLoadError:
        return False


@pytest.mark.skipif(not _clip_available(), reason="pretrained weights not available locally")
class TestClipModel:
    def test_text_embedding_shape_and_determinism(self):
        model = load_model(f"clip:{CLIP_CHECKPOINT}")
        a = model.embed_text("a photo of a cat")
        b = model.embed_text("a photo of a cat")
        assert a.shape == (model.dim,)
        assert np.isfinite(a).all()
        assert np.array_equal(a, b)

    def test_text_pair_shapes(self):
        model = load_model(f"clip:{CLIP_CHECKPOINT}")
        cat = model.embed_text("a photo of a cat")
        dog = model.embed_text("a photo of a dog")
        assert cat.shape == dog.shape == (model.dim,)
