"""CLI flows: ingest, query (including the terminal y/n loop), and eval."""

from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from ssql.cli import main
from ssql.embedding import read_embeddings


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Fixture corpus materialized and ingested through the CLI itself."""
    root = tmp_path_factory.mktemp("cli")
    runner = CliRunner()

    result = runner.invoke(main, ["make-fixture", "--out", str(root / "demo"), "--dim", "64"])
    assert result.exit_code == 0, result.output

    result = runner.invoke(main, [
        "ingest-detections",
        "--coco", str(root / "demo" / "instances.json"),
        "--images-root", str(root / "demo" / "images"),
        "--db", str(root / "catalog.db"),
    ])
    assert result.exit_code == 0, result.output
    assert json.loads(result.output) == {"images": 20, "objects": 50}

    result = runner.invoke(main, [
        "ingest-embeddings",
        "--file", str(root / "demo" / "embeddings.emb"),
        "--index", str(root / "index.emb"),
    ])
    assert result.exit_code == 0, result.output
    assert json.loads(result.output) == {"records": 20, "dim": 64}
    return root


@pytest.fixture
def runner():
    return CliRunner()


def base_args(workspace):
    return ["--db", str(workspace / "catalog.db"), "--index", str(workspace / "index.emb")]


class TestIngest:
    def test_embeddings_file_is_canonical_copy(self, workspace):
        original = (workspace / "demo" / "embeddings.emb").read_bytes()
        ingested = (workspace / "index.emb").read_bytes()
        assert original == ingested
        dim, records = read_embeddings(workspace / "index.emb")
        assert dim == 64 and len(records) == 20

    def test_bad_annotation_file(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"images": []}')
        result = runner.invoke(main, [
            "ingest-detections", "--coco", str(bad),
            "--images-root", str(tmp_path), "--db", str(tmp_path / "db.sqlite"),
        ])
        assert result.exit_code != 0
        assert "annotations" in result.output


class TestQuery:
    def test_relation_output(self, runner, workspace):
        result = runner.invoke(main, [
            "query", *base_args(workspace),
            "SELECT id, COUNT(*) as c FROM objects WHERE class_name='horse' "
            "GROUP BY id HAVING c = 4",
        ])
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        assert payload == {"kind": "relation", "columns": ["id", "c"], "rows": [[6, 4]]}

    def test_topk_output(self, runner, workspace):
        result = runner.invoke(main, [
            "query", *base_args(workspace),
            "SELECT DISTINCT id FROM objects SEMANTIC 'four horses' LIMIT 2",
        ])
        payload = json.loads(result.output)
        assert payload["kind"] == "topk"
        assert payload["items"][0]["image_id"] == 6

    def test_terminal_calibration_loop(self, runner, workspace):
        result = runner.invoke(
            main,
            [
                "query", *base_args(workspace),
                "SELECT DISTINCT id FROM objects WHERE class_name='horse' "
                "SEMANTIC 'two horses'",
            ],
            input="y\nn\ny\n",
        )
        assert result.exit_code == 0, result.output
        # probes print as file paths read from the catalog
        assert ".png" in result.output
        final = json.loads(result.output.strip().splitlines()[-1])
        assert final["kind"] == "calibration_results"
        assert final["questions_asked"] <= 3
        assert all(isinstance(i, int) for i in final["image_ids"])

    def test_syntax_error_exit_code(self, runner, workspace):
        result = runner.invoke(main, ["query", *base_args(workspace), "SELEC id"])
        assert result.exit_code != 0
        assert "Error" in result.output


class TestEval:
    def test_pairs_suite_writes_report(self, runner, workspace, tmp_path):
        report_path = tmp_path / "pairs.json"
        result = runner.invoke(main, [
            "eval", "--suite", "pairs", *base_args(workspace),
            "--k", "3", "--report", str(report_path),
        ])
        assert result.exit_code == 0, result.output
        doc = json.loads(report_path.read_text())
        assert doc["suite"] == "pairs"
        assert doc["trials"] == 7

    def test_count_suite_with_classes(self, runner, workspace, tmp_path):
        report_path = tmp_path / "count.json"
        result = runner.invoke(main, [
            "eval", "--suite", "count", *base_args(workspace),
            "--classes", "horse,car", "--report", str(report_path),
        ])
        assert result.exit_code == 0, result.output
        doc = json.loads(report_path.read_text())
        assert doc["trials"] == 6

    def test_spatial_threshold_flag(self, runner, workspace, tmp_path):
        report_path = tmp_path / "spatial.json"
        result = runner.invoke(main, [
            "eval", "--suite", "spatial", *base_args(workspace),
            "--classes", "car", "--spatial-threshold", "340",
            "--report", str(report_path),
        ])
        assert result.exit_code == 0, result.output
        doc = json.loads(report_path.read_text())
        assert doc["trials"] == 2
