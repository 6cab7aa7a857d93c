"""Acceptance gate: one test per exit criterion, each printing a PASS/FAIL
line with its elapsed time. Run with `pytest tests/test_acceptance.py -v -s`.

Criteria and tolerances are pinned here; nothing is deferred to later
calibration. The pair-query success rate reported upstream (608/2124 on a
private 20k-image sample with a pretrained model) is intentionally NOT
reproduced: it depends on data and weights this repo does not ship. Its
stand-in is the frozen stub-embedder baseline plus the ground-truth
cross-check, both asserted in criterion 7.
"""

from __future__ import annotations

import json
import math
import random
import time
from collections import Counter
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from ssql.api import create_app
from ssql.calibration import CalibrationSession
from ssql.catalog import Catalog
from ssql.embedding import EmbeddingRecord, EmbeddingVector, l2_distance, normalize, similarity
from ssql.engine import Engine, make_embedder
from ssql.errors import SsqlError
from ssql.evalharness import eval_count, eval_pairs, eval_spatial
from ssql.fixture import fixture_catalog, fixture_index
from ssql.index import FlatIndex, ScoredCandidate
from ssql.oracle import TableData, evaluate
from ssql.parser import parse, split
from ssql.ast import SsqlQuery, render

from queryfuzz import make_tables, random_query
from test_parser import ALL_LISTINGS

DATA_DIR = Path(__file__).parent / "data"


@contextmanager
def criterion(name: str, budget_seconds: float | None = None):
    started = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"[acceptance] {name}: FAIL ({time.perf_counter() - started:.2f}s)")
        raise
    elapsed = time.perf_counter() - started
    if budget_seconds is not None:
        assert elapsed < budget_seconds, f"{name} took {elapsed:.2f}s, budget {budget_seconds}s"
    print(f"[acceptance] {name}: PASS ({elapsed:.2f}s)")


def test_criterion_1_parser_fidelity():
    with criterion("parser fidelity (5 listings + 500 fuzzed ASTs)", budget_seconds=5.0):
        for listing in ALL_LISTINGS:
            query = parse(listing)
            base_sql, _ = split(query)
            assert "SEMANTIC" not in base_sql.upper().split()
            assert parse(base_sql).base == query.base
            assert parse(render(query)) == query

        rng = random.Random(0xFEED)
        tables = make_tables(rng, count=4, max_rows=0)
        for _ in range(500):
            ast, _ = random_query(rng, tables)
            wrapped = SsqlQuery(base=ast, semantic=None)
            assert parse(render(wrapped)) == wrapped


def test_criterion_2_relational_oracle_equivalence():
    with criterion("relational oracle equivalence (1000 queries)", budget_seconds=60.0):
        rng = random.Random(0xDEC0DE)
        catalog = Catalog()
        try:
            checked = 0
            while checked < 1000:
                tables = make_tables(rng, count=3, max_rows=200)
                oracle_tables = {}
                for table in tables.values():
                    catalog.load_table(table.name, table.columns, table.rows)
                    oracle_tables[table.name] = TableData(
                        columns=table.column_names, rows=list(table.rows)
                    )
                for _ in range(20):
                    ast, _ = random_query(rng, tables)
                    engine_rel = catalog.execute_ast(ast)
                    oracle_rel = evaluate(ast, oracle_tables)
                    assert engine_rel.column_names == oracle_rel.columns
                    assert Counter(engine_rel.rows) == Counter(oracle_rel.rows), render(
                        SsqlQuery(base=ast)
                    )
                    checked += 1
        finally:
            catalog.close()


def test_criterion_3_vector_index_exactness():
    with criterion("vector index exactness (5000x512, 100 queries)", budget_seconds=30.0):
        rng = np.random.default_rng(0x5EED)
        vectors = rng.normal(size=(5000, 512))
        records = [
            EmbeddingRecord(image_id=i + 1, vector=EmbeddingVector(vectors[i]))
            for i in range(5000)
        ]
        index = FlatIndex.build(records)

        # independent route: unit rows via raw numpy, BLAS matmul, full sort
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        units = vectors / norms
        ids = np.arange(1, 5001)

        for _ in range(100):
            query = normalize(EmbeddingVector(rng.normal(size=512)))
            q = query.values
            scores = units @ q
            order = sorted(range(5000), key=lambda i: (-scores[i], ids[i]))[:10]
            expected_ids = [int(ids[i]) for i in order]
            got = index.top_k(query, 10)
            assert [c.image_id for c in got] == expected_ids

            subset = [int(i) for i in rng.choice(5000, size=50, replace=False) + 1]
            scored, missing = index.score_subset(query, subset)
            assert missing == []
            for candidate in scored:
                expected = float(np.dot(units[candidate.image_id - 1], q))
                assert abs(candidate.score - expected) <= 1e-6


def test_criterion_4_distance_similarity_identity():
    with criterion("distance/similarity identity (10^4 pairs)"):
        rng = np.random.default_rng(0xD15C)
        worst = 0.0
        for _ in range(10_000):
            a = normalize(EmbeddingVector(rng.normal(size=24)))
            b = normalize(EmbeddingVector(rng.normal(size=24)))
            d = l2_distance(a, b)
            gap = abs(d * d - (2.0 - 2.0 * similarity(a, b)))
            worst = max(worst, gap)
        assert worst <= 1e-5, f"worst identity gap {worst}"


def test_criterion_5_calibration_exactness_and_budget():
    with criterion("calibration monotone exactness + budget (1000 trials)", budget_seconds=30.0):
        rng = random.Random(0xCA11)
        for _ in range(1000):
            n = rng.randint(1, 1024)
            candidates = [
                ScoredCandidate(image_id=i + 1, score=rng.uniform(-1.0, 1.0))
                for i in range(n)
            ]
            threshold = rng.uniform(-1.05, 1.05)
            score_of = {c.image_id: c.score for c in candidates}
            session = CalibrationSession.start(candidates)
            while not session.done:
                session.answer(score_of[session.pending_probe] >= threshold)
            expected = {c.image_id for c in candidates if c.score >= threshold}
            assert set(session.results()) == expected
            assert len(session.questions) <= math.floor(math.log2(n)) + 1


def _run_recorded_script() -> list[bytes]:
    catalog = fixture_catalog()
    engine = Engine(catalog, fixture_index(512), make_embedder("stub", 512))
    app = create_app(engine)
    transcript: list[bytes] = []
    with TestClient(app) as client:
        response = client.post(
            "/v1/query",
            json={"ssql": "SELECT DISTINCT id FROM objects SEMANTIC 'two horses' LIMIT 5"},
        )
        transcript.append(response.content)
        started = client.post(
            "/v1/query",
            json={
                "ssql": "SELECT DISTINCT id FROM objects WHERE class_name='horse' "
                "SEMANTIC 'two horses'"
            },
        ).json()
        assert started["candidate_count"] == 4
        assert started["missing_ids"] == []
        sid = started["session_id"]
        for answer in (True, False):
            transcript.append(
                client.post(f"/v1/sessions/{sid}/answer", json={"relevant": answer}).content
            )
        transcript.append(client.get(f"/v1/sessions/{sid}/results").content)
    catalog.close()
    return transcript


def test_criterion_6_end_to_end_determinism():
    with criterion("end-to-end determinism (fixture + recorded script)"):
        first = _run_recorded_script()
        second = _run_recorded_script()
        assert first == second
        golden = [
            part.encode() for part in json.loads((DATA_DIR / "e2e_golden.json").read_text())
        ]
        assert first == golden, "transcript diverged from the recorded golden bytes"


def test_criterion_7_frozen_eval_baseline():
    with criterion("eval-harness frozen stub baseline + ground-truth cross-check"):
        catalog = fixture_catalog()
        try:
            index = fixture_index(512)
            embed = make_embedder("stub", 512)
            # ground-truth sets are re-derived by the brute-force evaluator
            # inside each call; a mismatch raises and fails this criterion
            pairs = eval_pairs(catalog, index, embed)
            count = eval_count(catalog, index, embed, ["horse", "car"])
            spatial = eval_spatial(catalog, index, embed, ["car"])
        finally:
            catalog.close()
        assert (pairs.trials, pairs.successes) == (7, 7)
        assert (count.trials, count.successes) == (6, 6)
        assert (spatial.trials, spatial.successes) == (2, 2)
        assert pairs.per_trial[0].query_text == "apple and person"
        assert pairs.per_trial[0].topk_ids == [11, 4, 5]
        count_by_text = {t.query_text: t.topk_ids for t in count.per_trial}
        assert count_by_text["four horses"] == [6, 8, 7]
        spatial_by_text = {t.query_text: t.topk_ids for t in spatial.per_trial}
        assert spatial_by_text["car in the bottom right corner"] == [9, 10, 16]
        print(
            "[acceptance] note: the upstream pair-query success rate "
            "(608/2124 on a private corpus + pretrained weights) is out of "
            "desk-reproduction scope; the frozen stub baseline above is the "
            "regression stand-in."
        )
