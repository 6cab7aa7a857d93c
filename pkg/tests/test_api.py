"""Service endpoints: payload shapes, error mapping, the scripted
calibration loop, and replay byte-identity."""

from __future__ import annotations

import threading

import pytest
from fastapi.testclient import TestClient

from ssql.api import create_app
from ssql.calibration import SessionStore
from ssql.engine import Engine, make_embedder
from ssql.fixture import build_fixture, fixture_catalog, fixture_index
from ssql.index import ScoredCandidate

DIM = 64


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    target = tmp_path_factory.mktemp("fixture")
    build_fixture(target, dim=DIM)
    return target


@pytest.fixture
def client(fixture_dir):
    catalog = fixture_catalog(image_root=fixture_dir / "images")
    engine = Engine(catalog, fixture_index(DIM), make_embedder("stub", DIM))
    app = create_app(engine)
    with TestClient(app) as test_client:
        test_client.engine = engine
        yield test_client
    catalog.close()


class TestQueryEndpoint:
    def test_relation_payload(self, client):
        response = client.post(
            "/v1/query",
            json={
                "ssql": "SELECT id, COUNT(*) as c FROM objects "
                "WHERE class_name='horse' GROUP BY id HAVING c = 4"
            },
        )
        assert response.status_code == 200
        body = response.json()
        assert body["kind"] == "relation"
        assert body["columns"] == ["id", "c"]
        assert body["rows"] == [[6, 4]]

    def test_topk_payload(self, client):
        response = client.post(
            "/v1/query",
            json={"ssql": "SELECT DISTINCT id FROM objects SEMANTIC 'horse' LIMIT 2"},
        )
        body = response.json()
        assert body["kind"] == "topk"
        assert len(body["items"]) == 2
        assert set(body["items"][0]) == {"image_id", "score"}
        assert body["missing_ids"] == []

    def test_calibration_payload(self, client):
        response = client.post(
            "/v1/query",
            json={"ssql": "SELECT DISTINCT id FROM objects WHERE class_name='horse' SEMANTIC 'horse'"},
        )
        body = response.json()
        assert body["kind"] == "calibration"
        assert body["candidate_count"] == 4  # images 6, 7, 8, 18
        assert body["session_id"]

    def test_syntax_error(self, client):
        response = client.post("/v1/query", json={"ssql": "SELEC id FROM t"})
        assert response.status_code == 400
        assert response.json()["code"] == "syntax_error"

    def test_unknown_table(self, client):
        response = client.post("/v1/query", json={"ssql": "SELECT id FROM nope"})
        assert response.status_code == 400
        assert response.json()["code"] == "unknown_table"

    def test_empty_candidates(self, client):
        response = client.post(
            "/v1/query",
            json={"ssql": "SELECT id FROM objects WHERE class_name='zebra' SEMANTIC 'x'"},
        )
        assert response.status_code == 400
        assert response.json()["code"] == "empty_candidates"

    def test_missing_body_field(self, client):
        response = client.post("/v1/query", json={"q": "x"})
        assert response.status_code == 400
        assert response.json()["code"] == "syntax_error"


class TestSessionEndpoints:
    def start_session(self, client, ssql="SELECT DISTINCT id FROM objects WHERE class_name='person' SEMANTIC 'a woman with an umbrella'"):
        response = client.post("/v1/query", json={"ssql": ssql})
        assert response.status_code == 200
        return response.json()

    def test_next_probe_shape(self, client):
        started = self.start_session(client)
        response = client.get(f"/v1/sessions/{started['session_id']}/next")
        body = response.json()
        assert body["questions_asked"] == 0
        assert body["remaining"] == started["candidate_count"]
        assert body["accepted_so_far"] == 0
        assert body["image_url"] == f"/v1/images/{body['image_id']}"

    def test_unknown_session_404(self, client):
        response = client.get("/v1/sessions/ghost/next")
        assert response.status_code == 404
        assert response.json()["code"] == "session_not_found"

    def test_single_candidate_yes(self, client):
        started = self.start_session(
            client,
            "SELECT DISTINCT id FROM objects WHERE class_name='apple' "
            "AND id = 11 SEMANTIC 'apple'",
        )
        sid = started["session_id"]
        response = client.post(f"/v1/sessions/{sid}/answer", json={"relevant": True})
        assert response.json() == {"done": True}
        results = client.get(f"/v1/sessions/{sid}/results").json()
        assert results["image_ids"] == [11]
        assert len(results["scores"]) == 1

    def test_single_candidate_no(self, client):
        started = self.start_session(
            client,
            "SELECT DISTINCT id FROM objects WHERE class_name='apple' "
            "AND id = 11 SEMANTIC 'apple'",
        )
        sid = started["session_id"]
        client.post(f"/v1/sessions/{sid}/answer", json={"relevant": False})
        results = client.get(f"/v1/sessions/{sid}/results").json()
        assert results == {"image_ids": [], "scores": []}

    def test_answer_after_done_409(self, client):
        started = self.start_session(
            client,
            "SELECT DISTINCT id FROM objects WHERE class_name='apple' "
            "AND id = 11 SEMANTIC 'apple'",
        )
        sid = started["session_id"]
        client.post(f"/v1/sessions/{sid}/answer", json={"relevant": True})
        response = client.post(f"/v1/sessions/{sid}/answer", json={"relevant": True})
        assert response.status_code == 409
        assert response.json()["code"] == "session_done"

    def test_results_before_done_409(self, client):
        started = self.start_session(client)
        response = client.get(f"/v1/sessions/{started['session_id']}/results")
        assert response.status_code == 409

    def test_next_is_idempotent(self, client):
        started = self.start_session(client)
        first = client.get(f"/v1/sessions/{started['session_id']}/next").content
        second = client.get(f"/v1/sessions/{started['session_id']}/next").content
        assert first == second

    def test_concurrent_answer_conflict(self, client):
        started = self.start_session(client)
        sid = started["session_id"]
        lock = client.engine.sessions.lock(sid)
        lock.acquire()
        try:
            response = client.post(f"/v1/sessions/{sid}/answer", json={"relevant": True})
            assert response.status_code == 409
        finally:
            lock.release()

    def test_scripted_eight_candidate_walkthrough(self, client):
        # mirror of the calibration module walkthrough, driven over HTTP
        scores = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2]
        session = client.engine.sessions.create(
            [ScoredCandidate(i + 1, s) for i, s in enumerate(scores)]
        )
        sid = session.session_id
        probe = client.get(f"/v1/sessions/{sid}/next").json()
        assert probe["image_id"] == 4
        step = client.post(f"/v1/sessions/{sid}/answer", json={"relevant": False}).json()
        assert step["image_id"] == 2
        step = client.post(f"/v1/sessions/{sid}/answer", json={"relevant": True}).json()
        assert step["image_id"] == 3
        step = client.post(f"/v1/sessions/{sid}/answer", json={"relevant": True}).json()
        assert step == {"done": True}
        results = client.get(f"/v1/sessions/{sid}/results").json()
        assert results["image_ids"] == [1, 2, 3]


class TestImages:
    def test_png_served(self, client):
        response = client.get("/v1/images/1")
        assert response.status_code == 200
        assert response.headers["content-type"] == "image/png"
        assert response.content.startswith(b"\x89PNG")

    def test_jpeg_served(self, client):
        response = client.get("/v1/images/20")
        assert response.status_code == 200
        assert response.headers["content-type"] == "image/jpeg"

    def test_unknown_id(self, client):
        assert client.get("/v1/images/999").status_code == 404

    def test_traversal_attempt(self, client):
        assert client.get("/v1/images/..%2F..%2Fetc%2Fpasswd").status_code == 404

    def test_relocated_images_resolve_via_images_root(self, fixture_dir):
        # catalog ingested with a bogus root: only --images-root saves it
        catalog = fixture_catalog(image_root="somewhere/else")
        engine = Engine(catalog, fixture_index(DIM), make_embedder("stub", DIM))
        app = create_app(engine, images_root=fixture_dir / "images")
        with TestClient(app) as test_client:
            response = test_client.get("/v1/images/1")
            assert response.status_code == 200
            assert response.headers["content-type"] == "image/png"
        catalog.close()


class TestReplay:
    def test_recorded_script_yields_identical_bytes(self, fixture_dir):
        def run_script():
            catalog = fixture_catalog(image_root=fixture_dir / "images")
            engine = Engine(catalog, fixture_index(DIM), make_embedder("stub", DIM))
            app = create_app(engine)
            transcript = []
            with TestClient(app) as test_client:
                response = test_client.post(
                    "/v1/query",
                    json={"ssql": "SELECT DISTINCT id FROM objects SEMANTIC 'two horses' LIMIT 5"},
                )
                transcript.append(response.content)
                started = test_client.post(
                    "/v1/query",
                    json={
                        "ssql": "SELECT DISTINCT id FROM objects "
                        "WHERE class_name='horse' SEMANTIC 'two horses'"
                    },
                ).json()
                sid = started["session_id"]
                for answer in (True, False):
                    transcript.append(
                        test_client.post(
                            f"/v1/sessions/{sid}/answer", json={"relevant": answer}
                        ).content
                    )
                transcript.append(test_client.get(f"/v1/sessions/{sid}/results").content)
            catalog.close()
            return transcript

        assert run_script() == run_script()
