import dataclasses

import pytest
from fastapi.testclient import TestClient

from logquest.engine import Engine
from logquest.service import create_app

RECORD_FIELDS = {
    "answer_text", "bindings", "confidence", "passage_id",
    "passage_text", "highlight_spans", "relax_count", "dropped_subgoals",
}


@pytest.fixture(scope="module")
def client(engine):
    with TestClient(create_app(engine=engine)) as c:
        yield c


def test_ask_returns_a_bare_array_of_records(client):
    response = client.post("/ask", json={"question": "What is the capital of Germany?"})
    assert response.status_code == 200
    records = response.json()
    assert isinstance(records, list) and records
    assert set(records[0]) == RECORD_FIELDS
    assert records[0]["answer_text"] == "berlin"
    assert records[0]["highlight_spans"]
    assert all(isinstance(span, list) and len(span) == 2
               for span in records[0]["highlight_spans"])
    confidences = [r["confidence"] for r in records]
    assert confidences == sorted(confidences, reverse=True)
    assert "X-Diagnostic" not in response.headers


def test_ask_carries_diagnostics_in_a_header(client):
    response = client.post("/ask", json={"question": "Which river flows through Atlantis?"})
    assert response.status_code == 200
    assert response.json() == []
    assert response.headers["X-Diagnostic"] == "no answer found"


def test_ask_missing_question_field(client):
    response = client.post("/ask", json={})
    assert response.status_code == 400
    assert response.json() == {"error": "missing field: question"}


def test_ask_wrong_question_type(client):
    response = client.post("/ask", json={"question": 7})
    assert response.status_code == 400
    assert response.json() == {"error": "invalid request"}


def test_ask_unparseable_question(client):
    response = client.post("/ask", json={"question": "Why is the sky blue?"})
    assert response.status_code == 400
    assert response.json() == {"error": "question not understood"}


def test_ask_rejects_bad_overrides(client):
    response = client.post(
        "/ask", json={"question": "What is the capital of Germany?", "answers": 0}
    )
    assert response.status_code == 400
    assert "error" in response.json()
    response = client.post(
        "/ask", json={"question": "What is the capital of Germany?", "max_relax": -2}
    )
    assert response.status_code == 400


def test_ask_honors_overrides(client):
    response = client.post(
        "/ask",
        json={"question": "What is the capital of Germany?", "answers": 1, "max_relax": 0},
    )
    assert response.status_code == 200
    records = response.json()
    assert len(records) == 1
    assert records[0]["relax_count"] == 0


def test_health_reports_corpus_shape(client, engine):
    response = client.get("/health")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "ok"
    assert body["passages"] == engine.index.doc_count
    assert body["background_clauses"] == len(engine.background)


def test_config_endpoint_exposes_the_running_config(client, engine):
    body = client.get("/config").json()
    assert body["answers_returned"] == engine.config.answers_returned
    assert body["top_k_passages"] == engine.config.top_k_passages
    assert body["corpus_path"] == engine.config.corpus_path


def test_api_docs_are_disabled(client):
    assert client.get("/docs").status_code == 404


def test_static_ui_mount(engine, tmp_path):
    (tmp_path / "index.html").write_text("<!doctype html><title>logquest</title>")
    ui_engine = Engine(dataclasses.replace(engine.config, ui_dir=str(tmp_path)))
    with TestClient(create_app(engine=ui_engine)) as c:
        page = c.get("/")
        assert page.status_code == 200
        assert "logquest" in page.text
        # API routes win over the static mount
        assert c.get("/health").status_code == 200


def test_no_ui_mount_without_directory(client):
    assert client.get("/").status_code == 404
