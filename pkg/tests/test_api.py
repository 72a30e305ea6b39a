import pytest
from fastapi.testclient import TestClient

from app import __version__
from app.hybrid.fixtures import H1_EVENTS
from app.main import app


@pytest.fixture
def client():
    return TestClient(app)


def test_health_check(client):
    response = client.get("/")
    assert response.status_code == 200
    assert response.json() == {"status": "ok", "version": __version__}


def test_sync_analyze_named(client):
    response = client.post("/api/sync/analyze", json={"generate": "h1"})
    assert response.status_code == 200
    result = response.json()["result"]
    assert result["status"] == "completed"
    assert result["report"]["alpha"] == "2"
    assert result["report"]["classification"] == "NON_GENUINE"


def test_sync_analyze_from_events(client):
    scenario = {
        "parties": [{"name": n, "settings": s, "outcomes": 2} for n, s in (("A", 3), ("B1", 2), ("B2", 2))],
        "a_side": ["A"],
        "b_side": ["B1", "B2"],
    }
    named = client.post("/api/sync/analyze", json={"generate": "h1"}).json()["result"]
    listed = client.post("/api/sync/analyze", json={"scenario": scenario, "events": list(H1_EVENTS)}).json()["result"]
    assert listed["digest"] == named["digest"]


def test_sync_analyze_reports_input_errors(client):
    result = client.post("/api/sync/analyze", json={"events": ["100|000"]}).json()["result"]
    assert result["status"] == "failed"
    assert "scenario" in result["error"]


def test_sync_vertices(client):
    response = client.post("/api/sync/vertices", json={"generate": "cycle:5", "kind": "qstab"})
    result = response.json()["result"]
    assert result["count"] == 12
    assert "1/2 1/2 1/2 1/2 1/2" in result["vertices"]


def test_sync_fixture_group(client):
    result = client.post("/api/sync/verify-fixtures", json={"only": "polytope"}).json()["result"]
    assert result["passed"]
    assert [f["id"] for f in result["fixtures"]] == ["c5.qstab_vertices"]


def test_sync_quantum_builtin(client):
    result = client.post("/api/sync/quantum", json={"generate": "h1", "builtin": "general"}).json()["result"]
    assert result["status"] == "completed"
    assert result["value"] == pytest.approx(2.069, abs=5e-3)


def test_search_payload_validation(client):
    response = client.post("/api/sync/search", json={"max_subgraph_size": 4})
    assert response.status_code == 422
