import pytest
from fastapi.testclient import TestClient

from wgpoisson.service import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json()["status"] == "ok"


def test_problems_listing(client):
    r = client.get("/problems")
    assert r.status_code == 200
    names = set(r.json())
    assert {"sinsin", "poly1", "poly2", "poly3", "runge"} <= names


def test_mesh_generate_squares(client):
    r = client.post("/mesh/generate", json={"family": "squares", "n": 4})
    assert r.status_code == 200
    body = r.json()
    assert body["n_cells"] == 16
    assert body["n_interior_edges"] == 24
    assert body["mesh_text"].startswith("v ")


def test_mesh_generate_small_edge(client):
    r = client.post("/mesh/generate",
                    json={"family": "small-edge", "n": 4, "eps": 1e-6})
    assert r.status_code == 200
    body = r.json()
    assert body["min_edge"] == pytest.approx(2.5e-7, rel=1e-9)
    assert body["min_edge_over_h"] < 1e-6


def test_mesh_generate_rejects_bad_eps(client):
    r = client.post("/mesh/generate",
                    json={"family": "small-edge", "n": 4, "eps": 0.7})
    assert r.status_code == 400


def test_solve_smoke(client):
    mesh = client.post("/mesh/generate",
                       json={"family": "squares", "n": 4}).json()["mesh_text"]
    r = client.post("/solve",
                    json={"mesh_text": mesh, "k": 1, "problem": "sinsin"})
    assert r.status_code == 200
    body = r.json()
    assert body["solution_text"].startswith("wgfield k=1")
    rep = body["report"]
    assert 0 < rep["err_l2"] < 0.5
    assert rep["dofs"] == 16 * 3 + 40 * 2  # P1 per cell, P1 per edge


def test_solve_patch_problem_exact(client):
    mesh = client.post("/mesh/generate",
                       json={"family": "small-edge", "n": 4,
                             "eps": 1e-6}).json()["mesh_text"]
    r = client.post("/solve",
                    json={"mesh_text": mesh, "k": 2, "problem": "poly2"})
    assert r.status_code == 200
    rep = r.json()["report"]
    for key in ("err_wgrad", "err_grad0", "err_l2", "err_edge"):
        assert rep[key] < 1e-9


def test_solve_unknown_problem(client):
    r = client.post("/solve",
                    json={"mesh_text": "v 0 0\n", "k": 1, "problem": "nope"})
    assert r.status_code == 400


def test_solve_bad_mesh(client):
    r = client.post("/solve",
                    json={"mesh_text": "v 0 0\nc 0 1 2\n", "k": 1,
                          "problem": "sinsin"})
    assert r.status_code == 400


def test_convergence_study(client):
    r = client.post("/convergence",
                    json={"family": "squares", "levels": 3, "k": 1,
                          "problem": "sinsin"})
    assert r.status_code == 200
    body = r.json()
    assert body["completed"] is True
    assert len(body["rows"]) == 3
    assert body["csv"].splitlines()[0].startswith("level,h,dofs")
    assert body["svg"].lstrip().startswith("<svg")
    assert 0.85 <= body["slopes"]["err_wgrad"] <= 1.15
    assert 1.8 <= body["slopes"]["err_l2"] <= 2.2


def test_convergence_small_edge_requires_eps(client):
    r = client.post("/convergence",
                    json={"family": "small-edge", "levels": 2, "k": 1,
                          "problem": "sinsin"})
    assert r.status_code == 400


def test_convergence_validation_error(client):
    r = client.post("/convergence",
                    json={"family": "squares", "levels": 0, "k": 1,
                          "problem": "sinsin"})
    assert r.status_code == 422  # pydantic field constraint
