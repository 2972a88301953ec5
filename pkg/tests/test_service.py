from fastapi.testclient import TestClient

from mvsde.report import PACKAGE_VERSION
from mvsde.service import create_app
from mvsde.studies import run_trotter_kato

OU_CONFIG = """
[problem]
generator = scalar
rate = -1.0
horizon = 1.0

[coefficients]
drift = zero
diffusion = constant
diffusion_value = 1.0

[noise]
kappas = 1.0

[initial]
kind = fixed
value = 0.0

[run]
particles = 200
steps = 128
seed = 0
"""

TK_CONFIG = OU_CONFIG.replace("particles = 200", "particles = 8") + """
[study]
kind = trotter_kato
family = yosida
sweep = 2,8
"""


def make_client() -> TestClient:
    return TestClient(create_app())


def test_health():
    client = make_client()
    resp = client.get("/v1/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok", "version": PACKAGE_VERSION}


def test_validate_config_valid():
    client = make_client()
    resp = client.post("/v1/validate-config", json={"config_text": TK_CONFIG})
    assert resp.status_code == 200
    body = resp.json()
    assert body["valid"] is True
    assert body["study"] == "trotter_kato"
    assert body["problems"] == []


def test_validate_config_reports_problems():
    client = make_client()
    bad = TK_CONFIG.replace("rate = -1.0", "rate = lots")
    resp = client.post("/v1/validate-config", json={"config_text": bad})
    assert resp.status_code == 200
    body = resp.json()
    assert body["valid"] is False
    assert body["study"] is None
    assert any("rate" in p for p in body["problems"])


def test_simulate_endpoint():
    client = make_client()
    resp = client.post("/v1/simulate", json={"config_text": OU_CONFIG})
    assert resp.status_code == 200
    body = resp.json()
    assert body["seed"] == 0
    assert 0.3 < body["final_moment2"] < 0.6
    assert body["sup_moment2"] >= body["final_moment2"]
    assert body["csv_text"].startswith("# version")


def test_simulate_seed_override():
    client = make_client()
    resp = client.post("/v1/simulate", json={"config_text": OU_CONFIG, "seed": 7, "particles": 50})
    assert resp.status_code == 200
    assert resp.json()["seed"] == 7


def test_study_endpoint_matches_direct_runner():
    client = make_client()
    resp = client.post("/v1/studies/trotter-kato", json={"config_text": TK_CONFIG})
    assert resp.status_code == 200
    body = resp.json()
    assert body["study"] == "trotter_kato"
    assert body["passed"] is True
    assert [r["sweep_param"] for r in body["rows"]] == ["2", "8"]
    assert all(isinstance(r["sup_coupled_err"], float) for r in body["rows"])
    assert body["csv_text"] == run_trotter_kato(TK_CONFIG).to_csv()


def test_study_endpoint_rejects_wrong_kind():
    client = make_client()
    resp = client.post("/v1/studies/zeroth-order", json={"config_text": TK_CONFIG})
    assert resp.status_code == 422
    assert "zeroth_order" in resp.json()["detail"]


def test_simulate_rejects_invalid_config():
    client = make_client()
    resp = client.post("/v1/simulate", json={"config_text": "[problem]\ngenerator = scalar\n"})
    assert resp.status_code == 422


def test_request_schema_enforced():
    client = make_client()
    resp = client.post("/v1/simulate", json={})
    assert resp.status_code == 422
    resp = client.post("/v1/simulate", json={"config_text": OU_CONFIG, "particles": 0})
    assert resp.status_code == 422


def test_initial_study_degenerate_laws_rejected():
    config = OU_CONFIG.replace("particles = 200", "particles = 8") + """
[initial_b]
kind = fixed
value = 0.0

[study]
kind = initial
replicates = 1
"""
    client = make_client()
    resp = client.post("/v1/studies/initial", json={"config_text": config})
    assert resp.status_code == 422
    assert "coincide" in resp.json()["detail"]


def test_unknown_study_path():
    client = make_client()
    resp = client.post("/v1/studies/unknown", json={"config_text": TK_CONFIG})
    assert resp.status_code == 404
