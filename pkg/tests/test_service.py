"""FastAPI service endpoints."""
import pytest
from fastapi.testclient import TestClient

from twinfed import __version__
from twinfed.service import app


@pytest.fixture
def client(tmp_output):
    return TestClient(app)


def tiny_config():
    return {
        "dataset": {"synthetic": {"n_real": 240, "n_twin": 200, "d": 4}},
        "federated": {
            "clients": 4,
            "fraction": 0.5,
            "local_epochs": 1,
            "batch_size": 16,
            "max_rounds": 2,
            "target_accuracy": 0.999,
        },
        "strategies": ["fedavg"],
    }


def test_health(client):
    body = client.get("/health").json()
    assert body == {"status": "ok", "version": __version__}


def test_presets_listing(client):
    names = {p["name"] for p in client.get("/presets").json()}
    assert names == {"convergence", "gamma-sweep", "scale100"}


def test_run_endpoint(client):
    resp = client.post("/experiments/run", json={"config": tiny_config()})
    assert resp.status_code == 200
    body = resp.json()
    assert "fedavg" in body["summaries"]
    assert body["config"]["federated"]["clients"] == 4
    assert body["seed"] == 0


def test_run_endpoint_rejects_bad_config(client):
    cfg = tiny_config()
    cfg["strategies"] = ["wormhole"]
    resp = client.post("/experiments/run", json={"config": cfg})
    assert resp.status_code == 422
    assert "wormhole" in resp.json()["detail"]


def test_run_endpoint_rejects_missing_dataset(client):
    resp = client.post("/experiments/run", json={"config": {"strategies": ["fedavg"]}})
    assert resp.status_code == 422


def test_sweep_endpoint(client):
    cfg = tiny_config()
    cfg["strategies"] = ["fpf"]
    cfg["sweep"] = {"param": "gamma", "values": [0.2, 0.8], "seeds": 1}
    body = client.post("/experiments/sweep", json={"config": cfg}).json()
    assert body["param"] == "gamma"
    assert len(body["cells"]) == 2


def test_align_endpoint(client):
    body = client.post("/alignment", json={"config": tiny_config()}).json()
    assert body["report"]["samples_real"] == 240


def test_preset_request_with_overrides(client):
    resp = client.post(
        "/experiments/run",
        json={
            "preset": "convergence",
            "config": {
                "dataset": {"synthetic": {"n_real": 240, "n_twin": 200, "d": 4}},
                "federated": {"clients": 4, "fraction": 0.5, "max_rounds": 1,
                              "local_epochs": 1, "batch_size": 16},
                "strategies": ["fedavg"],
            },
        },
    )
    assert resp.status_code == 200
    assert resp.json()["config"]["federated"]["max_rounds"] == 1
