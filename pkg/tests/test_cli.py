import httpx
import pytest
from fastapi.testclient import TestClient

from mvsde.cli import main
from mvsde.service import create_app

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
particles = 100
steps = 64
seed = 0
"""

TK_CONFIG = OU_CONFIG.replace("particles = 100", "particles = 8") + """
[study]
kind = trotter_kato
family = yosida
sweep = 2,8
"""

FAILING_INITIAL = """
[problem]
generator = scalar
rate = -1.0
horizon = 1.0

[coefficients]
drift = zero
diffusion = zero

[noise]
kappas = 1.0

[initial]
kind = fixed
value = 1.0

[initial_b]
kind = fixed
value = 0.0

[run]
particles = 4
steps = 64
seed = 0

[study]
kind = initial
replicates = 1
"""


def write_config(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_simulate_writes_csv(tmp_path, capsys):
    cfg = write_config(tmp_path, OU_CONFIG)
    out = tmp_path / "results"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    report = (out / "simulate.csv").read_text()
    assert report.startswith("# version")
    assert "t,moment2" in report
    assert "simulate: done" in capsys.readouterr().out


def test_study_pass_exit_zero(tmp_path, capsys):
    cfg = write_config(tmp_path, TK_CONFIG)
    assert main(["trotter-kato", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert (tmp_path / "trotter_kato.csv").exists()
    assert "trotter_kato: pass" in capsys.readouterr().out


def test_study_failure_exit_two(tmp_path, capsys):
    """Decoupled dynamics over a unit horizon sit below the sup-ratio constant."""
    cfg = write_config(tmp_path, FAILING_INITIAL)
    assert main(["initial", "--config", cfg, "--out", str(tmp_path)]) == 2
    captured = capsys.readouterr()
    assert "initial: fail" in captured.out
    assert "failed: sup_ratio_le_c" in captured.err
    # the report is still written for inspection
    assert (tmp_path / "initial.csv").exists()


def test_invalid_config_exit_one(tmp_path, capsys):
    cfg = write_config(tmp_path, TK_CONFIG.replace("rate = -1.0", "rate = lots"))
    assert main(["trotter-kato", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert "error:" in capsys.readouterr().err


def test_missing_config_file_exit_one(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "nope.cfg")]) == 1
    assert "cannot read config" in capsys.readouterr().err


def test_unknown_flag_exit_one(tmp_path, capsys):
    cfg = write_config(tmp_path, OU_CONFIG)
    assert main(["simulate", "--config", cfg, "--bogus", "1"]) == 1
    assert "error:" in capsys.readouterr().err


def test_negative_seed_exit_one(tmp_path, capsys):
    cfg = write_config(tmp_path, OU_CONFIG)
    assert main(["simulate", "--config", cfg, "--seed", "-3"]) == 1
    assert "--seed must be >= 0" in capsys.readouterr().err


def test_validate_config_valid(tmp_path, capsys):
    cfg = write_config(tmp_path, TK_CONFIG)
    assert main(["validate-config", "--config", cfg]) == 0
    assert "config valid (trotter_kato)" in capsys.readouterr().out


def test_validate_config_simulate_only(tmp_path, capsys):
    cfg = write_config(tmp_path, OU_CONFIG)
    assert main(["validate-config", "--config", cfg]) == 0
    assert "config valid (simulate-only)" in capsys.readouterr().out


def test_validate_config_invalid(tmp_path, capsys):
    cfg = write_config(tmp_path, "[problem]\ngenerator = scalar\n")
    assert main(["validate-config", "--config", cfg]) == 1
    assert "invalid:" in capsys.readouterr().err


def test_overrides_echoed_in_csv(tmp_path):
    cfg = write_config(tmp_path, OU_CONFIG)
    assert main(["simulate", "--config", cfg, "--seed", "42", "--particles", "50",
                 "--out", str(tmp_path)]) == 0
    report = (tmp_path / "simulate.csv").read_text()
    assert "# override seed = 42" in report
    assert "# override particles = 50" in report


@pytest.fixture
def fake_remote(monkeypatch):
    client = TestClient(create_app())

    def fake_post(url, json=None, timeout=None):
        path = url.replace("http://fake", "", 1)
        return client.post(path, json=json)

    monkeypatch.setattr(httpx, "post", fake_post)


def test_url_flag_routes_to_service(tmp_path, capsys, fake_remote):
    cfg = write_config(tmp_path, TK_CONFIG)
    code = main(["trotter-kato", "--config", cfg, "--url", "http://fake",
                 "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "trotter_kato.csv").read_text().startswith("# version")


def test_url_flag_surfaces_service_errors(tmp_path, capsys, fake_remote):
    cfg = write_config(tmp_path, TK_CONFIG)
    code = main(["zeroth-order", "--config", cfg, "--url", "http://fake",
                 "--out", str(tmp_path)])
    assert code == 1
    assert "service returned 422" in capsys.readouterr().err
