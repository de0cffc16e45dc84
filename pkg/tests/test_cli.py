import csv
import json

import pytest

from capeuler.cli import dispatch, ops_verify

CFG = """[geometry]
kind = drop
modes = 3:0.05
[physics]
eps = 0.5
[initial]
traveling = true
[numerics]
n_theta = 32
n_r = 12
t_end = 0.2
record_every = 5
checkpoint_every = 2
"""


@pytest.fixture
def out(tmp_path, monkeypatch):
    monkeypatch.setenv("CAPEULER_OUT", str(tmp_path / "out"))
    return tmp_path / "out"


def manifest(d):
    return json.loads((d / "manifest.json").read_text())


def test_simulate_then_reports(tmp_path, out, capsys):
    cfg = tmp_path / "drop.cfg"
    cfg.write_text(CFG)
    assert dispatch(["simulate", "--config", str(cfg), "--quiet"]) == 0
    d = out / "simulate"
    m = manifest(d)
    assert all((d / p).exists() for p in m["outputs"])
    assert m["checks"]["energy_drift_lt_1e-6"]
    with (d / "timeseries.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) >= 2 and float(rows[-1]["t"]) == pytest.approx(0.2)
    assert any(p.startswith("ckpt_") for p in m["outputs"])
    assert dispatch(["energy-report", str(d / "final.json"), "--n-r", "12", "--quiet"]) == 0
    capsys.readouterr()
    assert dispatch(["checkpoint-info", str(d / "final.json")]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["format_version"] == 1


def test_simulate_config_errors_exit_2(tmp_path, out):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[geometry]\nkind = blob\n")
    assert dispatch(["simulate", "--config", str(bad)]) == 2
    assert dispatch(["simulate", "--config", str(tmp_path / "none.cfg")]) == 2
    cfg = tmp_path / "drop.cfg"
    cfg.write_text(CFG)
    assert dispatch(["simulate", "--config", str(cfg), "--dt", "1.0", "--quiet"]) == 2


def test_usage_errors_exit_2(out):
    assert dispatch(["frobnicate"]) == 2
    assert dispatch([]) == 2
    assert dispatch(["dispersion", "--k", "x"]) == 2


def test_geom_and_annulus_ode(out):
    assert dispatch(["geom", "--ellipse", "1.2", "1", "--n-theta", "64", "--quiet"]) == 0
    assert (out / "geom" / "geometry.csv").exists()
    assert dispatch(["geom", "--modes", "3:0.1", "--n-theta", "64", "--quiet"]) == 0
    assert dispatch(["annulus-ode", "--swirl-amp", "0.3", "--t-end", "0.1", "--quiet"]) == 0
    assert manifest(out / "annulus-ode")["checks"]["volume_drift_lt_1e-12"]


def test_eps_sweep_refusal_and_short_run(out):
    assert dispatch(["eps-sweep", "--scenario", "rigid-rotation", "--quiet"]) == 1
    assert dispatch(["eps-sweep", "--eps", "0.2", "0.1", "--t-end", "0.05", "--n-theta", "32",
                     "--n-r", "12", "--quiet"]) == 0


def test_dispersion_command(out):
    assert dispatch(["dispersion", "--k", "2", "3", "--n-theta", "32", "--n-r", "12", "--quiet"]) == 0


def test_ops_verify_rows_with_seed():
    rows = ops_verify("ellipse-shear", 2e-3, 64, 16, seed=3)
    names = [r[0] for r in rows]
    assert "dt_J" in names and "commutator_inv_laplace" in names and "dn_square" in names
    assert all(r[3] for r in rows if r[0] in ("product_rule", "dn_square", "energy_identity"))
