import json
import os

import numpy as np
import pytest

from fluxanneal import cli
from fluxanneal.errors import NumericalError
from fluxanneal.io import data_section
from fluxanneal.problem import load_catalog, load_schedule


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def table(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


def meta(text):
    return dict(ln[2:].split(": ", 1) for ln in text.splitlines() if ln.startswith("# "))


def test_catalog(capsys):
    code, out, _ = run(capsys, "catalog")
    assert code == 0
    header, rows = table(out)
    assert header[:4] == ["index", "h1", "h2", "J"]
    assert len(rows) == len(load_catalog())
    m = meta(out)
    assert m["command"] == "catalog" and len(m["config_hash"]) == 16
    assert "created" in m and "version" in m


def test_map_coupling(capsys):
    code, out, _ = run(capsys, "map-coupling", "--J-grid=-1,0,1")
    assert code == 0
    header, rows = table(out)
    assert header == ["J", "phi_J0x", "M_eff_pred_pH"]
    vals = np.array(rows, float)
    assert vals[1, 2] == pytest.approx(0.0, abs=1e-9)
    # the predicted mutual inductance is odd in J
    assert vals[0, 2] == pytest.approx(-vals[2, 2], rel=1e-9)


def test_run_qubit_case(capsys):
    code, out, _ = run(capsys, "run-qubit", "--case", "c", "--t-a", "2", "--tau", "1e-3")
    assert code == 0
    header, rows = table(out)
    assert "p_success" in header
    p = float(rows[0][header.index("p_success")])
    assert 0 <= p <= 1


def test_output_dir_and_sidecar(tmp_path, capsys):
    code, out, _ = run(capsys, "run-qubit", "--problem", "0.1,-0.2,0.5", "--t-a", "1", "--tau", "1e-3",
                       "-o", str(tmp_path))
    assert code == 0
    assert out.strip() == str(tmp_path / "run-qubit.csv")
    side = json.loads((tmp_path / "run-qubit.json").read_text())
    assert side["config"]["t_a"] == 1.0
    assert side["columns"][0] == "index"
    assert not [f for f in os.listdir(tmp_path) if f.startswith(".tmp")]


def test_data_section_deterministic(capsys):
    argv = ("run-qubit", "--case", "a", "--t-a", "1", "--tau", "1e-3")
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert data_section(a) == data_section(b)


def test_config_layering(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"t_a": 1.0, "tau": 1e-3, "case": "a"}))
    _, a, _ = run(capsys, "run-qubit", "--config", str(cfg))
    header, rows = table(a)
    assert float(rows[0][header.index("tau")]) == pytest.approx(1e-3)
    # explicit flags beat the file
    _, b, _ = run(capsys, "run-qubit", "--config", str(cfg), "--tau", "5e-4")
    header, rows = table(b)
    assert float(rows[0][header.index("tau")]) == pytest.approx(5e-4)
    assert meta(a)["config_hash"] != meta(b)["config_hash"]


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    code, _, err = run(capsys, "run-qubit", "--config", str(cfg))
    assert code == cli.EXIT_CONFIG and "bogus" in err


@pytest.mark.parametrize("argv", [
    ("run-qubit", "--schedule", "/nonexistent/table.csv"),
    ("run-qubit", "--problem", "3,0,0"),
    ("run-qubit", "--problem", "1,2"),
    ("run-flux", "--scale", "paper"),
    ("run-bath", "--scale", "paper"),
    ("run-bath", "--model", "II", "--n-bath", "3"),
])
def test_config_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == cli.EXIT_CONFIG
    assert out == "" and "configuration error" in err


def test_numerical_failure_exit_3(capsys, monkeypatch):
    def boom(cfg):
        raise NumericalError("diverged")

    monkeypatch.setitem(cli.COMMANDS, "catalog", boom)
    code, _, err = run(capsys, "catalog")
    assert code == cli.EXIT_NUMERICAL and "diverged" in err


def test_derive_scheme_round_trip(tmp_path, capsys):
    code, _, _ = run(capsys, "derive-scheme", "--samples", "11", "-o", str(tmp_path))
    assert code == 0
    text = (tmp_path / "derive-scheme.csv").read_text()
    assert "phi_J0x" in meta(text)
    with open(tmp_path / "derive-scheme.csv") as fh:
        sched = load_schedule(fh)
    assert sched.s[0] == 0 and sched.s[-1] == 1 and len(sched.s) == 11
    # the derived table drives a qubit run
    code, out, _ = run(capsys, "run-qubit", "--case", "a", "--t-a", "1", "--tau", "1e-3",
                       "--schedule", str(tmp_path / "derive-scheme.csv"))
    assert code == 0


def test_run_flux_short(capsys):
    code, out, _ = run(capsys, "run-flux", "--case", "a", "--t-a", "0.002", "--tau", "5e-5", "--observe", "3")
    assert code == 0
    header, rows = table(out)
    assert header == ["s", "p_uu", "p_ud", "p_du", "p_dd", "trace", "leakage"]
    assert len(rows) == 3
    vals = np.array(rows, float)
    np.testing.assert_allclose(vals[:, 1:5].sum(axis=1), vals[:, 5], atol=1e-10)
    assert 0 <= float(meta(out)["p_success"]) <= 1


def test_run_bath_small(capsys):
    code, out, _ = run(capsys, "run-bath", "--n-bath", "4", "--t-a", "1", "--betas", "0.1,0.5", "--n-seeds", "2")
    assert code == 0
    header, rows = table(out)
    assert header == ["beta", "mean", "std", "gibbs", "p_dwave_ref", "seed_0", "seed_1"]
    assert [float(r[0]) for r in rows] == [0.1, 0.5]
    # case a appears in the catalog, so the hardware reference is filled in
    assert rows[0][4] != ""
