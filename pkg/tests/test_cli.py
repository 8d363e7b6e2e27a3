import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from bec_dimer import cli, classical, numerics
from bec_dimer.model import ModelParams, critical_kappa

BASE = {"N": 100, "Omega": 1.0, "kappa": 0.02, "eta": 0.0002}


def run(tmp_path, command, config=None, sets=(), extra=(), out="out"):
    argv = [command]
    if config is not None:
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config))
        argv += ["--config", str(path)]
    for s in sets:
        argv += ["--set", s]
    argv += ["--out", str(tmp_path / out), *extra]
    return cli.main(argv)


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_apply_overrides():
    raw = cli.apply_overrides(
        {"N": 10, "trap": {"q0": 1.0}},
        ["kappa=0.5", "trap.q0=2", "mode=quantum", "times=[1, 2]", "Lambda=null"],
    )
    assert raw == {
        "N": 10,
        "kappa": 0.5,
        "trap": {"q0": 2},
        "mode": "quantum",
        "times": [1, 2],
        "Lambda": None,
    }
    with pytest.raises(cli.ConfigError):
        cli.apply_overrides({}, ["novalue"])


def test_resolve_config_lambda_modes():
    cfg = cli.resolve_config(dict(BASE))
    assert cfg.lambda_mode == "derived"
    assert cfg.params.Lambda == pytest.approx(0.02 * 0.1 ** 1.5)
    cfg = cli.resolve_config(dict(BASE, Lambda=0.0))
    assert cfg.lambda_mode == "explicit" and cfg.params.Lambda == 0.0


def test_resolve_config_rejects_both_sources():
    with pytest.raises(cli.ConfigError):
        cli.resolve_config(dict(BASE, trap={"mass": 1, "omega_trap": 1, "q0": 2, "a_scatter": 0.01}))


def test_fmt():
    assert cli.fmt(0.1) == "0.10000000000000001"
    assert cli.fmt(3) == "3" and cli.fmt(True) == "1" and cli.fmt(None) == ""
    assert cli.fmt(float("nan")) == ""


def test_spectrum(tmp_path):
    assert run(tmp_path, "spectrum", BASE) == 0
    header, rows = read_csv(tmp_path / "out/spectrum.csv")
    assert header == ["n", "E_n"] and len(rows) == 101
    E = np.array([float(r[1]) for r in rows])
    assert np.all(np.diff(E) >= 0)
    assert [int(r[0]) for r in rows] == list(range(1, 102))
    info = json.loads((tmp_path / "out/spectrum_analysis.json").read_text())
    assert info["parameters"]["Lambda"] == pytest.approx(0.02 * 0.1 ** 1.5)
    assert info["parameters"]["lambda_mode"] == "derived"
    assert info["doublet_count"] == sum(info["doublet_flags"]) > 0
    assert info["inflection_index"] is not None


def test_spectrum_linear_limit(tmp_path):
    assert run(tmp_path, "spectrum", {"N": 10, "Omega": 1.0, "kappa": 0.0}) == 0
    _, rows = read_csv(tmp_path / "out/spectrum.csv")
    E = [float(r[1]) for r in rows]
    np.testing.assert_allclose(E, [n - 1 - 5 for n in range(1, 12)], atol=1e-13)
    info = json.loads((tmp_path / "out/spectrum_analysis.json").read_text())
    assert info["doublet_count"] == 0 and info["inflection_index"] is None


def test_evolve_both_modes(tmp_path):
    cfg = dict(BASE, t_end=5.0, n_times=51)
    assert run(tmp_path, "evolve", cfg) == 0
    header, rows = read_csv(tmp_path / "out/evolve.csv")
    assert header == [
        "Omega_t",
        "Jx_over_J_classical",
        "Jx_over_J_quantum",
        "Jz_over_J_quantum",
        "fidelity",
        "norm",
    ]
    data = np.array(rows, dtype=float)
    np.testing.assert_allclose(data[:, 0], np.linspace(0, 5, 51), rtol=0, atol=0)
    assert data[0, 1] == 1.0
    assert abs(data[:, 1] - data[:, 2]).max() < 0.05
    np.testing.assert_allclose(data[:, 5], 1.0, atol=1e-12)
    # classical column equals a direct library integration on the same grid
    p = ModelParams.with_overlap_lambda(100, 1.0, 0.02, 0.0002)
    orbit = classical.integrate_orbit(classical.angles_to_qp(math.pi / 2, 0, 50), p, 5.0, step=1e-3, sample_every=100)
    np.testing.assert_allclose(data[:, 1], orbit.X, atol=1e-12)


@pytest.mark.parametrize("mode, empty", [("quantum", [1]), ("classical", [2, 3, 4, 5])])
def test_evolve_single_mode(tmp_path, mode, empty):
    cfg = dict(BASE, t_end=2.0, n_times=11)
    assert run(tmp_path, "evolve", cfg, extra=["--mode", mode]) == 0
    _, rows = read_csv(tmp_path / "out/evolve.csv")
    for r in rows:
        for col in range(1, 6):
            assert (r[col] == "") == (col in empty)


def test_fixed_points(tmp_path):
    assert run(tmp_path, "fixed-points", {"N": 100, "Omega": 1.0, "kappa": 0.01}) == 0
    data = json.loads((tmp_path / "out/fixed_points.json").read_text())
    assert data["critical_kappa"] == pytest.approx(1 / 198, abs=1e-12)
    assert data["bifurcation"]["bifurcated"] is True
    fams = [fp["family"] for fp in data["fixed_points"]]
    assert fams == ["a", "b", "b", "c", "c", "d"]
    b = data["fixed_points"][1]
    assert b["exists"] and b["theta"] == pytest.approx(2 * math.atan(math.sqrt(1.49 / 0.49)))
    c = data["fixed_points"][3]
    assert c["exists"] is False and c["theta"] is None


def test_portrait(tmp_path):
    seeds = [[0.5, 0.0], [2.6, 0.0], [math.pi, 0.0]]
    cfg = {"N": 100, "Omega": 1.0, "kappa": 0.01, "seeds": seeds}
    assert run(tmp_path, "portrait", cfg) == 0
    classes = json.loads((tmp_path / "out/classes.json").read_text())
    assert classes["classes"] == {"0": "JO", "1": "MST", "2": "error"}
    assert "2" in classes["errors"]
    header, rows = read_csv(tmp_path / "out/portrait.csv")
    assert header == ["seed_id", "Omega_t", "X", "Y", "Z", "H"]
    assert {r[0] for r in rows} == {"0", "1"}


def test_portrait_all_seeds_fail(tmp_path):
    cfg = {"N": 10, "Omega": 1.0, "kappa": 0.0, "seeds": [[math.pi, 0.0]]}
    assert run(tmp_path, "portrait", cfg) == cli.EXIT_NUMERIC


def test_husimi(tmp_path):
    cfg = dict(BASE, n_theta=21, n_phi=16)
    assert run(tmp_path, "husimi", cfg, sets=["times=[0, 2.5]"]) == 0
    for name in ("husimi_t0.00.csv", "husimi_t2.50.csv"):
        header, rows = read_csv(tmp_path / "out" / name)
        assert header == ["theta", "phi", "Q"] and len(rows) == 21 * 16
    _, rows = read_csv(tmp_path / "out/husimi_t0.00.csv")
    data = np.array(rows, dtype=float)
    # theta is the outer (slow) index
    assert np.all(data[:16, 0] == 0) and np.all(data[16:32, 0] == data[16, 0])
    i = np.argmax(data[:, 2])
    assert data[i, 0] == pytest.approx(math.pi / 2) and data[i, 1] == 0.0
    assert data[i, 2] == pytest.approx(1.0, abs=1e-12)


def test_sweep_through_critical(tmp_path):
    cfg = {"N": 100, "Omega": 1.0, "kappa": 0.0, "sweep_var": "kappa", "range": [0.004, 0.0065], "steps": 6}
    assert run(tmp_path, "sweep", cfg) == 0
    header, rows = read_csv(tmp_path / "out/sweep.csv")
    assert header == ["value", "bifurcated", "theta_b", "mst_seed_fraction", "doublet_count"]
    values = [float(r[0]) for r in rows]
    flags = [r[1] for r in rows]
    flips = [i for i in range(1, len(flags)) if flags[i] != flags[i - 1]]
    assert len(flips) == 1
    kc = critical_kappa(100, 1.0)
    assert values[flips[0] - 1] <= kc <= values[flips[0]]
    for r in rows:
        assert (r[2] == "") == (r[1] == "0")
    theta_b = [float(r[2]) for r in rows if r[2]]
    assert all(t < math.pi for t in theta_b) and np.all(np.diff(theta_b) < 0)


def test_sweep_single_point(tmp_path):
    cfg = {"N": 20, "Omega": 1.0, "kappa": 0.01, "range": [0.01, 0.01], "steps": 1}
    assert run(tmp_path, "sweep", cfg) == 0
    _, rows = read_csv(tmp_path / "out/sweep.csv")
    assert len(rows) == 1


def test_sweep_rejects_decreasing_range(tmp_path):
    cfg = {"N": 20, "Omega": 1.0, "kappa": 0.01, "range": [0.02, 0.01], "steps": 3}
    assert run(tmp_path, "sweep", cfg) == cli.EXIT_PARAMS


def test_params_from_trap(tmp_path, capsys):
    cfg = {"N": 100, "trap": {"mass": 1.0, "omega_trap": 1.0, "q0": 2.0, "a_scatter": 0.01}}
    assert run(tmp_path, "params", cfg, extra=["--from-trap"]) == 0
    data = json.loads(capsys.readouterr().out)
    p = data["parameters"]
    eps = math.exp(-4.0)
    assert p["eta"] == pytest.approx(p["kappa"] * eps ** 2)
    assert p["Lambda"] == pytest.approx(p["kappa"] * eps ** 1.5)
    assert p["trap"]["q0"] == 2.0
    assert run(tmp_path, "params", {"N": 100, "Omega": 1.0, "kappa": 0.01}, extra=["--from-trap"]) == 2


def test_determinism(tmp_path):
    cfg = dict(BASE, t_end=3.0, n_times=31, seeds=[[1.0, 0.5], [2.5, 0.0]], n_theta=9, n_phi=8, times=[1.0])
    for out in ("a", "b"):
        for command in ("spectrum", "evolve", "fixed-points", "portrait", "husimi"):
            assert run(tmp_path, command, cfg, out=out) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert len(names) == 7
    for name in names:
        a = (tmp_path / "a" / name).read_bytes()
        assert a == (tmp_path / "b" / name).read_bytes()
        assert b"\r" not in a


def test_exit_code_inadmissible(tmp_path, caplog):
    bad = {"N": 100, "Omega": 1.0, "kappa": 0.01, "eta": 0.02, "Lambda": 0.0}
    assert run(tmp_path, "spectrum", bad) == cli.EXIT_PARAMS
    assert not (tmp_path / "out/spectrum.csv").exists()
    assert run(tmp_path, "spectrum", dict(bad, validation="warn")) == 0
    info = json.loads((tmp_path / "out/spectrum_analysis.json").read_text())
    assert info["parameters"]["regime_violations"]


@pytest.mark.parametrize(
    "config",
    [
        {"Omega": 1.0, "kappa": 0.01},
        {"N": 1, "Omega": 1.0, "kappa": 0.01},
        {"N": 10, "Omega": 1.0},
        {"N": 10, "Omega": 1.0, "kappa": -1.0},
        {"N": 10, "Omega": 1.0, "kappa": 0.01, "validation": "sometimes"},
        {"N": 10, "trap": {"mass": 1.0}},
    ],
)
def test_exit_code_invalid(tmp_path, config):
    assert run(tmp_path, "spectrum", config) == cli.EXIT_PARAMS


def test_exit_code_bad_json(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{not json")
    assert cli.main(["spectrum", "--config", str(path), "--out", str(tmp_path)]) == cli.EXIT_PARAMS


def test_exit_code_io(tmp_path):
    (tmp_path / "blocker").write_text("")
    assert run(tmp_path, "spectrum", BASE, out="blocker/sub") == cli.EXIT_IO
    assert cli.main(["spectrum", "--config", str(tmp_path / "missing.json")]) == cli.EXIT_IO


def test_exit_code_numerical(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise numerics.ConvergenceError("forced")

    monkeypatch.setattr(numerics, "eigh", boom)
    assert run(tmp_path, "spectrum", BASE) == cli.EXIT_NUMERIC


def test_zero_omega_uses_raw_time(tmp_path, caplog):
    cfg = {"N": 10, "Omega": 0.0, "kappa": 0.1, "validation": "warn", "t_end": 1.0, "n_times": 11}
    with caplog.at_level("WARNING", logger="bec_dimer"):
        assert run(tmp_path, "evolve", cfg) == 0
    assert any("raw t" in r.message for r in caplog.records)
    _, rows = read_csv(tmp_path / "out/evolve.csv")
    assert float(rows[-1][0]) == 1.0


def test_console_script_entry_point(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"N": 10, "Omega": 1.0, "kappa": 0.01}))
    proc = subprocess.run(
        [sys.executable, "-m", "bec_dimer.cli", "fixed-points", "--config", str(cfg), "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "fixed_points.json").exists()
