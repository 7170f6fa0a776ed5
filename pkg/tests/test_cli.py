import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from bnls.cli import RunConfig, main, perturbation_profile
from bnls.core import ConfigError, SampledField, SpatialGrid, load_field, load_scattering_data, save_field
from oracles import soliton_profile

SMALL = {"grid": {"half_width": 20.0, "n_points": 1025},
         "spectral": {"z_max": 20.0, "n_points": 801}}


def run_cli(tmp_path, command, cfg, name="cfg.json", extra=()):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    out = tmp_path / f"out_{command}"
    code = main([command, "--config", str(path), "--out", str(out), *extra])
    return code, out


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


# -- configuration errors ----------------------------------------------------


def test_malformed_json(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{q: 0.25")
    assert main(["scatter", "--config", str(p)]) == 2
    assert "malformed JSON" in capsys.readouterr().err


@pytest.mark.parametrize("cfg", [
    {},
    {"q": "a"},
    {"q": 0.25, "unknown": 1},
    {"q": 0.25, "mu0": 0.2},
    {"q": 0.25, "grid": {"half_width": 20.0, "n_points": 2048}},
    {"q": 0.25, "spectral": {"z_max": 20.0, "n_points": 800}},
    {"q": 0.25, "command": "simulate"},
    {"q": 0.25, "kappa": 0.3},
])
def test_invalid_config(tmp_path, cfg):
    assert run_cli(tmp_path, "scatter", cfg)[0] == 2


def test_other_usage_errors(tmp_path, monkeypatch):
    assert main(["scatter", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["bogus", "--config", "x.json"]) == 2
    assert run_cli(tmp_path, "scatter", {"q": 0.25}, extra=("--threads", "0"))[0] == 2
    assert run_cli(tmp_path, "asymptote", {"q": 0.25, "times": [0.5]})[0] == 2
    monkeypatch.setenv("BNLS_LOG", "loud")
    assert run_cli(tmp_path, "scatter", {"q": 0.25})[0] == 2


def test_run_config_defaults():
    cfg = RunConfig.from_mapping({"q": 0.1}, "solve")
    assert cfg.command == "solve" and cfg.mu0 == 1.0 and cfg.grid["n_points"] == 2049
    with pytest.raises(ConfigError):
        RunConfig.from_mapping({"q": 1.5}, "solve")


def test_perturbation_profile():
    x = np.linspace(-3, 3, 7)
    cfg = RunConfig.from_mapping({"q": 0.1, "perturbation": {"amplitude": 2.0, "sigma": 0.5,
                                                             "omega": 1.0}}, "solve")
    np.testing.assert_allclose(perturbation_profile(cfg, x), 2 * np.exp(-4 * x * x) * np.cos(x))
    seeded = {"q": 0.1, "seed": 3, "perturbation": {"random": True}}
    a = perturbation_profile(RunConfig.from_mapping(seeded, "solve"), x)
    b = perturbation_profile(RunConfig.from_mapping(seeded, "solve"), x)
    c = perturbation_profile(RunConfig.from_mapping({**seeded, "seed": 4}, "solve"), x)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


# -- commands ----------------------------------------------------------------


def test_extend(tmp_path):
    code, out = run_cli(tmp_path, "extend", {"q": 0.25, **SMALL})
    assert code == 0
    ue = load_field(out / "extension.csv")
    assert np.max(np.abs(ue.values - soliton_profile(1.0, 0.25, ue.x))) < 1e-6


def test_scatter_and_evolve(tmp_path, capsys):
    code, out = run_cli(tmp_path, "scatter", {"q": 0.25, **SMALL})
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["zeros"] == pytest.approx([1.0], abs=1e-6)
    assert summary["beta"] == -0.25
    data = load_scattering_data(out / "scattering.json")
    cfg = {"q": 0.25, "scattering": str(out / "scattering.json"), "times": [0.0, np.pi], **SMALL}
    code, out2 = run_cli(tmp_path, "evolve", cfg, name="evolve.json")
    assert code == 0
    later = load_scattering_data(out2 / f"scattering_t{np.pi:g}.json")
    assert later.norming_constants[0] == pytest.approx(
        data.norming_constants[0] * np.exp(-0.5j * data.zeros[0] ** 2 * np.pi), abs=1e-12)


def test_reconstruct_and_solve(tmp_path):
    cfg = {"q": 0.25, "times": [1.0], "x": [0.0, 1.0], **SMALL}
    code, out = run_cli(tmp_path, "reconstruct", cfg)
    assert code == 0
    rows = read_csv(out / "reconstruct.csv")
    assert abs(complex(float(rows[0]["re_u"]), float(rows[0]["im_u"]))) == pytest.approx(
        0.96824584, abs=1e-6)
    code, out = run_cli(tmp_path, "solve", cfg, extra=("--threads", "2"))
    assert code == 0
    u = load_field(out / "u_t1.csv")
    assert abs(u.values[u.grid.zero_index()]) == pytest.approx(0.96824584, abs=1e-4)


@pytest.mark.parametrize("theorem", ["main", "small_q"])
def test_asymptote(tmp_path, theorem):
    cfg = {"q": 0.1, "eps": 0.02, "theorem": theorem, "times": [10.0, 20.0], "x": [0.0, 2.0, 8.0],
           **SMALL}
    code, out = run_cli(tmp_path, "asymptote", cfg)
    assert code == 0
    rows = read_csv(out / "asymptote.csv")
    assert list(rows[0]) == ["x", "t", "re_u", "im_u", "error_scale", "regime"]
    assert len(rows) == 6
    assert {r["regime"] for r in rows} <= {"small", "overlap", "large"}
    u0 = complex(float(rows[0]["re_u"]), float(rows[0]["im_u"]))
    assert abs(abs(u0) - 0.99) < 0.05


def test_simulate_writes_snapshots_and_log(tmp_path):
    cfg = {"q": 0.25, "times": [0.5], "dt": 0.01, "monitor_every": 25,
           "pde_grid": {"half_width": 20.0, "n_points": 1001}}
    code, out = run_cli(tmp_path, "simulate", cfg)
    assert code == 0
    u = load_field(out / "sim_t0.5.csv")
    assert abs(u.values[500]) == pytest.approx(0.96824584, abs=1e-3)
    log = read_csv(out / "conserved.csv")
    assert [float(r["t"]) for r in log] == [0.0, 0.25, 0.5]


def test_blowup_guard_exit_code(tmp_path, capsys):
    grid = SpatialGrid.symmetric(20.0, 2001)
    save_field(SampledField(grid, (3 / np.cosh(grid.x)).astype(complex)), tmp_path / "u0.csv")
    cfg = {"q": 5.0, "mu0": 6.0, "input": str(tmp_path / "u0.csv"), "times": [5.0],
           "blowup_factor": 1.5}
    code, _ = run_cli(tmp_path, "simulate", cfg)
    assert code == 3
    assert "BlowUp" in capsys.readouterr().err
    # with the default factor the radiation reaches the boundary first
    code, _ = run_cli(tmp_path, "simulate", {**cfg, "blowup_factor": 10.0}, name="b.json")
    assert code == 3
    assert "TailContamination" in capsys.readouterr().err


def test_compare_exact_soliton(tmp_path, capsys):
    cfg = {"q": 0.25, "times": [1.0, 2.0], "x": [0.0, 1.0, 2.0], **SMALL}
    code, out = run_cli(tmp_path, "compare", cfg)
    assert code == 0
    sup = json.loads(capsys.readouterr().out)["sup_diff"]
    assert max(sup.values()) < 1e-3
    rows = read_csv(out / "compare.csv")
    assert len(rows) == 6 and "diff_ist_pde" in rows[0]


def test_outputs_are_deterministic(tmp_path):
    cfg = {"q": 0.25, "eps": 0.03, "seed": 11, "perturbation": {"random": True}, "times": [0.2],
           "dt": 0.01, "pde_grid": {"half_width": 15.0, "n_points": 601}}
    _, a = run_cli(tmp_path, "simulate", cfg, name="a.json")
    first = (a / "sim_t0.2.csv").read_bytes(), (a / "conserved.csv").read_bytes()
    _, b = run_cli(tmp_path, "simulate", cfg, name="a.json")
    assert ((b / "sim_t0.2.csv").read_bytes(), (b / "conserved.csv").read_bytes()) == first
    value = first[0].decode().splitlines()[1].split(",")[1]
    assert len(value.lstrip("-").replace(".", "").split("e")[0].lstrip("0")) <= 17


def test_module_entry_point(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text("[")
    proc = subprocess.run([sys.executable, "-m", "bnls", "scatter", "--config", str(p)],
                          capture_output=True, text=True)
    assert proc.returncode == 2
