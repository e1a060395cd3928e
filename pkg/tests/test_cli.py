import json

import numpy as np
import pytest

from wildgevrey import ConfigError
from wildgevrey.spectral import read_states_csv
from wildgevrey.cli import main
from wildgevrey.config import RunConfig, load_config, parse_config_text

FAST = ["--rmax", "8", "--grid-points", "65", "--t-final", "1", "--snapshots", "0.5,1"]


def run(cmd, tmp_path, *extra, out=None):
    out = out or tmp_path / "out"
    return main([cmd, *FAST, "--out", str(out), *extra]), out


def test_flags_override_file(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# comment\nkernel = maxwell\ngrid_points = 129\nt_final = 2\n")
    cfg = load_config(cfg_file, {"grid_points": "65"})
    assert cfg.mode == "boltzmann3d" and cfg.grid_points == 65 and cfg.t_final == 2.0


def test_config_text_round_trip():
    cfg = RunConfig(datum="mixture", cutoff_levels=(2.0, 5.0), k1=1.5)
    assert RunConfig(**parse_config_text(cfg.to_text())) == cfg


def test_unknown_key_rejected(tmp_path):
    with pytest.raises(ConfigError):
        parse_config_text("colour = blue")
    cfg_file = tmp_path / "bad.cfg"
    cfg_file.write_text("colour = blue\n")
    assert main(["simulate", "--config", str(cfg_file), "--out", str(tmp_path)]) == 2


def test_config_errors_exit_2(tmp_path):
    assert run("simulate", tmp_path, "--gamma", "4")[0] == 2
    assert run("simulate", tmp_path, "--mode", "boltzmann3d", "--kernel", "kac")[0] == 2
    assert main(["simulate", "--no-such-flag"]) == 2
    assert main(["simulate", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_simulate_outputs(tmp_path):
    code, out = run("simulate", tmp_path, "--datum", "mixture")
    assert code == 0
    header = (out / "snapshots.csv").read_text().splitlines()
    assert header[1] == "r,value,time_label"
    meta = json.loads(header[0][2:])
    assert meta["config"]["datum"] == "mixture"
    states = read_states_csv(out / "snapshots.csv")
    assert [s.time_label for s in states] == [0.0, 0.5, 1.0]
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["config"]["grid_points"] == 65
    assert (out / "snapshots.png").stat().st_size > 0 and (out / "config.txt").exists()


def test_simulate_without_snapshots(tmp_path):
    code, out = run("simulate", tmp_path, "--snapshots", "")
    assert code == 0
    assert [s.time_label for s in read_states_csv(out / "snapshots.csv")] == [0.0]


def test_cross_check(tmp_path):
    code, out = run("simulate", tmp_path, "--datum", "mixture", "--cross-check")
    assert code == 0
    diag = json.loads((out / "diagnostics.json").read_text())
    assert max(d["value"] for d in diag["cross_check"]["sup_difference"]) <= 1e-6
    assert (out / "ode_snapshots.csv").exists()


def test_rerun_is_byte_identical(tmp_path):
    names = ["snapshots.csv", "diagnostics.json", "snapshots.png", "config.txt"]
    _, out = run("simulate", tmp_path, "--datum", "mixture")
    first = {n: (out / n).read_bytes() for n in names}
    run("simulate", tmp_path, "--datum", "mixture")
    assert {n: (out / n).read_bytes() for n in names} == first


def test_verify_pass(tmp_path):
    code, out = run("verify-envelope", tmp_path, "--k1", "1", "--k2", "0.5", "--s", "2")
    assert code == 0
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["status"] == "PASS" and cert["config"]["k2"] == 0.5
    assert (out / "certificate.png").exists()


def test_verify_small_r0_fails(tmp_path):
    code, out = run("verify-envelope", tmp_path, "--datum", "mixture", "--k1", "1",
                    "--k2", "0.25", "--s", "1", "--r0", "0.5")
    assert code == 4
    assert json.loads((out / "certificate.json").read_text())["status"] == "FAIL"


def test_convergence_duplicate_levels(tmp_path):
    code, out = run("convergence-study", tmp_path, "--datum", "mixture",
                    "--cutoff-levels", "5,5", "--set", "refine=false")
    assert code == 0
    rows = (out / "convergence.csv").read_text().splitlines()
    assert rows[1] == "level,next_level,sup_difference" and rows[2].endswith(",0")
    assert (out / "convergence.png").exists() and (out / "sweep_states.csv").exists()


def test_convergence_needs_two_levels(tmp_path):
    assert run("convergence-study", tmp_path, "--cutoff-levels", "5")[0] == 2


def test_kernel_table(tmp_path):
    code, out = run("kernel-table", tmp_path, "--kernel", "maxwell", "--cutoff-levels", "2,5,10")
    assert code == 0
    rows = json.loads((out / "kernel_table.json").read_text())["rows"]
    assert [r["level"] for r in rows] == [2.0, 5.0, 10.0]
    assert all(abs(r["bstar"] - r["reference_bstar"]) <= 1e-10 * r["reference_bstar"] for r in rows)
    assert (out / "kernel_table.csv").exists() and (out / "kernel_table.png").exists()


def test_unresolved_kernel_exit_3(tmp_path):
    assert run("kernel-table", tmp_path, "--cutoff-levels", "1000", "--set", "kernel_nodes=16")[0] == 3
