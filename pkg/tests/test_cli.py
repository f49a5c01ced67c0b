import csv
import json

import pytest

from degenwave.cli import EXIT_OK, EXIT_SOLVER, EXIT_USAGE, load_config, main


def write_ini(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


SMALL_SIM = """
[simulate]
left = -30
right = 5
h = 0.05
t_final = 6
"""


def test_missing_config_is_usage_error(tmp_path, capsys):
    assert main(["speed", "--config", str(tmp_path / "nope.ini")]) == EXIT_USAGE
    assert "usage" in capsys.readouterr().err


def test_unknown_command_and_key(tmp_path):
    cfg = write_ini(tmp_path, "[model]\nm = 2\n")
    assert main(["frobnicate", "--config", cfg]) == EXIT_USAGE
    bad = write_ini(tmp_path, "[model]\nmm = 2\n", "bad.ini")
    assert main(["speed", "--config", bad]) == EXIT_USAGE


def test_defaults_are_filled(tmp_path):
    cfg = load_config(write_ini(tmp_path, "[model]\nchi = 0.05\n"), tmp_path)
    assert cfg.model == {"m": 2.0, "chi": 0.05, "a": 1.0, "b": 1.0, "tau": 0.0}
    assert cfg.sections["speed"]["profile_tol"] == 1e-6


def test_variational_command(tmp_path):
    out = tmp_path / "out"
    assert main(["variational", "--config", write_ini(tmp_path, "[model]\nm = 2\n"),
                 "--out", str(out)]) == EXIT_OK
    res = json.loads((out / "variational.json").read_text())
    assert res["schema_version"] == 1
    assert res["c_star_0"] == pytest.approx(1.0, abs=1e-5)
    assert res["sigma"] == pytest.approx(3.0, rel=1e-4)
    assert res["config"]["model"]["m"] == 2.0
    with open(out / "weight.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["s", "g"] and float(rows[1][1]) == pytest.approx(3.0, rel=1e-4)


def test_variational_rejects_linear_diffusion(tmp_path, capsys):
    cfg = write_ini(tmp_path, "[model]\nm = 1\n")
    assert main(["variational", "--config", cfg, "--out", str(tmp_path)]) == EXIT_SOLVER
    assert "degenerate solver requires m > 1" in capsys.readouterr().err


def test_speed_command_is_deterministic(tmp_path):
    cfg = write_ini(tmp_path, "[model]\nchi = 0.05\n")
    assert main(["speed", "--config", cfg, "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["speed", "--config", cfg, "--out", str(tmp_path / "b")]) == EXIT_OK
    first = (tmp_path / "a" / "speed.json").read_bytes()
    assert first == (tmp_path / "b" / "speed.json").read_bytes()
    res = json.loads(first)
    assert 0.925 <= res["ratio"] < 1 and res["bounds_check"] == "pass"
    assert res["admissible"] is True and res["converged"] is True
    assert (tmp_path / "a" / "run_meta.json").exists()
    with open(tmp_path / "a" / "profile.csv") as fh:
        assert next(csv.reader(fh)) == ["xi", "phi", "eta", "eta1"]


def test_speed_without_chemotaxis(tmp_path):
    cfg = write_ini(tmp_path, "[model]\nm = 2\n")
    assert main(["speed", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    assert json.loads((tmp_path / "speed.json").read_text())["ratio"] == 1.0


def test_speed_flags_inadmissible_chi(tmp_path):
    cfg = write_ini(tmp_path, "[model]\nchi = 0.3\n[speed]\nh = 0.002\n")
    code = main(["speed", "--config", cfg, "--out", str(tmp_path)])
    res = json.loads((tmp_path / "speed.json").read_text())
    assert code in (0, 3)
    assert res["admissible"] is False and len(res["admissibility"]["bounds"]) == 3


def test_simulate_command(tmp_path):
    cfg = write_ini(tmp_path, SMALL_SIM + "snapshots = 1, 3\n")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    res = json.loads((tmp_path / "simulate.json").read_text())
    assert res["empirical_speed"] == pytest.approx(1.0, rel=0.05)
    assert res["dt"] == "adaptive" and res["delta"] == pytest.approx(1e-3)
    assert (tmp_path / "front.csv").exists() and (tmp_path / "snapshot_t1.csv").exists()


def test_simulate_short_run_fails(tmp_path):
    cfg = write_ini(tmp_path, SMALL_SIM.replace("t_final = 6", "t_final = 0.5"))
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == EXIT_SOLVER


def test_simulate_cfl_violation(tmp_path):
    cfg = write_ini(tmp_path, SMALL_SIM + "dt = 0.1\n")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == EXIT_SOLVER


@pytest.mark.parametrize("m,cls", [(2.5, "sharp"), (1.5, "C1")])
def test_classify_command(tmp_path, m, cls):
    cfg = write_ini(tmp_path, f"[model]\nm = {m}\nchi = 0.01\n")
    assert main(["classify", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    res = json.loads((tmp_path / "classify.json").read_text())
    assert res["class"] == cls and res["consistency"] == "pass"
    assert res["expected_exponent"] == pytest.approx(1 / (m - 1))


def test_sweep_flags_failing_cell(tmp_path):
    cfg = write_ini(tmp_path, "[sweep]\nchi_values = 0, 0.05, -1\n")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    with open(tmp_path / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["status"] for r in rows][:2] == ["ok", "ok"]
    assert rows[2]["status"].startswith("error")
    assert float(rows[0]["ratio"]) == 1.0 and float(rows[1]["ratio"]) < 1.0


def test_sweep_in_parallel(tmp_path):
    cfg = write_ini(tmp_path, "[sweep]\nchi_values = 0.02, 0.1\n")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path), "--workers", "2"]) == EXIT_OK
    rows = json.loads((tmp_path / "sweep.json").read_text())["rows"]
    assert [r["chi"] for r in rows] == [0.02, 0.1]
    assert rows[1]["ratio"] < rows[0]["ratio"] < 1


def test_empty_sweep_is_usage_error(tmp_path):
    cfg = write_ini(tmp_path, "[sweep]\nchi_values =\n")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == EXIT_USAGE
