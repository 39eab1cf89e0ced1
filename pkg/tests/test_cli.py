import json

import pytest

from casimir_scatter.cli import EXIT_CONFIG, EXIT_IO, EXIT_NONCONVERGED, EXIT_OK, SCHEMA, run


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0] == f"# schema={SCHEMA}"
    assert lines[1].startswith("# provenance=")
    prov = json.loads(lines[1][len("# provenance="):])
    header = lines[2].split(",")
    rows = [line.split(",") for line in lines[3:]]
    return prov, header, rows


def test_energy_json(tmp_path, capsys):
    assert run(["energy", "--radius-nm", "10", "--distance-nm", "100", "--no-cache"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["schema"] == SCHEMA
    (rec,) = doc["records"]
    assert rec["E_eV"] < 0 and rec["converged"] is True
    assert doc["provenance"]["version"]


def test_energy_needs_geometry(capsys):
    assert run(["energy", "--radius-nm", "10", "--no-cache"]) == EXIT_CONFIG


def test_bad_flag_values():
    assert run(["curve", "--points", "1", "--no-cache"]) == EXIT_CONFIG
    assert run(["curve", "--l-min-nm", "10", "--l-max-nm", "5", "--no-cache"]) == EXIT_CONFIG
    assert run(["curve", "--radii-nm", "2,-1", "--no-cache"]) == EXIT_CONFIG
    assert run(["nonsense"]) == EXIT_CONFIG


def test_curve_csv_schema(tmp_path):
    out = tmp_path / "curve.csv"
    args = ["curve", "--radius-nm", "2", "--l-min-nm", "5", "--l-max-nm", "50", "--points", "5", "--no-cache"]
    assert run(args + ["-o", str(out)]) == EXIT_OK
    prov, header, rows = read_csv(out)
    assert header == ["L_nm", "R_nm", "E_eV", "F_eV_per_nm", "nu", "converged"]
    assert len(rows) == 5
    assert all(float(r[2]) < 0 and float(r[3]) < 0 for r in rows)
    assert prov["command"] == "curve" and prov["cache_hits"] == 0


def test_curve_json_mirrors_csv(tmp_path):
    base = ["curve", "--radius-nm", "2", "--l-min-nm", "5", "--l-max-nm", "50", "--points", "4", "--no-cache"]
    assert run(base + ["-o", str(tmp_path / "a.csv")]) == EXIT_OK
    assert run(base + ["--format", "json", "-o", str(tmp_path / "a.json")]) == EXIT_OK
    _, header, rows = read_csv(tmp_path / "a.csv")
    records = json.loads((tmp_path / "a.json").read_text())["records"]
    assert [list(r) for r in records] == [header] * 4
    assert [r["E_eV"] for r in records] == [float(r[2]) for r in rows]


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("material.plane.lambda_p_nm = 150\nmaterial.plane.model = drude\nnumerics.xi_nodes = 30\n")
    out = tmp_path / "e.json"
    assert run(["energy", "--radius-nm", "5", "--distance-nm", "20", "--config", str(cfg), "--no-cache", "-o", str(out)]) == 0
    prov = json.loads(out.read_text())["provenance"]
    assert prov["plane"]["lambda_p_nm"] == 150.0
    assert prov["numerics"]["xi_nodes"] == 30
    cfg.write_text("numerics.bogus = 1\n")
    assert run(["energy", "--radius-nm", "5", "--distance-nm", "20", "--config", str(cfg), "--no-cache"]) == EXIT_CONFIG
    assert run(["energy", "--radius-nm", "5", "--distance-nm", "20", "--config", str(tmp_path / "missing")]) == EXIT_CONFIG


def test_nonconvergence_exit_code_still_writes(tmp_path):
    out = tmp_path / "c.csv"
    args = ["curve", "--radius-nm", "10", "--l-min-nm", "1", "--l-max-nm", "2", "--points", "3", "--lmax", "3"]
    assert run(args + ["--no-cache", "-o", str(out)]) == EXIT_NONCONVERGED
    _, header, rows = read_csv(out)
    assert "false" in [r[-1] for r in rows]


def test_unwritable_output(tmp_path):
    target = tmp_path / "no" / "such" / "dir" / "x.json"
    assert run(["asymptotics", "--no-cache", "-o", str(target)]) == EXIT_IO


def test_cache_env_and_clear(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("CASIMIR_CACHE_DIR", str(tmp_path / "cache"))
    args = ["curve", "--radius-nm", "2", "--l-min-nm", "5", "--l-max-nm", "50", "--points", "3"]
    assert run(args + ["-o", str(tmp_path / "cold.csv")]) == EXIT_OK
    assert run(args + ["-o", str(tmp_path / "warm.csv")]) == EXIT_OK
    cold_prov, _, cold = read_csv(tmp_path / "cold.csv")
    warm_prov, _, warm = read_csv(tmp_path / "warm.csv")
    assert cold == warm
    assert cold_prov["cache_hits"] == 0 and warm_prov["cache_hits"] == 3
    assert run(["cache-clear"]) == EXIT_OK
    assert "removed 3" in capsys.readouterr().out
    assert not list((tmp_path / "cache").glob("*.json"))


def test_asymptotics_command(capsys):
    assert run(["asymptotics", "--radius-nm", "10", "--distance-nm", "100", "--no-cache"]) == EXIT_OK
    (rec,) = json.loads(capsys.readouterr().out)["records"]
    assert abs(rec["L_star_nm"] - 39.15) < 0.1
    assert abs(rec["c3_prime_over_c3"] - 0.84) < 0.01
    assert rec["E_CP_eV"] < 0 and rec["E_PFA_eV"] < 0


def test_figure1(tmp_path):
    out = tmp_path / "fig1.csv"
    assert run(["figures", "fig1", "--no-cache", "-o", str(out)]) == EXIT_OK
    _, header, rows = read_csv(out)
    assert header == ["xi_over_omega_p", "xi_hat_per_nm", "eps_plane", "eps_sphere"]
    assert float(rows[0][0]) == pytest.approx(1e-3) and float(rows[-1][0]) == pytest.approx(1e2)
    assert all(float(r[2]) > 1 and float(r[3]) > 1 for r in rows)


def test_small_figures(tmp_path):
    small = ["--l-min-nm", "5", "--l-max-nm", "40", "--points", "4", "--radii-nm", "2,5", "--no-cache"]
    assert run(["figures", "fig2", *small, "-o", str(tmp_path / "f2.csv")]) == EXIT_OK
    _, header, _ = read_csv(tmp_path / "f2.csv")
    assert header == ["L_nm", "absE_eV_R2nm", "absE_eV_R5nm", "converged"]
    assert run(["figures", "fig3", *small, "-o", str(tmp_path / "f3.csv")]) == EXIT_OK
    _, header, rows = read_csv(tmp_path / "f3.csv")
    assert header[-2:] == ["nu_atomic", "converged"]
    assert run(["figures", "fig4", *small, "-o", str(tmp_path / "f4.csv")]) == EXIT_OK
    _, header, rows = read_csv(tmp_path / "f4.csv")
    assert all(float(r[-2]) == 3.0 for r in rows)
    assert run(["figures", "fig5", *small[:6], "--no-cache", "-o", str(tmp_path / "f5.csv")]) == EXIT_OK
    _, header, _ = read_csv(tmp_path / "f5.csv")
    assert header == ["L_nm", "E_over_Ecp_bar", "E_over_Evdw_bar", "converged"]


def test_dump_block(tmp_path):
    path = tmp_path / "blk.csv"
    assert run(["energy", "--radius-nm", "2", "--distance-nm", "10", "--no-cache", "--dump-block", str(path), "--dump-m", "1"]) == 0
    assert path.read_text().startswith("row,col")
