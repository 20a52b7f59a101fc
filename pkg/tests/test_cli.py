"""Command-line interface: configs, outputs, exit codes, determinism."""

import json

import numpy as np
import pytest

from hawkfol.cli import main


def write_config(tmp_path, config, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return str(path)


def test_energy_flat_sphere(tmp_path, capsys):
    cfg = write_config(tmp_path, {"preset": {"name": "flat"},
                                  "surface": {"radius": 1.0}})
    rc = main(["energy", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 0
    out = json.loads((tmp_path / "energy_result.json").read_text())
    assert abs(out["energy"]["hawking_energy"]) < 1e-10
    assert out["tool_version"]
    assert len(out["config_sha256"]) == 64


def test_energy_constant_k_p2_column(tmp_path):
    k = [[0.5, 0.0, 0.0], [0.0, -0.2, 0.0], [0.0, 0.0, 1.0]]
    cfg = write_config(tmp_path, {
        "preset": {"name": "constant_k", "params": {"k": k}},
        "surface": {"radius": 1.0}})
    rc = main(["energy", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 0
    out = json.loads((tmp_path / "energy_result.json").read_text())
    karr = np.array(k)
    expected = (8 * np.pi / 5) * np.trace(karr) ** 2 + (8 * np.pi / 15) * np.sum(karr * karr)
    assert abs(out["energy"]["int_P2"] - expected) < 1e-9
    csv_text = (tmp_path / "energy_result.csv").read_text()
    assert csv_text.startswith("# hawkfol")
    assert "int_P2" in csv_text


def test_malformed_config_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path, {"preset": {"name": "flat"}, "bogus": {}})
    assert main(["energy", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "unknown config section" in capsys.readouterr().err

    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    assert main(["energy", "--config", str(bad)]) == 2

    cfg = write_config(tmp_path, {"preset": {"name": "flat"},
                                  "surface": {"radius": 1.0, "typo": 2}}, "c2.json")
    assert main(["energy", "--config", cfg]) == 2


def test_unknown_preset_exits_3(tmp_path, capsys):
    cfg = write_config(tmp_path, {"preset": {"name": "wat"},
                                  "surface": {"radius": 1.0}})
    assert main(["energy", "--config", cfg, "--out", str(tmp_path)]) == 3


def test_flat_foliate_degenerate_exits_3(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "preset": {"name": "flat"},
        "grid": {"n_theta": 16, "n_phi": 32},
        "foliate": {"r_min": 0.02, "r_max": 0.1, "n_steps": 3}})
    assert main(["foliate", "--config", cfg, "--out", str(tmp_path)]) == 3
    assert "DegenerateHessian" in capsys.readouterr().err


def test_smallsphere_flat_excess_and_no_root(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "smallsphere": {"l_values": [0.02, 0.04, 0.06]}})
    assert main(["smallsphere", "--config", cfg, "--out", str(tmp_path)]) == 0
    out = json.loads((tmp_path / "smallsphere_result.json").read_text())
    assert all(abs(row["excess"]) < 1e-12 for row in out["report"]["rows"])

    cfg = write_config(tmp_path, {
        "smallsphere": {"sc4": 1.0e4, "l_values": [0.001, 0.05]}}, "c2.json")
    assert main(["smallsphere", "--config", cfg, "--out", str(tmp_path)]) == 0
    err = capsys.readouterr().err
    assert "no_root" in err
    out = json.loads((tmp_path / "smallsphere_result.json").read_text())
    assert out["report"]["rows"][1]["no_root"] is True


def test_check_command(tmp_path):
    assert main(["check", "--out", str(tmp_path), "--seed", "3"]) == 0
    out = json.loads((tmp_path / "check_result.json").read_text())
    assert all(c["passed"] for c in out["checks"])


def test_grid_flag_parse_error():
    assert main(["check", "--grid", "banana"]) == 2


@pytest.mark.slow
def test_solve_and_deterministic_rerun(tmp_path):
    cfg = write_config(tmp_path, {
        "preset": {"name": "conformal_quadratic", "params": {"eps": 0.01}},
        "grid": {"n_theta": 16, "n_phi": 32},
        "solve": {"radius": 0.05, "tol": 1e-6}})
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    assert main(["solve", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["solve", "--config", cfg, "--out", str(out2)]) == 0
    assert (out1 / "solve_result.json").read_bytes() == \
        (out2 / "solve_result.json").read_bytes()
    assert (out1 / "solve_result.csv").read_bytes() == \
        (out2 / "solve_result.csv").read_bytes()


@pytest.mark.slow
def test_foliate_resume_matches_full_run(tmp_path):
    base = {
        "preset": {"name": "conformal_quadratic", "params": {"eps": 0.01}},
        "grid": {"n_theta": 16, "n_phi": 32},
        "foliate": {"r_min": 0.03, "r_max": 0.08, "n_steps": 4, "tol": 1e-6}}
    cfg_full = write_config(tmp_path, base, "full.json")
    out_full = tmp_path / "full"
    assert main(["foliate", "--config", cfg_full, "--out", str(out_full)]) == 0

    # first two radii of geomspace(0.03, 0.08, 4) form geomspace(0.03, r2, 2)
    r2 = float(np.geomspace(0.03, 0.08, 4)[1])
    short = json.loads(json.dumps(base))
    short["foliate"]["n_steps"] = 2
    short["foliate"]["r_max"] = r2
    cfg_short = write_config(tmp_path, short, "short.json")
    out_short = tmp_path / "short"
    assert main(["foliate", "--config", cfg_short, "--out", str(out_short)]) == 0

    resumed = json.loads(json.dumps(base))
    resumed["foliate"]["resume"] = str(out_short / "foliate_result.json")
    cfg_resume = write_config(tmp_path, resumed, "resume.json")
    out_resume = tmp_path / "resume"
    assert main(["foliate", "--config", cfg_resume, "--out", str(out_resume)]) == 0

    full = json.loads((out_full / "foliate_result.json").read_text())["trace"]
    res = json.loads((out_resume / "foliate_result.json").read_text())["trace"]
    assert np.abs(np.array(full["lambda"]) - np.array(res["lambda"])).max() < 1e-10
    assert np.abs(np.array(full["r"]) - np.array(res["r"])).max() < 1e-14
    for s_full, s_res in zip(full["solutions"], res["solutions"]):
        assert np.abs(np.array(s_full["phi_coeffs"])
                      - np.array(s_res["phi_coeffs"])).max() < 1e-10
