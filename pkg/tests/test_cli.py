import csv
import json
import os

import numpy as np
import pytest

from bergerfill.cli import (
    EXIT_INVALID,
    EXIT_OK,
    PROFILE_COLUMNS,
    main,
    read_profile_csv,
    validate_profile,
    write_profile_csv,
)
from bergerfill.curvature import hyperbolic_profile


def _read_summary(d):
    with open(os.path.join(d, "summary.json")) as fh:
        return json.load(fh)


def _write_eigen_table(path, x, I1, I2):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "I1", "I2"])
        for i in range(len(x)):
            wr.writerow([f"{x[i]:.17g}", f"{I1[i]:.17g}", f"{I2[i]:.17g}"])


def test_solve_round_end_to_end(tmp_path):
    out = str(tmp_path)
    rc = main(["solve", "--phi0", "1", "--output-dir", out])
    assert rc == EXIT_OK
    s = _read_summary(out)
    assert s["mode"] == "solve"
    assert s["K0"] == pytest.approx(1.0, abs=1e-9)
    assert s["a"] == pytest.approx(0.0, abs=1e-9)
    assert s["q"] == pytest.approx(0.0, abs=1e-9)
    assert "timestamp" in s
    csv_path = os.path.join(out, s["profile_csv"])
    with open(csv_path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == PROFILE_COLUMNS
    assert len(rows) > 100


def test_solve_with_guess_option(tmp_path):
    rc = main(["solve", "--phi0", "1", "--guess", "0.9,0.05,0.05",
               "--output-dir", str(tmp_path)])
    assert rc == EXIT_OK
    s = _read_summary(str(tmp_path))
    assert s["K0"] == pytest.approx(1.0, abs=1e-8)


def test_missing_required_option(tmp_path, capsys):
    rc = main(["solve", "--output-dir", str(tmp_path)])
    assert rc == EXIT_INVALID
    assert "phi0" in capsys.readouterr().err


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"phi0": 1.0, "phi_zero": 2.0}))
    rc = main(["solve", "--config", str(cfg), "--output-dir", str(tmp_path)])
    assert rc == EXIT_INVALID
    assert "phi_zero" in capsys.readouterr().err


def test_config_mode_mismatch(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"mode": "scan", "phi0": 1.0}))
    rc = main(["solve", "--config", str(cfg), "--output-dir", str(tmp_path)])
    assert rc == EXIT_INVALID


def test_config_supplies_values(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"mode": "solve", "phi0": 1.0,
                               "output_dir": str(tmp_path)}))
    rc = main(["solve", "--config", str(cfg)])
    assert rc == EXIT_OK
    assert _read_summary(str(tmp_path))["phi0"] == 1.0


def test_invalid_subcommand_exits_3():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == EXIT_INVALID


def test_nonpositive_tol_rejected(tmp_path, capsys):
    rc = main(["solve", "--phi0", "1", "--tol", "-1",
               "--output-dir", str(tmp_path)])
    assert rc == EXIT_INVALID


def test_output_dir_env_override(tmp_path, monkeypatch):
    env_dir = tmp_path / "env_out"
    monkeypatch.setenv("BERGERFILL_OUTPUT_DIR", str(env_dir))
    rc = main(["solve", "--phi0", "1", "--output-dir", str(tmp_path / "cli")])
    assert rc == EXIT_OK
    assert (env_dir / "summary.json").exists()
    assert not (tmp_path / "cli").exists()


def test_profile_csv_round_trip(tmp_path):
    prof = hyperbolic_profile(n=60)
    path = str(tmp_path / "prof.csv")
    write_profile_csv(path, prof)
    back = read_profile_csv(path)
    assert np.allclose(back.x, prof.x, atol=0)
    assert np.allclose(back.y1, prof.y1, atol=0)
    assert np.allclose(back.w, prof.w, atol=0)


def test_curvature_subcommand(tmp_path):
    prof = hyperbolic_profile(n=120)
    path = str(tmp_path / "prof.csv")
    write_profile_csv(path, prof)
    rc = main(["curvature", "--input", path, "--plane-samples", "120",
               "--output-dir", str(tmp_path)])
    assert rc == EXIT_OK
    s = _read_summary(str(tmp_path))
    assert s["einstein_residual"] < 1e-6
    assert s["sec_max"] < 0.0
    assert s["flag_nonpositive"]


def test_validate_profile_accepts_round(tmp_path):
    x = np.linspace(0.05, 0.95, 60)
    path = str(tmp_path / "table.csv")
    _write_eigen_table(path, x, np.ones_like(x), np.ones_like(x))
    rep = validate_profile(path)
    assert rep["einstein"]
    rc = main(["validate-profile", path, "--output-dir", str(tmp_path)])
    assert rc == EXIT_OK
    assert _read_summary(str(tmp_path))["einstein"] is True


def test_validate_profile_rejects_perturbed(tmp_path):
    x = np.linspace(0.05, 0.95, 60)
    path = str(tmp_path / "table.csv")
    _write_eigen_table(path, x, 1.01 * np.ones_like(x), np.ones_like(x))
    rep = validate_profile(path)
    assert not rep["einstein"]


def test_validate_profile_rejects_bad_table(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,I1\n0.1,1.0\n")
    rc = main(["validate-profile", str(path), "--output-dir", str(tmp_path)])
    assert rc == EXIT_INVALID


def test_probe_summary_deterministic(tmp_path):
    d1, d2 = str(tmp_path / "one"), str(tmp_path / "two")
    for d in (d1, d2):
        rc = main(["probe", "--phi0", "1", "--starts", "8", "--seed", "3",
                   "--output-dir", d])
        assert rc == EXIT_OK
    s1, s2 = _read_summary(d1), _read_summary(d2)
    t1, t2 = s1.pop("timestamp"), s2.pop("timestamp")
    assert s1 == s2
    assert s1["n_clusters"] == 1
