import json
import subprocess
import sys

import pytest

from jacobi_fbl.cli import main
from jacobi_fbl.spectral import capacity_approx, make_dims, snr_db_to_noise_power


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_capacity_report(capsys):
    code, out, _ = run(capsys, "capacity", "--N", "4", "--M", "6", "--n", "16", "--snr-db", "5")
    assert code == 0
    values = dict(line.split(None, 1) for line in out.splitlines())
    cbar = capacity_approx(make_dims(4, 6, 16), snr_db_to_noise_power(5)).cbar
    assert float(values["cbar"]) == cbar > 0


def test_capacity_json(capsys):
    code, out, _ = run(capsys, "capacity", "--N", "4", "--M", "6", "--n", "16", "--snr-db", "5", "--json")
    assert code == 0
    doc = json.loads(out)
    assert set(doc) >= {"delta", "delta_prime", "lambda_minus", "lambda_plus", "cbar"}


def test_capacity_bad_dims(capsys):
    code, out, err = run(capsys, "capacity", "--N", "4", "--M", "6", "--n", "9", "--snr-db", "5")
    assert code == 2
    assert "N+M exceeds n" in err and out == ""


def test_bounds_at_capacity(capsys):
    cbar = capacity_approx(make_dims(4, 6, 16), snr_db_to_noise_power(5)).cbar
    code, out, _ = run(capsys, "bounds", "--N", "4", "--M", "6", "--n", "16", "--L", "60",
                       "--snr-db", "5", "--rate", repr(cbar), "--json")
    doc = json.loads(out)
    assert code == 0 and doc["lower"] == doc["upper"] == 0.5


def test_bounds_fig2_point(capsys):
    code, out, _ = run(capsys, "bounds", "--N", "4", "--M", "6", "--n", "16", "--L", "60",
                       "--snr-db", "5", "--rate", "0.37", "--json")
    doc = json.loads(out)
    assert doc["upper"] > doc["outage"] and doc["r"] < 0


def test_bounds_positive_r_note(capsys):
    code, out, _ = run(capsys, "bounds", "--N", "4", "--M", "6", "--n", "16", "--L", "60",
                       "--snr-db", "5", "--rate", "0.8")
    assert code == 0
    assert "r>0 regime" in out
    lower = [l for l in out.splitlines() if l.startswith("lower")][0]
    assert float(lower.split()[1]) == 0.5


@pytest.mark.parametrize("argv", [["validate", "--suite", "nope"], ["bogus"], ["capacity", "--N", "4"],
                                  ["capacity", "--N", "4", "--M", "6", "--n", "16", "--snr-db", "5", "--extra"]])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2


def test_validate_analytic_suites(capsys):
    code, out, _ = run(capsys, "validate", "--suite", "gallager")
    assert code == 0 and "PASS" in out and "FAIL" not in out
    code, out, _ = run(capsys, "validate", "--suite", "rayleigh")
    assert code == 0


def test_validate_resolvent_suite(capsys):
    code, out, _ = run(capsys, "validate", "--suite", "lemma1", "--trials", "2000", "--seed", "7")
    assert code == 0, out


def test_validate_failure_exit_code(capsys, monkeypatch):
    from jacobi_fbl import validation
    from jacobi_fbl.validation import Check

    monkeypatch.setitem(validation.SUITES, "gallager", lambda t, s: [Check("x", False, "forced")])
    code, out, _ = run(capsys, "validate", "--suite", "gallager")
    assert code == 1 and "FAIL" in out


def test_sweep_outputs(tmp_path, capsys):
    out = tmp_path / "fig2.csv"
    code, text, _ = run(capsys, "sweep", "--preset", "fig2", "--out", str(out))
    assert code == 0 and "63 grid points" in text
    assert out.read_text().splitlines()[0] == "N,M,n,L,snr_db,rate,quantity,value,std_err,error"
    js = tmp_path / "fig3.json"
    code, _, _ = run(capsys, "sweep", "--preset", "fig3", "--out", str(js), "--format", "json")
    doc = json.loads(js.read_text())
    assert code == 0 and "provenance" in doc and doc["rows"]


def test_sweep_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[dims]\nn_rx = 4\n")
    code, _, err = run(capsys, "sweep", "--config", str(bad), "--out", str(tmp_path / "o.csv"))
    assert code == 2 and "missing section" in err
    code, _, err = run(capsys, "sweep", "--config", str(tmp_path / "none.cfg"), "--out", str(tmp_path / "o.csv"))
    assert code == 2


def test_sweep_seed_from_environment(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "mc.cfg"
    cfg.write_text(
        "[dims]\nn_rx = 4\nn_tx = 6\nn_avail = 16\nblocklen = 60\n[snr]\nsnr_db = 5\n"
        "[rate]\nrate = 0.37\n[mc]\nn_trials = 1000\nmaster_seed = 1\n[outputs]\nquantities = empirical_pe\n"
    )
    monkeypatch.setenv("JACOBI_FBL_SEED", "5")
    run(capsys, "sweep", "--config", str(cfg), "--out", str(tmp_path / "a.json"), "--format", "json")
    assert json.loads((tmp_path / "a.json").read_text())["provenance"]["master_seed"] == 5
    run(capsys, "sweep", "--config", str(cfg), "--out", str(tmp_path / "b.json"), "--format", "json", "--seed", "8")
    assert json.loads((tmp_path / "b.json").read_text())["provenance"]["master_seed"] == 8


def test_console_script_module_entry(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "jacobi_fbl.cli", "capacity", "--N", "2", "--M", "3", "--n", "8", "--snr-db", "0"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and "cbar" in proc.stdout


def test_sweep_point_failures_exit_1(tmp_path, capsys):
    cfg = tmp_path / "g.cfg"
    cfg.write_text(
        "[dims]\nn_rx = 6\nn_tx = 6\nn_avail = 12, 16\nblocklen = 60\n[snr]\nsnr_db = 5\n"
        "[rate]\nrate = 0.37\n[outputs]\nquantities = gallager\n"
    )
    code, _, err = run(capsys, "sweep", "--config", str(cfg), "--out", str(tmp_path / "g.csv"))
    assert code == 1 and "grid points failed" in err
