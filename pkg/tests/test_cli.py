import json
import subprocess
import sys

import numpy as np
import pytest

from metriq.cli import main
from metriq.fock import eigh
from metriq.quantizer import antinormal_quantize_rule
from metriq.symbols import parse_symbol

GOLDEN_GROUND = 3.9088207904205


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--json", "-")
    return code, json.loads(out), err


def test_spectrum_oscillator(capsys):
    code, rec, _ = run_json(capsys, "spectrum", "p^2 + q^2", "--tol", "1e-8")
    assert code == 0 and rec["passed"]
    eig = [r["eig_D"] for r in rec["rows"]]
    assert np.max(np.abs(np.array(eig) - [2, 4, 6, 8, 10])) <= 1e-8


def test_spectrum_constant(capsys):
    code, rec, _ = run_json(capsys, "spectrum", "1")
    assert code == 0
    assert all(abs(r["eig_D"] - 1) < 1e-14 for r in rec["rows"])


def test_spectrum_quartic_stable(capsys):
    code, rec, _ = run_json(capsys, "spectrum", "p^2 + q^2 + q^4", "--dim", "80", "-k", "1")
    assert code == 0
    e80 = rec["rows"][0]["eig_D"]
    e60 = eigh(antinormal_quantize_rule(parse_symbol("p^2 + q^2 + q^4"), 60))[0][0]
    assert abs(e80 - e60) <= 1e-6
    assert abs(e80 - GOLDEN_GROUND) <= 1e-10


def test_golden_against_position_grid():
    # anti-Wick p^2 + q^2 + q^4 at hbar = 1 is P^2 + 4 Q^2 + Q^4 + 7/4; sinc-DVR for the ground level
    n, L = 301, 8.0
    x = np.linspace(-L, L, n)
    dx = x[1] - x[0]
    i = np.arange(n)
    d = i[:, None] - i[None, :]
    with np.errstate(divide="ignore"):
        K = np.where(d == 0, np.pi ** 2 / 3, 2.0 * (-1.0) ** d / np.where(d == 0, 1, d) ** 2) / dx ** 2
    H = K + np.diag(4 * x ** 2 + x ** 4)
    e0 = np.linalg.eigvalsh(H)[0] + 1.75
    assert abs(e0 - GOLDEN_GROUND) <= 1e-9


def test_spectrum_truncation_check_fails_when_tight(capsys):
    code, rec, _ = run_json(capsys, "spectrum", "p^2 + q^2 + q^4", "--dim", "32", "--tol", "1e-12")
    assert code == 1 and not rec["passed"]


def test_metric_commands(capsys):
    code, rec, _ = run_json(capsys, "metric", "ground")
    r = rec["report"]
    assert code == 0 and abs(r["gpp"] - 1) < 1e-12 and abs(r["gqq"] - 1) < 1e-12 and abs(r["gpq"]) < 1e-12
    code, rec, _ = run_json(capsys, "metric", "number:1")
    assert code == 0 and abs(rec["report"]["gpp"] - 3) < 1e-12 and abs(rec["report"]["gqq"] - 3) < 1e-12
    code, rec, _ = run_json(capsys, "metric", "ground", "--hbar", "0.25")
    assert code == 0 and abs(rec["report"]["gpp"] - 0.25) < 1e-12


def test_metric_from_file(capsys, tmp_path):
    from metriq.fock import StateVector
    v = StateVector(np.r_[1.0, 1.0j, np.zeros(38)]).normalize()
    f = tmp_path / "eta.json"
    f.write_text(v.to_json())
    code, rec, _ = run_json(capsys, "metric", f"file:{f}", "--dim", "40")
    assert code == 0


def test_metric_unknown_fiducial(capsys):
    code, _, err = run(capsys, "metric", "squeezed")
    assert code == 2 and "unknown fiducial" in err


def test_propagate_exact_h0_is_overlap(capsys):
    from metriq.coherent import CoherentFamily, overlap
    code, rec, _ = run_json(capsys, "propagate", "0", "--start", "0.2,0.1", "--end", "1,-0.5", "--T", "3")
    ref = overlap(CoherentFamily.ground(60), (1, -0.5), (0.2, 0.1))
    assert code == 0 and abs(complex(*rec["value"]) - ref) < 1e-10


def test_propagate_wiener_mc(capsys):
    code, rec, _ = run_json(capsys, "propagate", "0.5 p^2 + 0.5 q^2", "--method", "wiener-mc",
                            "--samples", "20000")
    assert code == 0 and rec["relative_deviation"] <= 0.1 and rec["sampler"] == "deformed"


def test_propagate_feynman_free(capsys):
    code, rec, _ = run_json(capsys, "propagate", "0.5 p^2", "--method", "feynman-lattice",
                            "--start", "0,0", "--end", "0,1", "--T", "1", "--N", "100")
    assert code == 0 and rec["relative_deviation"] <= 1e-2


def test_propagate_failing_check_exits_1(capsys):
    code, rec, _ = run_json(capsys, "propagate", "0.5 p^2 + 0.5 q^2", "--method", "wiener-gaussian",
                            "--nu", "5", "--tol", "0.01")
    assert code == 1 and rec["checks"]["oracle_agreement"] is False


@pytest.mark.parametrize("args", [["p^2 + q^2", "--map", "identity"],
                                  ["p^2 + q^2", "--map", "scaling", "--lambda", "2"],
                                  ["q^2", "--map", "cubic"]])
def test_transform_check(capsys, args):
    code, rec, _ = run_json(capsys, "transform-check", *args, "--dim", "40")
    assert code == 0 and rec["passed"]


def test_resolution_check(capsys):
    code, rec, _ = run_json(capsys, "resolution-check", "ground", "--dim", "40", "--L", "8", "--states", "10")
    assert code == 0 and rec["rows"][0]["deviation"] <= 1e-6
    code, rec, _ = run_json(capsys, "resolution-check", "number:1", "--dim", "40", "--L", "8",
                            "--states", "8", "--tol", "1e-5")
    assert code == 0
    code, rec, _ = run_json(capsys, "resolution-check", "ground", "--dim", "40", "--L", "3", "--states", "10")
    assert code == 1


def test_classical_export(capsys, tmp_path):
    csv_path = tmp_path / "traj.csv"
    code, out, _ = run(capsys, "classical", "0.5 p^2 + 0.5 q^2", "--T", "100", "--dt", "0.01",
                       "--csv", str(csv_path))
    assert code == 0 and "check energy_drift: PASS" in out
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "t,p,q,E" and len(lines) == 10002


def test_parse_error_exit_2(capsys):
    code, _, err = run(capsys, "spectrum", "p^2 + * q")
    assert code == 2 and "position" in err


def test_non_real_symbol_rejected(capsys):
    code, _, err = run(capsys, "spectrum", "p^7", "--dim", "12")
    assert code == 2


def test_unknown_config_key(capsys, tmp_path):
    code, _, err = run(capsys, "spectrum", "1", "--set", "path.colour=3")
    assert code == 2 and "unknown config key" in err
    cfg = tmp_path / "run.cfg"
    cfg.write_text("hbar = 1\nbogus = 2\n")
    code, _, err = run(capsys, "spectrum", "1", "--config", str(cfg))
    assert code == 2


def test_config_file_and_overrides(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# oscillator\nhbar = 0.5\nk = 3\npath.nu = 20\n")
    code, rec, _ = run_json(capsys, "spectrum", "p^2 + q^2", "--config", str(cfg), "--dim", "30")
    assert code == 0
    assert rec["config"]["hbar"] == 0.5 and rec["config"]["dim"] == 30 and rec["config"]["path"]["nu"] == 20
    assert np.allclose([r["eig_D"] for r in rec["rows"]], [1, 2, 3], atol=1e-10)


def test_record_carries_config(capsys):
    _, rec, _ = run_json(capsys, "metric", "--seed", "3")
    assert rec["config"]["seed"] == 3
    assert set(rec["config"]) >= {"hbar", "dim", "seed", "quadrature", "path", "transform", "classical"}


def test_global_flags_either_side(capsys):
    c1, r1, _ = run_json(capsys, "--dim", "30", "spectrum", "p^2 + q^2")
    c2, r2, _ = run_json(capsys, "spectrum", "p^2 + q^2", "--dim", "30")
    assert c1 == c2 == 0 and r1 == r2


def test_byte_identical_outputs(tmp_path):
    outs = []
    for i in range(2):
        j, c = tmp_path / f"r{i}.json", tmp_path / f"r{i}.csv"
        code = main(["propagate", "0.5 p^2 + 0.5 q^2", "--method", "wiener-mc", "--samples", "5000",
                     "--seed", "9", "--N", "50", "--workers", str(1 + 2 * i), "--json", str(j), "--csv", str(c)])
        assert code == 0
        outs.append((j.read_bytes(), c.read_bytes()))
    rec0 = json.loads(outs[0][0])
    rec1 = json.loads(outs[1][0])
    # worker count is part of the recorded config; everything else must be identical
    rec0["config"]["path"].pop("workers")
    rec1["config"]["path"].pop("workers")
    assert rec0 == rec1
    assert outs[0][1] == outs[1][1]


def test_byte_identical_same_config(tmp_path):
    data = []
    for i in range(2):
        j = tmp_path / f"s{i}.json"
        main(["propagate", "0.5 p^2 + 0.5 q^2", "--method", "wiener-mc", "--samples", "3000", "--seed", "1",
              "--N", "40", "--sampler", "bridge", "--json", str(j)])
        data.append(j.read_bytes())
    assert data[0] == data[1]


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "metriq.cli", "spectrum", "p^2 + q^2", "--dim", "20"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "eig_D" in r.stdout
    r = subprocess.run([sys.executable, "-m", "metriq.cli", "spectrum"], capture_output=True, text=True)
    assert r.returncode == 2
