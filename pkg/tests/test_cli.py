import csv
import json

import numpy as np
import pytest

from mpk.cli import run
from mpk.grid import GridFunction, write_grid
from mpk.symplectic import write_matrix


def _run(capsys, *args):
    code = run([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def test_sympcheck_identity(tmp_path, capsys):
    p = tmp_path / "I4.json"
    write_matrix(np.eye(4), p)
    code, out, _ = _run(capsys, "sympcheck", "--input", p, "--output-dir", tmp_path)
    obj = json.loads(out)
    assert code == 0 and obj["all_satisfied"]
    assert max(r["residual"] for r in obj["relations"]) == 0.0


def test_sympcheck_rejects(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("# symplectic d=1\n2,0\n0,1\n")
    code, out, err = _run(capsys, "sympcheck", "--input", p, "--output-dir", tmp_path)
    assert code == 1 and out == ""
    assert json.loads(err)["error"] == "NotSymplectic"


def test_validation_errors(tmp_path, capsys):
    code, _, err = _run(capsys, "demo", "classical-hardy", "--n", "100", "--output-dir", tmp_path)
    assert code == 1 and json.loads(err)["error"] == "ValidationError"
    code, _, err = _run(capsys, "demo", "no-such-demo")
    assert code == 1 and "message" in json.loads(err)


def test_demo_classical(tmp_path, capsys):
    code, out, _ = _run(capsys, "demo", "classical-hardy", "--a", 1, "--b", 1, "--output-dir", tmp_path)
    obj = json.loads(out)
    assert code == 0 and obj["verdict"]["status"] == "Extremal"
    assert obj["witness"] == "exp(-pi a |x|^2)"


def test_demo_example_reference_constants(tmp_path, capsys):
    code, out, _ = _run(capsys, "demo", "example-1-4", "--n", 128, "--reference", "unitary", "--output-dir", tmp_path)
    assert code == 0 and json.loads(out)["relative_error"] < 1e-3
    assert (tmp_path / "example_1_4.csv").exists()
    # with the constant 1/2 the closed form is off by the factor sqrt(2)
    code, out, _ = _run(capsys, "demo", "example-1-4", "--n", 128, "--output-dir", tmp_path)
    assert code == 1 and json.loads(out)["relative_error"] == pytest.approx(np.sqrt(2) - 1, rel=1e-4)


@pytest.mark.parametrize("name", ["sharpness-1-4", "frft-corollary", "anisotropic-oscillator",
                                  "harmonic-oscillator", "knutsen-comparison"])
def test_other_demos_pass(tmp_path, capsys, name):
    code, out, _ = _run(capsys, "demo", name, "--n", 128, "--L", np.sqrt(32), "--output-dir", tmp_path)
    assert code == 0 and json.loads(out)["pass"]


def test_frft_sweep_boundary(tmp_path, capsys):
    code, _, _ = _run(capsys, "sweep", "frft", "--a", 1, "--b", 1, "--count", 101, "--format", "csv",
                      "--output-dir", tmp_path)
    rows = list(csv.DictReader(open(tmp_path / "sweep_frft.csv")))
    status = [r["status"] for r in rows]
    assert code == 0 and status[50] == "Extremal"
    assert status[0] == status[-1] == "ConditionsViolated"
    assert set(status[1:50]) == set(status[51:100]) == {"Admissible"}


def test_oscillator_sweep_boundary(tmp_path, capsys):
    _run(capsys, "sweep", "oscillator", "--a", 2, "--b", 1, "--start", 0.01, "--stop", 3.13, "--count", 157,
         "--format", "csv", "--output-dir", tmp_path)
    for r in csv.DictReader(open(tmp_path / "sweep_oscillator.csv")):
        t = float(r["t1"])
        assert (r["status"] == "Vanishing") == (np.sin(t) ** 2 > 0.5 + 1e-8)


def test_empty_sweep(tmp_path, capsys):
    code, _, _ = _run(capsys, "sweep", "frft", "--count", 0, "--format", "csv", "--output-dir", tmp_path)
    assert code == 0
    assert (tmp_path / "sweep_frft.csv").read_text().strip() == "theta,a,b,status,max_eigenvalue"


def test_outputs_are_reproducible(tmp_path, capsys):
    outs = []
    for k in range(2):
        d = tmp_path / str(k)
        _, out, _ = _run(capsys, "sweep", "oscillator", "--a", 2, "--count", 31, "--format", "csv", "--output-dir", d)
        _, out2, _ = _run(capsys, "demo", "frft-corollary", "--theta", "0.3,1.2", "--output-dir", d)
        outs.append(((d / "sweep_oscillator.csv").read_bytes(), out.replace(str(d), ""), out2))
    assert outs[0] == outs[1]


def test_apply_and_strict(tmp_path, capsys):
    write_matrix(np.array([[0.0, 1.0], [-1.0, 0.0]]), tmp_path / "J.csv")
    g = GridFunction.from_function(lambda x: np.exp(-np.pi * x[..., 0] ** 2), 1, 64, 4.0)
    write_grid(g, tmp_path / "g.mpgf")
    code, out, _ = _run(capsys, "apply", "--matrix", tmp_path / "J.csv", "--input", tmp_path / "g.mpgf",
                        "--output-dir", tmp_path)
    obj = json.loads(out)
    assert code == 0 and obj["norm_out"] == pytest.approx(obj["norm_in"], rel=1e-7)
    write_grid(GridFunction(np.ones(64), 4.0), tmp_path / "flat.mpgf")
    args = ["apply", "--matrix", tmp_path / "J.csv", "--input", tmp_path / "flat.mpgf", "--output-dir", tmp_path]
    assert _run(capsys, *args)[0] == 0
    code, _, err = _run(capsys, *args, "--strict")
    assert code == 2 and json.loads(err)["error"] == "AliasRisk"


def test_hardy_and_evolve(tmp_path, capsys):
    cert = {"S": [[0, 1], [-1, 0]], "M": [[2]], "N": [[1]]}
    (tmp_path / "c.json").write_text(json.dumps(cert))
    code, out, _ = _run(capsys, "hardy", "--input", tmp_path / "c.json", "--output-dir", tmp_path)
    assert code == 0 and json.loads(out)["status"] == "Vanishing"
    (tmp_path / "h.json").write_text(json.dumps({"preset": "anisotropic_oscillator_2d"}))
    code, out, _ = _run(capsys, "evolve", "--input", tmp_path / "h.json", "--t1", np.pi / 4, "--a", 2, "--b", 1,
                        "--steps", 8, "--output-dir", tmp_path)
    obj = json.loads(out)
    assert code == 0 and obj["verdict"]["status"] == "Extremal"
    assert len((tmp_path / "trajectory.csv").read_text().splitlines()) == 10


def test_wigner_command(tmp_path, capsys):
    write_matrix(np.array([[0.0, 1.0], [-1.0, 0.0]]), tmp_path / "J.json")
    code, out, _ = _run(capsys, "wigner", "--matrix", tmp_path / "J.json", "--n", 128, "--L", 8,
                        "--output-dir", tmp_path)
    assert code == 0 and json.loads(out)["covariance_defect"] < 1e-4
    code, out, _ = _run(capsys, "wigner", "--n", 64, "--L", 4, "--x-stride", 4, "--output-dir", tmp_path)
    assert code == 0 and json.loads(out)["rows"] == 16 * 64
