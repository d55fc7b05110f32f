import json
import subprocess
import sys
from pathlib import Path

import pytest

from lindblad_lab.cli import main

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def payload(out):
    data = json.loads(out)
    assert data["schema"] == "lindblad-lab/1"
    return data


def test_validate_generator(capsys):
    code, out, _ = run(capsys, "validate", PROBLEMS / "two_level.json")
    assert code == 0
    assert payload(out)["valid"] is True


def test_validate_identity_map_fails(capsys):
    code, out, err = run(capsys, "validate", PROBLEMS / "identity_map.json")
    assert code == 2
    assert payload(out)["valid"] is False
    assert json.loads(err)["error"] == "NotLindblad"


def test_standard_form(capsys):
    code, out, _ = run(capsys, "standard-form", PROBLEMS / "two_level.json")
    data = payload(out)
    assert code == 0 and data["dim"] == 2 and len(data["jumps"]) == 1


def test_compare_nested(capsys):
    code, out, _ = run(capsys, "compare", PROBLEMS / "nested.json", "--jump-maps")
    data = payload(out)
    assert code == 0
    assert data["holds"] is True
    assert data["optimal_c"] == pytest.approx(data["jump_map_route"]["optimal_c"], rel=1e-6)


def test_sandwich_and_stability(capsys):
    path = PROBLEMS / "amplitude_damping.json"
    code, out, _ = run(capsys, "sandwich", path, "--eps", "0.1")
    data = payload(out)
    # L' = 1.05 L: the lower bound holds, but m_L is too large for 0.05 m_L <= 0.1 e
    assert code == 0 and data["lower"] and not data["upper"]
    assert data["upper_margin"] < 0
    code, out, _ = run(capsys, "stability", path, "--eps", "0.1", "--trials", "3", "--dr-max", "1")
    data = payload(out)
    assert data["poincare"]["holds"] and data["entropy_production"]["holds"]


def test_depolarizer(capsys):
    code, out, _ = run(capsys, "depolarizer", PROBLEMS / "depolarizer_n2.json")
    data = payload(out)
    assert code == 0
    assert data["scale"] == pytest.approx(4.0)
    assert data["m_min_eigenvalue"] > -1e-9


def test_order_norm(capsys):
    code, out, _ = run(capsys, "order-norm", PROBLEMS / "amplitude_damping.json")
    data = payload(out)
    assert data["order_norm"] == pytest.approx(data["bisection"], rel=1e-8)


def test_gap_ep_mlsi(capsys):
    path = PROBLEMS / "amplitude_damping.json"
    _, out, _ = run(capsys, "gap", path, "-g", "L")
    assert payload(out)["gap"] > 0
    _, out, _ = run(capsys, "ep", path, "-g", "L")
    data = payload(out)
    assert data["ep"] == pytest.approx(data["finite_difference"], rel=1e-5)
    _, out, _ = run(capsys, "mlsi", path, "-g", "L", "--trials", "3")
    assert payload(out)["cmlsi_probe"]["kind"] == "upper bound"


def test_g2(capsys):
    code, out, _ = run(capsys, "g2", PROBLEMS / "two_level.json", "--state", "excited")
    data = payload(out)
    assert code == 0 and data["g2"] == 0.0 and data["emission_rate"] == pytest.approx(1.0)


def test_scan_csv_and_frontier(capsys, tmp_path):
    path = PROBLEMS / "amplitude_damping.json"
    code, out, _ = run(capsys, "scan", path, "-g", "L", "--trials", "3")
    assert code == 0 and out.startswith("trial,delta,epsilon")
    target = tmp_path / "front.json"
    code, out, _ = run(capsys, "scan", path, "-g", "L", "--trials", "3", "--frontier", "--out", target)
    assert out == ""
    assert json.loads(target.read_text())["monotone"] is True


def test_input_errors(capsys, tmp_path):
    code, _, err = run(capsys, "gap", tmp_path / "missing.json")
    assert code == 1 and json.loads(err)["error"] == "InputError"
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "gap", bad)[0] == 1
    code, _, err = run(capsys, "gap", PROBLEMS / "nested.json", "-g", "L")
    assert code == 1


def test_g2_scan_rejects_vanishing_g2(capsys):
    code, _, err = run(capsys, "g2-scan", PROBLEMS / "two_level.json", "--state", "excited")
    assert code == 1 and json.loads(err)["error"] == "InputError"


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "lindblad_lab.cli", "validate",
                          str(PROBLEMS / "two_level.json")], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["valid"] is True
