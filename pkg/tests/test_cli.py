from __future__ import annotations

import csv
import io
import json
import math
import subprocess
import sys

import pytest

from treedom import __version__
from treedom.cli import main
from treedom.ising_tree import critical_coupling, h_star


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--format", "json")
    assert code == 0
    return json.loads(out)


def rows(out):
    return list(csv.reader(io.StringIO(out)))


def test_fixpoints_unique(capsys):
    doc = run_json(capsys, "fixpoints", "--d", "5", "--J", "1.5", "--h", "8")
    assert doc["outputs"]["class"] == "Unique" and len(doc["outputs"]["roots"]) == 1


def test_fixpoints_triple(capsys):
    doc = run_json(capsys, "fixpoints", "--d", "5", "--J", "1.5", "--h", "0")
    roots = doc["outputs"]["roots"]
    assert doc["outputs"]["class"] == "Triple" and roots[1] == 0.0


def test_json_schema(capsys):
    doc = run_json(capsys, "fixpoints", "--d", "3", "--J", "1", "--h", "0.1")
    assert set(doc) == {"command", "params", "outputs", "tolerances", "version"}
    assert doc["version"] == __version__


def test_hstar_curve(capsys):
    code, out, _ = run(capsys, "hstar-curve", "--d", "4", "--J-min", "0.1", "--J-max", "1", "--steps", "10")
    assert code == 0
    table = rows(out)
    assert table[0] == ["J", "h_star", "t_star"]
    data = [[float(x) for x in r] for r in table[1:]]
    assert len(data) == 10
    jc = critical_coupling(4)
    assert all(r[1] == 0 for r in data if r[0] <= jc)
    pos = [r[1] for r in data if r[0] > jc]
    assert all(b > a for a, b in zip(pos, pos[1:]))
    last = data[-1]
    assert last[0] == 1.0 and abs(last[1] - h_star(4, 1.0)) < 1e-11


def test_hstar_curve_two_steps(capsys):
    code, out, _ = run(capsys, "hstar-curve", "--J-min", "0.5", "--J-max", "1", "--steps", "2")
    assert code == 0 and len(rows(out)) == 3


@pytest.mark.parametrize("argv", [
    ["hstar-curve", "--J-min", "0", "--J-max", "1"],
    ["hstar-curve", "--J-min", "1", "--J-max", "0.5"],
    ["hstar-curve", "--J-min", "0.1", "--J-max", "1", "--steps", "1"],
    ["fixpoints", "--d", "1", "--J", "1", "--h", "0"],
    ["fixpoints", "--d", "3", "--J", "nan", "--h", "0"],
    ["fixpoints", "--d", "3"],
    ["threshold", "h+", "--d", "3", "--J1", "1", "--J2", "1", "--h1", "0"],
    ["nonsense"],
])
def test_usage_errors_exit_1(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 1 and out == "" and err


def test_threshold_self_domination(capsys):
    doc = run_json(capsys, "threshold", "f+", "--d", "4", "--J1", "1", "--J2", "1", "--h1", "0.3")
    out = doc["outputs"]
    assert abs(out["value"] - 0.3) < 1e-12
    assert out["bounds"]["lo"] <= out["value"] <= out["bounds"]["hi"]


def test_threshold_g_equals_f_below_critical(capsys):
    args = ["--d", "4", "--J1", "1", "--J2", "0.2", "--h1", "0.3"]
    f = run_json(capsys, "threshold", "f+", *args)["outputs"]
    g = run_json(capsys, "threshold", "g+", *args)["outputs"]
    assert f["value"] == g["value"]


def test_psi_curve_plateau(capsys):
    code, out, _ = run(capsys, "psi-curve", "--d", "4", "--J2", "2", "--t-min", "-10", "--t-max", "10", "--steps", "201")
    assert code == 0
    table = rows(out)
    assert table[0] == ["t", "value", "branch"]
    flat = [float(r[1]) for r in table[1:] if r[2] == "flat"]
    assert flat and all(abs(v + h_star(4, 2.0)) < 1e-10 for v in flat)
    vals = [float(r[1]) for r in table[1:]]
    # psi is continuous with slope at most 1 in t
    assert max(abs(b - a) for a, b in zip(vals, vals[1:])) <= 0.1 + 1e-9


def test_theta_curve_no_plateau_below_critical(capsys):
    code, out, _ = run(capsys, "theta-curve", "--d", "4", "--J2", "0.1", "--steps", "50")
    assert code == 0
    assert all(r[2] == "curve" for r in rows(out)[1:])


def test_dominates_identical(capsys):
    doc = run_json(capsys, "dominates", "--d", "3", "--J1", "1", "--h1", "0.2", "--J2", "1", "--h2", "0.2")
    assert doc["outputs"]["dominates"] is True


def test_fuzzy_threshold(capsys):
    doc = run_json(capsys, "fuzzy", "threshold", "--q", "3", "--J", "1", "--r", "1")
    assert abs(doc["outputs"]["threshold"] - 0.213014) < 1e-6


def test_fuzzy_witness_cases(capsys):
    doc = run_json(capsys, "fuzzy", "witness", "--q", "3", "--J", "0.2", "--r", "1")
    assert doc["outputs"]["empty"] is True
    doc = run_json(capsys, "fuzzy", "witness", "--q", "3", "--J", "1.5", "--r", "1", "--d", "2")
    assert doc["outputs"]["empty"] is False


def test_fuzzy_precondition_exit_2(capsys):
    code, out, err = run(capsys, "fuzzy", "witness", "--q", "9", "--J", "0.1", "--r", "1")
    assert code == 2 and out == "" and "precondition" in err
    code, _, _ = run(capsys, "fuzzy", "certify", "--q", "9", "--J", "0.1", "--r", "1", "--p", "0.5")
    assert code == 2


def test_fuzzy_certify(capsys):
    doc = run_json(capsys, "fuzzy", "certify", "--q", "3", "--J", "1.5", "--r", "1", "--p", "0.01")
    assert doc["outputs"]["certificate"] is True and doc["outputs"]["free_dominates"] is True


def test_oracle_dominates_identical(capsys):
    doc = run_json(capsys, "oracle", "dominates", "--depth", "1", "--J1", "1", "--h1", "0.2", "--J2", "1", "--h2", "0.2")
    assert doc["outputs"]["finite_dominates"] is True and doc["outputs"]["analytic_dominates"] is True


def test_oracle_product_below_entry(capsys):
    doc = run_json(capsys, "oracle", "product", "--depth", "1", "--q", "3", "--J", "1", "--r", "1", "--p", "0.2")
    assert doc["outputs"]["finite_dominates"] is True and doc["outputs"]["analytic_dominates"] is True


def test_oracle_ratio_and_rate(capsys):
    doc = run_json(capsys, "oracle", "ratio", "--q", "3", "--J", "1.2", "--depth", "15")
    assert doc["outputs"]["abs_diff"] < 1e-6
    doc = run_json(capsys, "oracle", "rate", "--q", "3", "--J", "1.2", "--r", "1", "--depth", "10")
    assert doc["outputs"]["abs_diff"] < 1e-3


def test_oracle_size_cap(capsys, monkeypatch):
    monkeypatch.setenv("GD_MAX_VERTICES", "5")
    code, _, err = run(capsys, "oracle", "dominates", "--depth", "2")
    assert code == 1 and "cap" in err


def test_sampler_seed_determinism(capsys):
    argv = ["oracle", "sample", "--depth", "2", "--sweeps", "500", "--seed", "42", "--format", "csv"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b
    table = rows(a)
    assert all(len(r) == 2 for r in table)
    for key, value in table[1:]:
        try:
            assert math.isfinite(float(value))
        except ValueError:
            pass


def test_csv_twelve_significant_digits(capsys):
    _, out, _ = run(capsys, "fixpoints", "--d", "4", "--J", "1", "--h", "0", "--format", "csv")
    vals = dict(r for r in rows(out)[1:])
    assert vals["outputs.h_star"] == "1.88770485053"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "treedom", "fixpoints", "--d", "3", "--J", "1", "--h", "0"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["outputs"]["class"] == "Triple"
