import json
import math
import subprocess
import sys

import pytest

from gq import cli, cpn
from gq.cpn import Above, ArrowLeaf, At, Below, UnitLeaf


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def U(*coords):
    return UnitLeaf(tuple(coords))


# enumerate


def test_enumerate_json_count(capsys):
    code, out, _ = run(["enumerate", "--n", "1", "--t", "0.5", "--hbar", "0.6931471805599453", "--max-level", "3", "--json"], capsys)
    assert code == 0
    obj = json.loads(out)
    assert obj["count"] == 7 and len(obj["units"]) == 7


def test_enumerate_text_count(capsys):
    code, out, _ = run(["enumerate", "--n", "2", "--t", "0.5", "--hbar", "0.6931471805599453", "--max-level", "2"], capsys)
    assert code == 0
    assert out.strip().splitlines()[-1] == "units: 15"


def test_enumerate_t0_level0(capsys):
    code, out, _ = run(["enumerate", "--n", "2", "--t", "0", "--max-level", "0", "--hbar", "1", "--json"], capsys)
    assert code == 0
    units = [cpn.unit_from_json(u) for u in json.loads(out)["units"]]
    assert set(units) == {U(Below(0), Below(0)), U(Below(0), At), U(At, At)}


def test_hbar_ln2_literal(capsys):
    code, out, _ = run(["enumerate", "--n", "1", "--t", "0.5", "--hbar", "ln2", "--max-level", "3"], capsys)
    assert code == 0 and "units: 7" in out


def test_enumerate_arrows_and_csv(capsys, tmp_path):
    code, out, _ = run(["enumerate", "--n", "1", "--t", "0.5", "--max-level", "2", "--max-shift", "1", "--json"], capsys)
    obj = json.loads(out)
    assert code == 0 and obj["arrow_count"] == len(obj["arrows"]) > 0
    path = tmp_path / "u.csv"
    code, _, _ = run(["enumerate", "--n", "2", "--t", "0.5", "--max-level", "2", "--csv", "-o", str(path)], capsys)
    rows = path.read_text().splitlines()
    assert code == 0 and rows[0].startswith("index,label,c1,c2") and len(rows) == 16


def test_svg_for_small_n_only(capsys):
    code, out, _ = run(["enumerate", "--n", "2", "--t", "0.3", "--max-level", "2", "--svg"], capsys)
    assert code == 0 and out.startswith("<svg") and out.count("<circle") > 0
    code, _, err = run(["enumerate", "--n", "3", "--t", "0.3", "--max-level", "2", "--svg"], capsys)
    assert code == 2 and "svg" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["enumerate", "--n", "1", "--t", "1.5"],
        ["enumerate", "--n", "0", "--t", "0.5"],
        ["enumerate", "--n", "1", "--t", "0.5", "--hbar", "-1"],
        ["enumerate", "--n", "1", "--t", "0.5", "--max-level", "-1"],
        ["enumerate", "--n", "1", "--t", "0.5", "--json", "--csv"],
        ["frobnicate"],
        [],
        ["verify", "--suite", "bogus", "--n", "1", "--t", "0.5"],
    ],
)
def test_usage_errors(argv, capsys):
    code, _, _ = run(argv, capsys)
    assert code == 2


def test_deterministic(capsys):
    argv = ["enumerate", "--n", "2", "--t", "0.7", "--max-level", "3", "--max-shift", "1", "--json"]
    _, a, _ = run(argv, capsys)
    _, b, _ = run(argv, capsys)
    assert a == b


# verify


def test_verify_groupoid(capsys):
    code, out, _ = run(["verify", "--suite", "groupoid", "--n", "3", "--t", "0.3", "--hbar", "1", "--max-level", "2", "--max-shift", "2"], capsys)
    assert code == 0 and json.loads(out)["passed"]


def test_verify_cross(capsys):
    code, out, _ = run(["verify", "--suite", "cross", "--n", "2", "--t", "0.25", "--samples", "100", "--seed", "7"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["max_residual"] <= 1e-8


def test_verify_poisson(capsys):
    code, out, _ = run(["verify", "--suite", "poisson", "--n", "1", "--t", "1", "--samples", "50", "--seed", "1"], capsys)
    assert code == 0 and json.loads(out)["passed"]


def test_seed_required_for_random_suites(capsys, monkeypatch):
    monkeypatch.delenv("GQ_SEED", raising=False)
    code, _, err = run(["verify", "--suite", "cross", "--n", "1", "--t", "0.5", "--samples", "3"], capsys)
    assert code == 2 and "seed" in err
    monkeypatch.setenv("GQ_SEED", "5")
    code, _, _ = run(["verify", "--suite", "cross", "--n", "1", "--t", "0.5", "--samples", "3"], capsys)
    assert code == 0
    monkeypatch.setenv("GQ_SEED", "five")
    code, _, _ = run(["verify", "--suite", "cross", "--n", "1", "--t", "0.5", "--samples", "3"], capsys)
    assert code == 2


def test_verify_failure_exit_code(capsys, monkeypatch):
    def failing(name, config):
        return {"suite": name, "config": {}, "passed": False, "max_residual": 1.0, "checks": []}

    monkeypatch.setattr(cli, "run_suite", failing)
    code, _, _ = run(["verify", "--suite", "groupoid", "--n", "1", "--t", "0.5"], capsys)
    assert code == 1


def test_verify_output_file(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, out, _ = run(["verify", "--suite", "sheu", "--n", "1", "--t", "0.5", "-o", str(path)], capsys)
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["suite"] == "sheu"


# convolve


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def element(arrows_values):
    return [{"arrow": cpn.arrow_to_json(g), "re": v.real, "im": v.imag} for g, v in arrows_values]


A = ArrowLeaf(U(Below(1), Above(2)), (2, -1))
B = ArrowLeaf(U(Below(3), Above(1)), (-1, 1))


def conv(tmp_path, capsys, a, b, *extra):
    fa = write(tmp_path, "a.json", a)
    fb = write(tmp_path, "b.json", b)
    return run(["convolve", "--n", "2", "--t", "0.5", "--a", fa, "--b", fb, *extra], capsys)


def test_convolve_composable_deltas(tmp_path, capsys):
    code, out, _ = conv(tmp_path, capsys, element([(A, 1 + 0j)]), element([(B, 2j)]))
    assert code == 0
    prod = json.loads(out)
    assert len(prod) == 1
    assert cpn.arrow_from_json(prod[0]["arrow"]) == ArrowLeaf(A.source, (1, 0))
    assert (prod[0]["re"], prod[0]["im"]) == (0.0, 2.0)


def test_convolve_non_composable_is_empty(tmp_path, capsys):
    code, out, _ = conv(tmp_path, capsys, element([(B, 1 + 0j)]), element([(A, 1 + 0j)]))
    assert code == 0 and json.loads(out) == []


def test_convolve_kms(tmp_path, capsys):
    inv = ArrowLeaf(B.source, (-2, 1))
    a = element([(A, 1 + 0.5j), (B, -0.3 + 0j)])
    b = element([(inv, 0.7 - 1j), (ArrowLeaf(B.source, (0, 0)), 1 + 0j), (ArrowLeaf(A.source, (0, 0)), 0.2j)])
    code, out, _ = conv(tmp_path, capsys, a, b, "--kms")
    obj = json.loads(out)
    assert code == 0 and obj["kms"]["passed"]
    assert obj["kms"]["residual"] <= 1e-12
    assert set(obj) == {"product", "kms"}


def test_convolve_twisted(tmp_path, capsys):
    coc = write(tmp_path, "z.json", {"kind": "bilinear", "theta": math.pi / 2, "i": 0, "j": 0})
    code, out, _ = conv(tmp_path, capsys, element([(A, 1 + 0j)]), element([(B, 1 + 0j)]), "--cocycle", coc)
    prod = json.loads(out)
    # exp(i pi/2 * 2 * (-1)) = -1
    assert code == 0 and prod[0]["re"] == pytest.approx(-1.0) and prod[0]["im"] == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize(
    "a",
    [
        {"arrow": 1},
        [{"arrow": cpn.arrow_to_json(ArrowLeaf(U(Below(1), Above(2)), (-5, 0))), "re": 1, "im": 0}],
        [{"arrow": {"src": {"coords": [{"b": "at"}]}, "p": [0]}, "re": 1, "im": 0}],
    ],
)
def test_convolve_schema_errors(tmp_path, capsys, a):
    code, _, _ = conv(tmp_path, capsys, a, element([(B, 1 + 0j)]))
    assert code == 2


def test_convolve_bad_files(tmp_path, capsys):
    code, _, _ = run(["convolve", "--n", "2", "--t", "0.5", "--a", str(tmp_path / "missing"), "--b", str(tmp_path / "x")], capsys)
    assert code == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, _ = run(["convolve", "--n", "2", "--t", "0.5", "--a", str(bad), "--b", str(bad)], capsys)
    assert code == 2
    coc = write(tmp_path, "z.json", {"kind": "cubic"})
    fa = write(tmp_path, "a.json", element([(A, 1 + 0j)]))
    code, _, _ = run(["convolve", "--n", "2", "--t", "0.5", "--a", fa, "--b", fa, "--cocycle", coc], capsys)
    assert code == 2


def test_kms_failure_exit_code(tmp_path, capsys):
    import numpy as np

    from gq import convolution as cv

    params = cpn.Params(2, 0.5, math.log(2))
    G = cpn.structure_maps(params)
    _, arrows = cpn.enumerate_window(params, 3, 2)
    a = cv.random_element(np.random.default_rng(0), arrows, 5)
    b = cv.involution(G, a)
    r = cv.kms_check(G, a, b, lambda x: cpn.measure_mu(params, x), cpn.modular_cocycle(params))
    assert 0 < r.residual <= 1e-15  # pure round-off
    fa = write(tmp_path, "a.json", cv.element_to_json(a, cpn.arrow_to_json))
    fb = write(tmp_path, "b.json", cv.element_to_json(b, cpn.arrow_to_json))
    base = ["convolve", "--n", "2", "--t", "0.5", "--a", fa, "--b", fb, "--kms"]
    code, out, _ = run(base, capsys)
    assert code == 0
    # a tolerance below round-off turns the same inputs into a verification failure
    code, out, _ = run(base + ["--tol", "1e-300"], capsys)
    assert code == 1 and not json.loads(out)["kms"]["passed"]


# process level


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "gq", "enumerate", "--n", "1", "--t", "0.5", "--hbar", "ln2", "--max-level", "3"],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 0 and "units: 7" in proc.stdout


def test_module_usage_exit():
    proc = subprocess.run([sys.executable, "-m", "gq", "verify", "--suite", "all"], capture_output=True, text=True, timeout=120)
    assert proc.returncode == 2
