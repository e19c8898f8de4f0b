import io
import json
import subprocess
import sys

import numpy as np
import pytest

from fgforge.cli import EXIT_CONSTRAINT, EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, run
from fgforge.field import SymForm
from fgforge.io import read_coefficients, write_coefficients

ADS_REF = {"name": "ads_schwarzschild_planar", "params": {"m": 0.5}}


def call(*argv):
    out = io.StringIO()
    code = run([str(a) for a in argv], stdout=out)
    text = out.getvalue()
    report = json.loads(text)
    assert "g2_formula_resolution" in report
    return code, report, text


def spec_file(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    cusp = spec_file(d, "cusp.json", {"grid": 8, "order": 6})
    ads = spec_file(d, "ads.json", {"grid": 8, "order": 6, "reference": ADS_REF})
    out = {"dir": d}
    for name, spec in (("cusp", cusp), ("ads", ads)):
        path = d / f"{name}_coeffs.json"
        code, rep, _ = call("expand", "--spec", spec, "--out", path)
        assert code == EXIT_OK
        out[name] = path
        out[name + "_report"] = rep
    return out


def test_expand_cusp(files):
    rep = files["cusp_report"]
    assert rep["status"] == "ok"
    assert all(c["sup_norm"] <= 1e-12 for c in rep["coefficients"][1:])
    assert rep["residual"]["clean_through"] >= rep["residual"]["required_through"]


def test_expand_reference_injection(files):
    rep = files["ads_report"]
    assert max(rep["reference"]["max_relative_difference"].values()) <= 1e-8
    modes = rep["coefficients"][3]["modes"]
    assert modes["11"][0]["amplitude_cos"] == pytest.approx(-2.0 / 3.0)
    assert modes["22"][0]["amplitude_cos"] == pytest.approx(1.0 / 3.0)


def test_expand_trace_violation(tmp_path):
    spec = spec_file(tmp_path, "bad.json",
                     {"grid": 8, "order": 5, "sigma": {"constant": {"11": 0.01}}})
    code, rep, _ = call("expand", "--spec", spec)
    assert code == EXIT_CONSTRAINT
    assert rep["error"]["constraint"] == "trace constraint"
    assert rep["error"]["trace_norm"] == pytest.approx(0.01)


def test_expand_divergence_violation(tmp_path):
    modes = [{"component": "11", "wavevector": [1, 0, 0], "amplitude_cos": 0.01},
             {"component": "22", "wavevector": [1, 0, 0], "amplitude_cos": -0.01}]
    spec = spec_file(tmp_path, "div.json", {"grid": 8, "order": 5, "sigma": {"modes": modes}})
    code, rep, _ = call("expand", "--spec", spec)
    assert code == EXIT_CONSTRAINT
    assert rep["error"]["constraint"] == "divergence constraint"
    assert 0.005 <= rep["error"]["divergence_norm"] <= 0.02


@pytest.mark.parametrize("doc", [
    {"grid": 12},
    {"grid": 8, "order": 2},
    {"grid": 8, "gamma": {"constant": {"44": 1.0}}},
    {"grid": 8, "gamma": {"modes": [{"component": "11", "wavevector": [3, 0, 0],
                                     "amplitude_cos": 0.01}]}},
    {"grid": 8, "gamma": {"constant": [[1, 0, 0], [0, -1, 0], [0, 0, 1]]}},
    {"grid": 8, "tolerances": {"nonsense": 1.0}},
    {"grid": 8, "reference": {"name": "sphere"}},
    [1, 2, 3],
])
def test_expand_malformed_spec(tmp_path, doc):
    spec = spec_file(tmp_path, "mal.json", doc)
    code, rep, _ = call("expand", "--spec", spec)
    assert code == EXIT_INPUT
    assert rep["status"] == "error"


def test_expand_invalid_json(tmp_path):
    path = tmp_path / "x.json"
    path.write_text("{grid: 8")
    assert call("expand", "--spec", path)[0] == EXIT_INPUT


def test_argument_errors():
    assert run(["expand"], stdout=io.StringIO()) == EXIT_INPUT
    assert run(["bogus"], stdout=io.StringIO()) == EXIT_INPUT


def test_expand_is_byte_identical(tmp_path):
    spec = spec_file(tmp_path, "s.json", {"grid": 8, "order": 5, "reference": ADS_REF})
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    ra = call("expand", "--spec", spec, "--out", a)[2]
    rb = call("expand", "--spec", spec, "--out", b)[2]
    assert a.read_bytes() == b.read_bytes()
    assert ra.replace(str(a), "") == rb.replace(str(b), "")


def test_verify_cusp(files):
    code, rep, _ = call("verify", files["cusp"])
    assert code == EXIT_OK
    audits = rep["audits"]
    assert all(a["passed"] for a in audits.values())
    assert audits["curvature_decay"]["exact"]


def test_verify_ads(files):
    code, rep, _ = call("verify", files["ads"])
    assert code == EXIT_OK
    assert rep["audits"]["curvature_decay"]["order"] >= 2.0


def test_verify_corrupted_g2(files):
    exp, meta = read_coefficients(files["cusp"])
    exp.coeffs[2] = SymForm.constant(exp.grid, 0.1 * np.eye(3))
    path = files["dir"] / "corrupt.json"
    write_coefficients(path, exp, meta)
    code, rep, _ = call("verify", path)
    assert code == EXIT_NUMERICAL
    res = rep["audits"]["residual"]
    assert not res["passed"]
    assert res["first_failing_order"] == 2
    assert res["first_failing_order_unscaled"] == 0


def test_verify_missing_file(tmp_path):
    assert call("verify", tmp_path / "none.json")[0] == EXIT_INPUT


def test_wick(files):
    out = files["dir"] / "lor.json"
    code, rep, _ = call("wick", files["ads"], "--out", out)
    assert code == EXIT_OK
    assert [rep["sign_pattern"][str(k)] for k in (2, 3, 4)] == ["-", "-", "+"]
    assert rep["repaired_orders"] == [6]
    assert all(v <= 1e-8 for k, v in rep["lorentzian_residual"].items()
               if int(k) <= rep["required_through"])
    # a Lorentzian file cannot be rotated again
    assert call("wick", out)[0] == EXIT_INPUT


def test_ellipticity_default():
    code, rep, _ = call("ellipticity")
    assert code == EXIT_OK
    assert rep["pass_fraction"] == 1.0 and rep["perturbed_pass_fraction"] == 1.0
    assert rep["kernel_dims"] == [0]
    assert rep["invariants"]["block_degrees_ok"]


def test_ellipticity_degenerate():
    code, rep, _ = call("ellipticity", "--degenerate")
    assert code == EXIT_OK
    assert rep["pass_fraction"] == 0.0 and rep["kernel_dims"] == [4]


def test_ellipticity_is_byte_identical():
    assert call("ellipticity", "--seed", 4)[2] == call("ellipticity", "--seed", 4)[2]


def test_reference_command(tmp_path):
    out = tmp_path / "r.json"
    code, rep, _ = call("reference", "ads_schwarzschild_planar", "--order", 12, "--grid", 8,
                        "--out", out)
    assert code == EXIT_OK
    assert rep["oracle_checks"]["0.1"]["warped_residual"] <= 1e-9
    exp, meta = read_coefficients(out)
    assert exp.order == 12 and meta["reference"] == "ads_schwarzschild_planar"


def test_reference_unknown_name():
    assert call("reference", "sphere")[0] == EXIT_INPUT
    assert call("reference", "ads_schwarzschild_planar", "--m", -1)[0] == EXIT_INPUT


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fgforge", "ellipticity", "--samples", "3"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "ellipticity"
