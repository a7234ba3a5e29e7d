import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from finslernav.cli import main
from finslernav.spec import ManifoldSpec


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_export_and_reload(tmp_path, capsys):
    p = tmp_path / "m.json"
    code, _, _ = run(["export-model", "--model", "s3-hopf", "--out", str(p)], capsys)
    assert code == 0
    spec = ManifoldSpec.load(p)
    assert spec.name == "s3-hopf" and spec.dim == 3
    code, out, _ = run(["export-model", "--model", "s3-hopf"], capsys)
    assert out == p.read_text()


def test_navigate_emits_reingestible_randers(tmp_path, capsys):
    p = tmp_path / "nav.json"
    code, out, _ = run(["navigate", "--model", "flat-kropina", "--out", str(p)], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["composite"]["classification"] == "randers"
    assert doc["composite"]["lambda"] == "0.75"
    new = ManifoldSpec.load(p)
    assert new.metric_type == "randers" and new.W == ("0.5", "0")
    F = new.finsler()
    rng = np.random.Generator(np.random.Philox(0))
    from finslernav.modelspaces import get_model
    from finslernav.navigation import composite

    old = get_model("flat-kropina").spec
    ref = composite(old.finsler(), old.field_V(), old.quasi_points(20)).implicit
    for _ in range(20):
        x, y = rng.uniform(-1, 1, 2), rng.normal(size=2)
        assert abs(F.value(x, y) - ref.value(x, y)) < 1e-12


def test_navigate_reingests_curved_composite(tmp_path, capsys):
    p = tmp_path / "nav.json"
    assert run(["navigate", "--model", "s3-hopf", "--out", str(p)], capsys)[0] == 0
    from finslernav.modelspaces import get_model
    from finslernav.navigation import composite

    old = get_model("s3-hopf").spec
    new = ManifoldSpec.load(p)
    res = composite(old.finsler(), old.field_V(), old.quasi_points(20))
    F = new.finsler()
    rng = np.random.Generator(np.random.Philox(1))
    for x in old.quasi_points(20):
        y = rng.normal(size=3)
        assert abs(F.value(x, y) - res.metric.value(x, y)) < 1e-12


def test_curvature_json_and_csv(capsys):
    code, out, _ = run(["curvature", "--model", "flat-kropina", "--samples", "3", "--seed", "5"], capsys)
    assert code == 0
    reports = json.loads(out)["reports"]
    assert len(reports) == 3 and all(r["Ric"] == 0 and r["S"] == 0 for r in reports)
    code, out, _ = run(["curvature", "--model", "s3-hopf", "--samples", "4", "--format", "csv"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 4
    for row in rows:
        ks = [float(row[k]) for k in ("K_e1", "K_e2", "K_e3") if row[k]]
        assert ks and all(abs(k - 1) < 1e-5 for k in ks)


def test_curvature_outside_cone_exits_2(capsys):
    code, _, err = run(["curvature", "--model", "flat-kropina", "--point", "0,0", "--dir=-1,0"], capsys)
    assert code == 2 and "OutsideConeError" in err


def test_parse_error_reports_file_and_offset(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"dim": 2, "h": [["1", "0"], ["0", "1 +* x1"]], "W": ["1", "0"]}))
    code, _, err = run(["verify", str(p)], capsys)
    assert code == 2 and "bad.json" in err and "byte 3" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "missing.json"],
        ["verify", "--model", "nope"],
        ["verify", "--model", "flat-kropina", "--check", "bogus"],
        ["verify", "--model", "flat-kropina", "--samples", "0"],
        ["navigate", "--model", "flat-randers"],
        ["check-fields", "--model", "flat-randers"],
        ["verify"],
    ],
)
def test_input_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as info:
        raise SystemExit(main(argv))
    assert info.value.code == 2


def test_check_fields_verdicts(capsys):
    code, out, _ = run(["check-fields", "--model", "flat-kropina-conformal"], capsys)
    assert code == 0 and json.loads(out)["report"]["verdict"] == "Homothetic"
    code, out, _ = run(["check-fields", "--model", "flat-kropina-badv"], capsys)
    assert code == 1 and json.loads(out)["report"]["verdict"] == "None"


def test_verify_exit_codes(tmp_path, capsys):
    code, out, _ = run(["verify", "--model", "flat-kropina", "--check", "kropina-s-equivalence"], capsys)
    assert code == 0 and json.loads(out)[0]["verdict"] == "pass"
    # an impossible tolerance turns the pass into a counterexample
    code, out, _ = run(
        ["verify", "--model", "s3-hopf", "--check", "kropina-weak-isotropic-flag", "--tol-c", "1e-30"],
        capsys,
    )
    assert code == 1 and json.loads(out)[0]["verdict"] == "fail"


def test_console_script_determinism(tmp_path):
    cmd = [sys.executable, "-m", "finslernav", "verify", "--model", "flat-kropina", "--check", "all", "--seed", "42"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True, env={"FINSLER_NAV_THREADS": "1", "PATH": ""}).stdout
    assert a == b and a.endswith(b"\n")
