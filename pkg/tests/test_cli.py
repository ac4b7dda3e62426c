import json
import subprocess
import sys

import jsonschema
import pytest

from foldsing.classify import KINDS
from foldsing.cli import main
from foldsing.report import REPORT_KEYS, REPORT_SCHEMA, validate_report


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_classify_equation(capsys):
    code, out, _ = run(capsys, "classify", "--equation", "p^2 - y - x^2", "--at", "0,0,0")
    rep = json.loads(out)
    assert code == 0 and tuple(rep) == REPORT_KEYS
    assert rep["kind"] == "FoldedNonresonanceSaddle" and rep["lambda"] == pytest.approx(-1.6404, abs=1e-4)
    validate_report(rep)


def test_classify_parametric(capsys):
    code, out, _ = run(capsys, "classify", "--parametric", "v^2,u,v*(u-v^2)", "--at", "0,0")
    rep = json.loads(out)
    assert rep["kind"] == "WhitneyUmbrellaPoint"
    inv = rep["invariants"]
    assert (inv["a0"], inv["a0p"], inv["b0"]) == pytest.approx((0, -2 / 3, 2 / 5), abs=1e-10)


def test_classify_field(capsys):
    code, out, _ = run(capsys, "classify", "--field", "x,-2*y", "--at", "0,0")
    rep = json.loads(out)
    assert rep["kind"] == "ResonanceSaddle" and rep["resonance"] == {"p": 2, "q": 1}


def test_scan_lists_reports(capsys):
    code, out, _ = run(capsys, "classify", "--equation", "p^2 - y + x^2/20", "--scan", "--box", "-1,1,-1,1,-1,1")
    reps = json.loads(out)
    assert [r["kind"] for r in reps] == ["FoldedNode"]


def test_ydot_with_negative_xdot(capsys):
    code, out, _ = run(capsys, "classify", "--equation", "ydot - 1", "--xdot", "-1", "--at", "0,0,-1")
    assert json.loads(out)["kind"] == "NonsingularPoint"


def test_clairaut_commands(capsys):
    _, out, _ = run(capsys, "clairaut", "--family", "t^2 + t*x")
    assert json.loads(out)["kind"] == "ClairautFold"
    _, out, _ = run(capsys, "clairaut", "--family", "t^3 + t*x")
    rep = json.loads(out)
    assert rep["kind"] == "ClairautCusp" and rep["invariants"]["diagram"] == 3
    _, out, _ = run(capsys, "clairaut", "--equation", "y - 2*p^3", "--box", "-1,1,-1,1,-1,1")
    inv = json.loads(out)["invariants"]
    assert inv["clairaut_type"] is True and inv["reduced"] is False


def test_portrait_and_trace(tmp_path, capsys):
    svg = tmp_path / "node.svg"
    code, out, _ = run(capsys, "portrait", "--equation", "p^2 - y + x^2/20", "--box", "-1,1,-0.2,1,-1,1",
                       "-o", str(svg))
    assert code == 0 and svg.exists()
    assert [g["kind"] for g in json.loads(out)["singular_points"]] == ["FoldedNode"]
    csv = tmp_path / "fold.csv"
    code, out, _ = run(capsys, "trace", "--equation", "p^2 - x", "--seed", "1,0,1", "--dir", "-1", "-o", str(csv))
    rows = csv.read_text().splitlines()
    assert rows[0] == "t,x,y,p,event"
    assert sum(r.endswith("CriminantCrossing") for r in rows) == 1


def test_empty_portrait(tmp_path, capsys):
    code, out, _ = run(capsys, "portrait", "--equation", "p^2 + 1", "-o", str(tmp_path / "e.svg"))
    assert code == 0 and json.loads(out)["curve_count"] == 0


def test_exit_codes(tmp_path, capsys):
    assert run(capsys, "classify", "--equation", "p^2 +")[0] == 2
    assert run(capsys, "classify", "--equation", "p", "--field", "x,y")[0] == 2
    code, _, err = run(capsys, "classify", "--parametric", "v^2,u,v*u")
    assert code == 3 and "NoHandle" in err
    with pytest.raises(SystemExit) as info:
        main(["classify", "--bogus"])
    assert info.value.code == 2


def test_failed_trace_leaves_no_file(tmp_path, capsys):
    target = tmp_path / "out.csv"
    code, _, _ = run(capsys, "trace", "--equation", "p - 1", "--seed", "9,0,1", "-o", str(target))
    assert code == 2 and not target.exists() and list(tmp_path.iterdir()) == []


def test_config_file_and_overrides(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("resonance_max_den = 2\n")
    _, base, _ = run(capsys, "classify", "--field", "x,-(5/3)*y")
    assert json.loads(base)["kind"] == "ResonanceSaddle"
    monkeypatch.setenv("FOLDSING_CONFIG", str(cfg))
    _, out, _ = run(capsys, "classify", "--field", "x,-(5/3)*y")
    rep = json.loads(out)
    assert rep["kind"] == "NonresonanceSaddle" and rep["config_digest"] != json.loads(base)["config_digest"]
    _, out, _ = run(capsys, "classify", "--field", "x,-(5/3)*y", "--set", "resonance_max_den=12")
    assert json.loads(out)["kind"] == "ResonanceSaddle"
    assert run(capsys, "classify", "--field", "x,y", "--set", "nope=1")[0] == 2


def test_validate_command(tmp_path, capsys):
    out = tmp_path / "v.json"
    assert run(capsys, "validate", "-o", str(out))[0] == 0
    data = json.loads(out.read_text())
    assert data["failed"] == 0 and data["passed"] == len(data["cases"])


def test_schema_rejects_unknown_kind():
    rep = {k: None for k in REPORT_KEYS}
    rep.update(input={"form": "field", "source": "x,y"}, kind="Saddle", invariants={}, residuals={},
               config_digest="0" * 16)
    with pytest.raises(jsonschema.ValidationError):
        validate_report(rep)
    assert set(REPORT_SCHEMA["properties"]["kind"]["enum"]) >= set(KINDS)


def test_console_script_entry():
    r = subprocess.run([sys.executable, "-m", "foldsing.cli", "classify", "--field", "1,0"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["kind"] == "NonsingularPoint"
