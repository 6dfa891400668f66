import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from fieldlint.cli import main

SCHEMA = json.loads((resources.files("fieldlint") / "report.schema.json").read_text(encoding="utf-8"))
CATALOG = resources.files("fieldlint") / "catalog"


def _file(name: str) -> str:
    return str(CATALOG / f"{name}.lagr")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_eom_text_golden(capsys):
    code, out, _ = run(capsys, "eom", _file("kg_free_real"), "--vary", "phi")
    assert code == 0
    assert out.splitlines() == [
        "== eom:kg_free_real.lagr:phi ==",
        "[INFO] equation: □phi + m²·phi = 0",
        "[INFO] equation (dsl): d_{alpha}(d^{alpha}(phi)) + m^2*phi = 0",
        "result: ok",
    ]
    assert "\x1b[" not in out


def test_eom_conjugate_variation(capsys):
    code, out, _ = run(capsys, "eom", _file("kg_em"), "--vary", "conj(phi)", "--format", "json")
    assert code == 0
    data = json.loads(out)
    jsonschema.validate(data, SCHEMA)
    dsl = [c for c in data["checks"] if c["name"] == "equation (dsl)"][0]["witness"]
    assert "2*i*e*A^{alpha}*d_{alpha}(phi)" in dsl


def test_eom_adjoint_spinor(capsys):
    code, out, _ = run(capsys, "eom", _file("dirac_free"), "--vary", "psibar")
    assert code == 0 and "m*psi" in out


def test_eom_undeclared_field(capsys):
    code, _, err = run(capsys, "eom", _file("kg_free_real"), "--vary", "chi")
    assert code == 2 and "chi" in err


def test_check_passes_and_flags_mixed_degrees(capsys):
    code, out, _ = run(capsys, "check", _file("kg_free_real"))
    assert code == 0 and "cannot represent probability density" in out
    code, out, _ = run(capsys, "check", _file("pauli_weisskopf"), "--format", "json")
    data = json.loads(out)
    jsonschema.validate(data, SCHEMA)
    mixed = [c for c in data["checks"] if c["name"] == "mixed charge degrees"][0]
    assert code == 0 and mixed["verdict"] == "info" and "raised" in mixed["witness"]


def test_check_failure_exits_one(tmp_path, capsys):
    f = tmp_path / "bad.lagr"
    f.write_text("field phi: real scalar\nconst m dim -1\nL = d_{mu}(phi)*phi\n", encoding="utf-8")
    code, out, _ = run(capsys, "check", str(f))
    assert code == 1 and "[FAIL]" in out


@pytest.mark.parametrize("text", [
    "field phi: real scalar\nL = phi*chi\n",
    "field phi real scalar\n",
    "field phi: real scalar\nL = conj(phi)*phi\n",
    "field A: real vector\nL = A\n",
    "field A: real vector\nL = A_{a}*A^{a}*A_{a}\n",
])
def test_parse_errors_exit_two(tmp_path, capsys, text):
    f = tmp_path / "bad.lagr"
    f.write_text(text, encoding="utf-8")
    code, out, err = run(capsys, "check", str(f))
    assert code == 2 and out == "" and err.startswith("fieldlint: error: ")


def test_missing_file_exits_two(capsys):
    code, _, err = run(capsys, "check", "/nonexistent/model.lagr")
    assert code == 2 and err


def test_em_eq_and_gauge(capsys):
    code, out, _ = run(capsys, "em-eq", _file("kg_maxwell"))
    assert code == 0 and "8·π·e²·A^μ·phi*·phi" in out
    code, out, _ = run(capsys, "gauge", _file("kg_maxwell"), "--format", "json")
    data = json.loads(out)
    jsonschema.validate(data, SCHEMA)
    assert code == 1 and not data["ok"]
    assert data["checks"][-1]["witness"] == "8*pi*e^2*d^{mu}(chi)*conj(phi)*phi"
    code, _, _ = run(capsys, "gauge", _file("maxwell_current"))
    assert code == 0


def test_stress(capsys):
    code, out, _ = run(capsys, "stress", _file("kg_free_real"), "--field", "phi", "--lower")
    assert code == 0 and "T_{mu nu}" in out


def test_scenario_all_json(capsys):
    code, out, _ = run(capsys, "scenario", "--all", "--format", "json")
    data = json.loads(out)
    jsonschema.validate(data, SCHEMA)
    assert code == 0 and data["ok"] and len(data["reports"]) == 15


def test_scenario_single_and_unknown(capsys):
    code, out, _ = run(capsys, "scenario", "yukawa_orthogonality")
    assert code == 0 and "nonzero" in out
    code, _, err = run(capsys, "scenario", "nope")
    assert code == 2 and "nope" in err


def test_scenario_list(capsys):
    code, out, _ = run(capsys, "scenario", "--list")
    assert code == 0 and out.split()[0] == "kg_free_eom"


def test_scenario_dir_and_tolerance(tmp_path, capsys):
    manifest = {"scenarios": [{"id": "mine", "steps": [
        {"op": "kg_em_residual", "m": 1.0, "U": 0.1, "expect": 0.01}]}]}
    (tmp_path / "manifest.json").write_text(json.dumps(manifest), encoding="utf-8")
    code, _, _ = run(capsys, "scenario", "mine", "--scenario-dir", str(tmp_path))
    assert code == 0
    code, _, _ = run(capsys, "scenario", "mine", "--scenario-dir", str(tmp_path), "--tolerance", "0")
    assert code == 1
    code, _, err = run(capsys, "scenario", "mine", "--scenario-dir", str(tmp_path / "missing"))
    assert code == 2


def test_usage_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["eom", _file("kg_free_real")])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_text_output_is_line_stable(capsys):
    _, a, _ = run(capsys, "check", _file("kg_maxwell"))
    _, b, _ = run(capsys, "check", _file("kg_maxwell"))
    assert a == b


def test_console_script_no_color(tmp_path):
    env = {"NO_COLOR": "1", "PATH": ""}
    proc = subprocess.run([sys.executable, "-m", "fieldlint.cli", "eom", _file("kg_free_real"), "--vary", "phi"],
                          capture_output=True, text=True, env=env)
    assert proc.returncode == 0 and "\x1b[" not in proc.stdout
