import csv
import io as _io
import json
import shutil
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from opcalc import cli
from opcalc import io as oio
from opcalc.errors import ConfigError

SCHEMAS = Path(cli.__file__).parent / "schemas"


def _schema(name):
    return json.loads((SCHEMAS / name).read_text())


@pytest.fixture(scope="module")
def bundled_summary():
    return cli.run_suite(cli.bundled_scenarios())


def test_bundled_suite_passes(bundled_summary):
    assert bundled_summary["total"] >= 15
    assert bundled_summary["failed"] == 0, [r for r in bundled_summary["scenarios"] if not r["passed"]]


def test_suite_json_validates(bundled_summary):
    data = json.loads(cli.emit_report(bundled_summary))
    jsonschema.validate(data, _schema("suite_summary.schema.json"))
    report_schema = _schema("calculus_report.schema.json")
    for rep in data["reports"].values():
        jsonschema.validate(rep, report_schema)


def test_suite_rows_sorted(bundled_summary):
    names = [r["name"] for r in bundled_summary["scenarios"]]
    assert names == sorted(names)


def test_suite_is_deterministic(bundled_summary):
    again = cli.run_suite(cli.bundled_scenarios(), workers=4)
    assert cli.emit_report(again) == cli.emit_report(bundled_summary)


def test_csv_row_count(bundled_summary):
    rows = list(csv.DictReader(_io.StringIO(cli.emit_report(bundled_summary, "csv").decode())))
    assert len(rows) == bundled_summary["total"]
    assert set(rows[0]) == set(cli.CSV_FIELDS)


def test_empty_directory(tmp_path):
    summary = cli.run_suite(tmp_path)
    assert summary["total"] == 0 and summary["failed"] == 0
    assert summary["worst_oracle_residual"] is None


def test_missing_directory(tmp_path):
    with pytest.raises(ConfigError):
        cli.run_suite(tmp_path / "nope")


def test_injected_fault_fails_exactly_once(tmp_path):
    for p in cli.bundled_scenarios().glob("*.toml"):
        shutil.copy(p, tmp_path)
    (tmp_path / "zz_fault.toml").write_text(
        'name = "zz_fault"\ncalculus = "borel"\nmode = "axioms"\nanchor = "transpose is not the adjoint"\n'
        'matrix = "random_normal(3)"\nadjoint = "transpose"\n')
    summary = cli.run_suite(tmp_path)
    failed = [r for r in summary["scenarios"] if not r["passed"]]
    assert [r["name"] for r in failed] == ["zz_fault"]
    assert failed[0]["error"] == "AxiomViolation"


def test_oracle_none_on_jordan_block():
    s = cli.load_scenario(cli.bundled_scenarios() / "sector_jordan_no_oracle.toml")
    rep = cli.run_scenario(s)
    assert rep.oracle_residual is None
    assert cli.report_passed(rep)


def test_expected_error_scenario():
    rep = cli.run_scenario(cli.load_scenario(cli.bundled_scenarios() / "nollau_small_imaginary_part.toml"))
    assert cli.report_passed(rep)


@pytest.mark.parametrize("bad", [
    {"calculus": "nope", "matrix": [[1.0]]},
    {"calculus": "sector", "symbol": "inv_1pz"},
    {"calculus": "sector", "matrix": [[1.0]]},
    {"calculus": "sector", "matrix": [[1.0, 2.0]], "symbol": "inv_1pz"},
    {"calculus": "sector", "matrix": [[1.0]], "symbol": "unknown_fn"},
    {"calculus": "sector", "matrix": "missing.mtx", "symbol": "inv_1pz"},
])
def test_config_errors(bad, tmp_path):
    with pytest.raises(ConfigError):
        s = cli.scenario_from_dict(bad, tmp_path, "bad")
        cli.run_scenario(s)


def test_malformed_toml(tmp_path):
    p = tmp_path / "broken.toml"
    p.write_text("calculus = [unclosed\n")
    with pytest.raises(ConfigError):
        cli.load_scenario(p)


def test_main_exit_codes(tmp_path, capsys):
    assert cli.main(["sector", "eval", "--matrix", str(tmp_path / "missing.mtx"), "--symbol", "inv_1pz"]) == 2
    assert "configuration error" in capsys.readouterr().err
    mat = tmp_path / "a.json"
    oio.save_matrix_json(np.diag([1.0, 2.0]), mat)
    out = tmp_path / "r.json"
    assert cli.main(["sector", "eval", "--matrix", str(mat), "--symbol", "z_over_1pz2", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    jsonschema.validate(rep, _schema("calculus_report.schema.json"))
    assert rep["oracle_residual"] < 1e-9


def test_main_failed_report_exit_one(tmp_path, capsys):
    mat = tmp_path / "a.json"
    oio.save_matrix_json(np.diag([1.0, 2.0]), mat)
    assert cli.main(["sector", "eval", "--matrix", str(mat), "--symbol", "nollau(1)"]) == 1
    rep = json.loads(capsys.readouterr().out)
    assert rep["details"]["error"] == "DomainMismatch"


def test_mtx_input(tmp_path, capsys):
    import scipy.io
    p = tmp_path / "a.mtx"
    scipy.io.mmwrite(str(p), np.diag([0.0, 1.0, 2.0]))
    assert cli.main(["extend", "--matrix", str(p), "--symbol", "inverse_z"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["details"]["classification"] == "Relation"
    assert rep["details"]["mul_dim"] == 1


def test_csv_single_report(tmp_path, capsys):
    mat = tmp_path / "a.json"
    oio.save_matrix_json(np.diag([1.0, 2.0]), mat)
    assert cli.main(["subcalc", "stieltjes", "--matrix", str(mat), "--measure", "exp_decay(1)", "--m", "1",
                     "--format", "csv-table"]) == 0
    rows = list(csv.DictReader(_io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 1 and rows[0]["calculus"] == "stieltjes"


def test_hp_inversion_cli(tmp_path, capsys):
    mat = tmp_path / "rot.json"
    oio.save_matrix_json(np.array([[0.0, 1.0], [-1.0, 0.0]]), mat)
    assert cli.main(["hp", "inversion", "--matrix", str(mat), "--t", "4"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["calculus"] == "hp-inversion"
    assert rep["oracle_residual"] < 1e-6


def test_run_command_roundtrip(tmp_path, capsys):
    src = cli.bundled_scenarios() / "hirsch_dirac2.toml"
    assert cli.main(["run", str(src)]) == 0
    first = capsys.readouterr().out
    assert cli.main(["run", str(src)]) == 0
    assert capsys.readouterr().out == first


def test_seed_environment(monkeypatch):
    monkeypatch.setenv("OPCALC_SEED", "7")
    assert oio.seed() == 7
    monkeypatch.setenv("OPCALC_SEED", "x")
    with pytest.raises(ConfigError):
        oio.seed()
    monkeypatch.delenv("OPCALC_SEED")
    assert oio.seed() == 42


@pytest.mark.parametrize("text,value", [("1+4i", 1 + 4j), ("pi", np.pi), ([1, 2], 1 + 2j), (3, 3.0)])
def test_parse_number(text, value):
    assert oio.parse_number(text) == pytest.approx(value)


def test_measure_and_matrix_loading(tmp_path):
    mu = oio.measure({"atoms": [[0.5, 1.0]], "density": {"kind": "exp_decay", "rate": 2.0}})
    assert mu.atoms == ((0.5, 1.0),)
    assert oio.load_matrix([[[1, 1], [0, 0]], [[0, 0], [2, -1]]])[1, 1] == 2 - 1j
    with pytest.raises(ConfigError):
        oio.load_matrix([[np.nan]])
    with pytest.raises(ConfigError):
        oio.measure("unknown(1)")
