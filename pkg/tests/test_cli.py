import json
import subprocess
import sys
from pathlib import Path

import pytest

from cqmlab import cli

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def run_doc(doc, tmp_path, fmt="json"):
    report, code = cli.run_scenario(doc)
    paths = cli.write_report(report, tmp_path, fmt)
    return report, code, paths


def test_empty_scenario(tmp_path):
    report, code, paths = run_doc({"seed": 0, "examples": [], "jobs": []}, tmp_path)
    assert code == 0
    assert report["jobs"] == []
    assert report["environment"]["seed"] == 0
    assert (tmp_path / "report.json").exists()


def test_missing_seed_rejected():
    with pytest.raises(cli.ScenarioError):
        cli.validate_scenario({"examples": [], "jobs": []})


def test_invalid_reference_diagnostic():
    doc = {"seed": 0, "examples": [{"name": "a", "family": "cycle", "m": 6}],
           "jobs": [{"kind": "radius", "example": "missing"}]}
    with pytest.raises(cli.ScenarioError) as err:
        cli.validate_scenario(doc)
    assert "missing" in str(err.value)


def test_bad_json_diagnostic(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{"seed": 0,,}')
    with pytest.raises(cli.ScenarioError) as err:
        cli.load_scenario(p)
    assert "line" in str(err.value)


def test_small_scenario_and_roundtrip(tmp_path):
    doc = {
        "seed": 3, "eps_net": 0.4, "budget": 16,
        "examples": [{"name": "c6", "family": "cycle", "m": 6}],
        "jobs": [{"kind": "radius", "example": "c6"},
                 {"kind": "mult", "example": "c6"}],
    }
    report, code, paths = run_doc(doc, tmp_path)
    assert code == 0
    parsed = json.loads((tmp_path / "report.json").read_text())
    assert parsed["jobs"][0]["result"]["within_bound"] is True
    assert set(parsed["jobs"][1]["result"]["table"].values()) == {1}
    # parse-back structural equality
    assert [j["name"] for j in parsed["jobs"]] == [j["name"] for j in report["jobs"]]


def test_render_byte_stability(tmp_path):
    doc = {
        "seed": 5, "eps_net": 0.4, "budget": 16,
        "examples": [{"name": "c6", "family": "cycle", "m": 6}],
        "jobs": [{"kind": "radius", "example": "c6", "diameter": True}],
    }
    report1, _, _ = run_doc(doc, tmp_path / "a")
    report2, _, _ = run_doc(doc, tmp_path / "b")
    a = (tmp_path / "a" / "report.json").read_bytes()
    b = (tmp_path / "b" / "report.json").read_bytes()
    assert a == b


def test_job_error_recorded_not_fatal(tmp_path):
    doc = {
        "seed": 0,
        "examples": [{"name": "c6", "family": "cycle", "m": 6},
                     {"name": "c9", "family": "cycle", "m": 9}],
        "jobs": [{"kind": "dist", "a": "c6", "b": "c9", "phi": "cycle_refine"},
                 {"kind": "radius", "example": "c6"}],
    }
    report, code, _ = run_doc(doc, tmp_path)
    assert code == 0
    assert report["jobs"][0]["status"] == "error"      # 9 is not a multiple of 6
    assert "multiple" in report["jobs"][0]["error"]
    assert report["jobs"][1]["status"] == "ok"


def test_audit_exit_code(tmp_path, monkeypatch):
    # force an audit failure through a corrupted radius cache
    import cqmlab.distoq as dq

    def fake_audit(a, b, reports, tol=1e-9):
        rec = dq.AuditRecord(pair=("x", "y"),
                             checks=[dq.AuditCheck("forced", False, 1.0, 0.0)])
        return rec

    monkeypatch.setattr(dq, "audit_chain", fake_audit)
    doc = {
        "seed": 0, "eps_net": 0.5, "budget": 8,
        "examples": [{"name": "c6", "family": "cycle", "m": 6}],
        "jobs": [{"kind": "audit", "a": "c6", "b": "c6", "phi": "identity"}],
    }
    _, code, _ = run_doc(doc, tmp_path)
    assert code == 3
    doc["audit_policy"] = "warn"
    _, code, _ = run_doc(doc, tmp_path)
    assert code == 0


def test_bundled_scenarios_validate():
    for path in sorted(SCENARIOS.glob("*.json")):
        doc = cli.load_scenario(path)
        assert doc["seed"] is not None
        assert doc["jobs"]


def test_family_job_scenario(tmp_path):
    doc = {
        "seed": 1, "eps_net": 0.5, "budget": 16,
        "examples": [{"name": "t21", "family": "torus", "q": 2, "p": 1}],
        "jobs": [{"kind": "family", "type": "degenerate", "reference": "t21",
                  "eps": 0.4, "R": 1.0}],
    }
    report, code, _ = run_doc(doc, tmp_path)
    assert code == 0
    res = report["jobs"][0]["result"]
    assert res["agree"] is True
    assert res["criterion_iii_passed"] is False
    assert res["multiplicity_locally_constant"] is False


def test_sphere_grid_override(tmp_path):
    code = cli.main(["--seed", "0", "--out", str(tmp_path), "--grid", "6x6x6",
                     "example", "sphere:two_j=1"])
    assert code == 0
    parsed = json.loads((tmp_path / "report.json").read_text())
    assert "6x6x6" in parsed["jobs"][0]["result"]["group"]


def test_csv_trend_schema(tmp_path):
    report = {"jobs": [{"name": "fam", "kind": "family", "status": "ok",
                        "result": {"rows": [
                            {"t": 1, "upper": 0.5, "upper_certified": 0.7,
                             "lower": 0.1, "slack": 0.2, "degraded": False}]}}]}
    tables = cli.render_csv_tables(report)
    text = tables["fam_trend.csv"]
    assert text.splitlines()[0] == "t,upper,lower,slack"
    assert text.splitlines()[1].startswith("1,5.")


def test_main_cli_entry(tmp_path):
    code = cli.main(["--seed", "2", "--eps-net", "0.5", "--budget", "8",
                     "--out", str(tmp_path), "radius", "cycle:m=6"])
    assert code == 0
    parsed = json.loads((tmp_path / "report.json").read_text())
    assert parsed["jobs"][0]["kind"] == "radius"


def test_main_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    code = cli.main(["--out", str(tmp_path), "run", str(bad)])
    assert code == 2
    assert "scenario error" in capsys.readouterr().err


def test_subprocess_run_deterministic(tmp_path):
    # end-to-end through the executable: same scenario twice, byte-identical
    # (the larger bundled regression scenario is exercised by the acceptance
    # suite; this one keeps the subprocess path fast)
    scenario = tmp_path / "mini.json"
    scenario.write_text(json.dumps({
        "seed": 4, "eps_net": 0.5, "budget": 8,
        "examples": [{"name": "c6", "family": "cycle", "m": 6}],
        "jobs": [{"kind": "radius", "example": "c6"},
                 {"kind": "embed", "points": 12, "depth": 3, "functions": 4}],
    }))
    outs = []
    for sub in ("r1", "r2"):
        out = tmp_path / sub
        res = subprocess.run(
            [sys.executable, "-m", "cqmlab.cli", "--out", str(out),
             "run", str(scenario)],
            capture_output=True, text=True, timeout=300)
        assert res.returncode == 0, res.stderr
        outs.append((out / "report.json").read_bytes())
    assert outs[0] == outs[1]
