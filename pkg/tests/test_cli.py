import json
import subprocess
import sys

import pytest

from resilience.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_evaluate_fig4(capsys):
    code, out, _ = run(capsys, "evaluate", "--model", "FIG4", "--strategy", "all-a",
                       "--semantics", "worst", "--objective", "reach:G:>2/5")
    doc = json.loads(out)
    assert code == 0
    assert (doc["transient"], doc["frequency"]) == ("2", "0")


def test_evaluate_nodist(capsys):
    code, out, _ = run(capsys, "evaluate", "--model", "NODIST", "--strategy", "all-a")
    assert code == 0 and json.loads(out)["transient"] == "unbreakable"


def test_synthesize_fig6l(capsys, tmp_path):
    qp = tmp_path / "levels.qp"
    code, out, _ = run(capsys, "synthesize", "--model", "FIG6L", "--semantics", "worst", "--k", "4",
                       "--emit-qp", str(qp))
    doc = json.loads(out)
    assert code == 0 and doc["transient"] == "2"
    assert doc["strategy"]["(s1,0)"] == "a2" and doc["strategy"]["(s1,1)"] == "a1"
    assert qp.read_text().count("\\ level-") == 3


def test_files_and_output_path(capsys, tmp_path):
    from resilience.fixtures import STRATEGIES, model_text
    model = tmp_path / "m.json"
    model.write_text(model_text("FIG6R"))
    strat = tmp_path / "s.json"
    strat.write_text(json.dumps(STRATEGIES["FIG6R"]))
    out = tmp_path / "r.json"
    lp = tmp_path / "r.lp"
    code, _, _ = run(capsys, "evaluate", "--model", str(model), "--strategy", str(strat),
                     "--objective", "reach:G:>=1/2", "--out", str(out), "--dump-lp", str(lp))
    assert code == 0
    assert json.loads(out.read_text())["transient"] == "3"
    assert "Subject To" in lp.read_text()


def test_float_mode(capsys):
    code, out, _ = run(capsys, "evaluate", "--model", "FIG4", "--strategy", "all-a", "--semantics",
                       "expected", "--numeric", "float")
    assert code == 0 and float(json.loads(out)["transient"]) == pytest.approx(1.2)


def test_transform_and_fixtures(capsys):
    code, out, _ = run(capsys, "transform", "--model", "FIG4", "--kind", "unfold", "--k", "1")
    assert code == 0 and len(json.loads(out)["states"]) > 4
    code, out, _ = run(capsys, "fixtures")
    assert code == 0 and set(json.loads(out)) == {"FIG4", "FIG6L", "FIG6R", "FREQ19", "NODIST"}


def test_oracle(capsys):
    code, out, _ = run(capsys, "oracle", "--model", "FIG6R", "--strategy", "fixture", "--k", "4")
    assert code == 0 and json.loads(out)["transient"] == "3"
    code, out, _ = run(capsys, "oracle", "--model", "FIG4", "--lemmas", "--trials", "3")
    doc = json.loads(out)["lemmas"]
    assert doc["failures"] == [] and doc["passed"]["unfolding"] == 3


class TestExitCodes:
    def test_usage(self, capsys):
        assert run(capsys, "evaluate", "--model", "FIG4")[0] == 1

    def test_missing_file(self, capsys):
        code, _, err = run(capsys, "evaluate", "--model", "nope.json", "--strategy", "all-a",
                           "--objective", "reach:G:>1/2")
        assert code == 1 and json.loads(err)["error"] == "FileNotFoundError"

    def test_bad_objective(self, capsys):
        code, _, err = run(capsys, "evaluate", "--model", "FIG4", "--strategy", "all-a", "--objective", "reach:G")
        assert code == 1 and json.loads(err)["error"] == "ParseError"

    def test_budget(self, capsys, monkeypatch):
        monkeypatch.setenv("RESIL_BUDGET", "1")
        code, _, err = run(capsys, "synthesize", "--model", "FIG6L", "--k", "4")
        assert code == 2 and json.loads(err)["error"] == "budget_exceeded"


def test_repeated_runs_identical():
    argv = [sys.executable, "-m", "resilience", "synthesize", "--model", "FIG6L", "--k", "4"]
    outs = {subprocess.run(argv, capture_output=True, check=True).stdout for _ in range(2)}
    assert len(outs) == 1
