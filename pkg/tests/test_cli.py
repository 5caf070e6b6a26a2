import json

import pytest

import config
import main
from laurent import LaurentPoly, variables


def run(capsys, *argv):
    code = main.main(list(argv))
    return code, capsys.readouterr().out


def test_roots_json(capsys):
    code, out = run(capsys, "--type", "B2", "--json", "roots")
    assert code == 0
    data = json.loads(out)
    assert data["schema"] == config.SCHEMA_VERSION
    assert data["command"] == "roots" and data["type"] == "B2"
    assert data["exchange_matrix"] == [[0, 1], [-2, 0]]
    assert data["coxeter_number"] == 4
    assert len(data["roots"]) == 4


def test_xvar_text(capsys):
    code, out = run(capsys, "--type", "B2", "xvar", "--beta", "1,1")
    assert code == 0
    first, g_line, _ = out.strip().splitlines()
    assert LaurentPoly.parse(first, variables(2)) == LaurentPoly.parse("(u2^2+1+u1)/(u1*u2)", variables(2))
    assert g_line == "g = (-1, 1)"


def test_euler_text(capsys):
    code, out = run(capsys, "--type", "B2", "euler", "--beta", "1,2", "--r", "1,1")
    assert code == 0
    assert out.splitlines()[0] == "chi = 2"


def test_fpoly_of_lift(capsys):
    code, out = run(capsys, "--type", "B2", "--json", "fpoly", "--module", "B2-socle")
    assert code == 0
    assert json.loads(out)["coefficients"] == [[[0, 0], 1], [[1, 0], 1], [[1, 1], 1]]


def test_cluster_vars_json(capsys):
    code, out = run(capsys, "--type", "G2", "--json", "cluster-vars")
    assert code == 0
    data = json.loads(out)
    assert len(data["variables"]) == 8
    assert len(data["clusters"]) == 8


def test_find_module(capsys):
    code, out = run(capsys, "--type", "B2", "--json", "find-module", "--beta", "1,2")
    assert code == 0
    data = json.loads(out)
    assert data["rigid"] is True
    assert data["module"]["rank"] == [1, 2]
    assert data["q"] == config.SEARCH_PRIME


def test_find_module_over_chosen_field(capsys):
    code, out = run(capsys, "--type", "B2", "--json", "find-module", "--beta", "1,1", "--q", "7")
    assert code == 0
    assert json.loads(out)["q"] == 7


def test_verify_writes_reports_and_summary(capsys):
    code, out = run(capsys, "--type", "B2", "verify", "g")
    assert code == 0
    assert "=== Suite g on B2: PASS (4/4) ===" in out
    assert (config.REPORTS_DIR / "verification_summary.md").exists()
    assert len(list(config.REPORTS_DIR.glob("g_B2_*.json"))) == 1


def test_config_file(tmp_path, capsys):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"cartan": [[2, -1], [-2, 2]], "symmetrizer": [2, 1], "orientation": [[1, 2]]}))
    code, out = run(capsys, "--config", str(path), "--json", "roots")
    assert code == 0
    assert json.loads(out)["type"] == "B2"


def test_cache_option(tmp_path, capsys):
    code, _ = run(capsys, "--type", "B2", "--cache", str(tmp_path), "euler", "--beta", "1,1", "--r", "1,0")
    assert code == 0
    assert (tmp_path / "counts.jsonl").exists()
    assert (tmp_path / "modules.jsonl").exists()


@pytest.mark.parametrize(
    "argv",
    [
        ("--type", "E8", "roots"),
        ("--type", "B2", "euler", "--beta", "2,1", "--r", "1,0"),
        ("--type", "B2", "--primes", "2,3", "euler", "--beta", "1,2", "--r", "1,1"),
        ("--type", "B2", "xvar", "--module", "missing"),
        ("roots",),
    ],
)
def test_input_errors_exit_2(argv, capsys):
    code, _ = run(capsys, *argv)
    assert code == 2


def test_no_command_prints_help(capsys):
    code, out = run(capsys)
    assert code == 2
    assert "usage" in out


def test_summary_flag(capsys):
    code, out = run(capsys, "--summary")
    assert code == 0
    assert out.strip().endswith("verification_summary.md")
