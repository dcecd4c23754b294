import json

import pytest

from contlogic.cli import (EXIT_MISMATCH, EXIT_OK, EXIT_UNKNOWN, EXIT_USAGE, RunConfig, UsageError, run,
                           sample_family_path)
from contlogic.hierarchy import RelationTable
from contlogic.infinitary import code_to_json, make_sigma_code, leaf
from contlogic.structures import make_interval_structure

TABLE = sample_family_path().replace("sample_family.json", "sample_table.json")


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def test_verify_carry(capsys):
    code, report, err = call(capsys, "verify-lemmas", "--lemma", "carry", "--K", "10")
    assert code == EXIT_OK
    (result,) = report["results"]
    assert result["status"] == "pass" and result["instances"] == 2048
    assert "carry pass" in err


def test_verify_carry_all_K(capsys):
    code, report, _ = call(capsys, "verify-lemmas", "--lemma", "carry", "--K", "4", "--all-K")
    assert code == EXIT_OK and report["results"][0]["instances"] == 2 + 4 + 8 + 16 + 32


def test_eval_interval(capsys):
    code, report, _ = call(capsys, "eval", "--structure", "interval", "--formula", "sup x . d(x, q(1/2))",
                           "--k", "10")
    assert code == EXIT_OK
    assert report["enclosure"]["lo"] == "1/2^1" and report["enclosure"]["hi"] == "513/2^10"
    assert report["class"] == "Pi_1"


def test_eval_discrete_pinned(capsys):
    code, report, _ = call(capsys, "eval", "--formula", "sup x . d(x, zero)")
    assert code == EXIT_OK and report["pinned"] and report["enclosure"]["lo"] == "1"


def test_encode_check(capsys):
    code, report, _ = call(capsys, "encode-check", "--table", TABLE, "--mode", "forall")
    assert code == EXIT_OK and report["mismatches"] == 0 and report["instances"] == 6
    assert [r["forall_member"] for r in report["rows"]] == [True, False, False, True, True, True]


def test_encode_check_fixed_range_mismatch(capsys, tmp_path):
    # at range B the out-of-bound witness is missed; the retry policy needs B + 1 here
    R = RelationTable.from_predicate(3, 3, lambda x, y, n: (x * y) % 3 == n % 3)
    path = tmp_path / "t.json"
    path.write_text(json.dumps(R.to_json()))
    code, report, _ = call(capsys, "encode-check", "--table", str(path), "--range", "3")
    assert code == EXIT_MISMATCH and report["mismatches"] == 2
    code, report, _ = call(capsys, "encode-check", "--table", str(path))
    assert code == EXIT_OK and {r["least_range"] for r in report["rows"]} == {3, 4}


def test_diagram_verdicts(capsys):
    code, report, _ = call(capsys, "diagram", "--formula", "inf x . d(x, zero)", "--q", "1/2")
    assert code == EXIT_OK and report["verdict"]["status"] == "Verified"
    assert report["verdict"]["witness"]["point"] == "pt[0]"
    code, report, _ = call(capsys, "diagram", "--formula", "sup x . d(x, zero)", "--q", "1/2", "--points", "1")
    assert code == EXIT_UNKNOWN and report["verdict"]["status"] == "Unknown"


def test_cross_check(capsys):
    code, report, err = call(capsys, "cross-check", "--N-max", "1", "--n-max", "3")
    assert code == EXIT_OK and report["instances"] == 12 and report["mismatches"] == []
    assert "12 instances" in err


def test_cross_check_family_file(capsys):
    code, report, _ = call(capsys, "cross-check", "--family", sample_family_path(), "--N-max", "0", "--n-max", "4")
    assert code == EXIT_OK and report["instances"] == 8


def _code_file(tmp_path):
    M = make_interval_structure()
    items = [(leaf(f"d(q({v}), q(0))", M.signature), ()) for v in ("1/4", "1/2", "3/4")]
    path = tmp_path / "code.json"
    path.write_text(json.dumps(code_to_json(make_sigma_code(1, [], items))))
    return str(path)


def test_inf_eval_and_cut_check(capsys, tmp_path):
    path = _code_file(tmp_path)
    code, report, _ = call(capsys, "inf-eval", "--code", path, "--T", "4")
    assert code == EXIT_OK and report["pinned"] and report["enclosure"]["lo"] == "1/2^2"
    for q, rel, status in [("1/8", ">", "Refuted"), ("1/2", ">", "Verified"), ("1/4", ">=", "Verified"),
                           ("1/4", ">", "Refuted")]:
        code, report, _ = call(capsys, "cut-check", "--code", path, "--q", q, "--relation", rel)
        assert code == EXIT_OK and report["verdict"]["status"] == status


def test_output_file_and_determinism(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["verify-lemmas", "--lemma", "swap", "--samples", "20", "--seed", "4"]
    assert run(argv + ["--output", str(a)]) == EXIT_OK
    assert run(argv + ["--output", str(b)]) == EXIT_OK
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["results"][0]["failure_count"] == 0


@pytest.mark.parametrize("argv", [
    [],
    ["eval"],
    ["eval", "--formula", "sup x . Q(x)"],
    ["diagram", "--formula", "d(zero, zero)", "--q", "1/3"],
    ["encode-check"],
    ["encode-check", "--table", "/nonexistent.json"],
    ["eval", "--formula", "d(zero, zero)", "--k", "-1"],
    ["frobnicate"],
])
def test_usage_errors(capsys, argv):
    assert run(argv) == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_config_validation():
    with pytest.raises(UsageError):
        RunConfig(structure="torus")
    with pytest.raises(UsageError):
        RunConfig(points=0)
    assert RunConfig().budget.points == 16
