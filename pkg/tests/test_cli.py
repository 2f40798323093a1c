import csv
import io
import json
from pathlib import Path

import pytest

from repval.cli import EXIT_BUDGET, EXIT_INVARIANT, EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, run_command
from repval.schemas import validate

from conftest import CORPUS as _CORPUS

CORPUS = Path(_CORPUS)


def run(*argv):
    out = io.StringIO()
    code = run_command([str(a) for a in argv], stdout=out)
    return code, out.getvalue()


def run_json(*argv):
    code, text = run(*argv)
    assert code == EXIT_OK, text
    return json.loads(text)


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {k: _strip_timing(v) for k, v in obj.items() if k != "seconds"}
    if isinstance(obj, list):
        return [_strip_timing(v) for v in obj]
    return obj


def test_counterexample_report():
    r = run_json("counterexample", "--k", 2)
    assert r["classical"] == pytest.approx(0.5)
    assert r["ns"] == pytest.approx(2 / 3, abs=1e-9)
    assert r["repeated_strategy"] == pytest.approx(0.5)
    validate(r, "counterexample")


def test_counterexample_three_players():
    r = run_json("counterexample", "--k", 3)
    assert r["classical"] == pytest.approx(0.5) and r["ns"] == pytest.approx(0.5, abs=1e-9)


@pytest.mark.parametrize("method", ["classical", "ns", "seesaw"])
def test_value_schema(method):
    r = run_json("value", method, CORPUS / "chsh.json", "--restarts", 2)
    validate(r, "value")
    expected = {"classical": 0.75, "ns": 1.0, "seesaw": 0.8535533905932737}[method]
    assert r["value"] == pytest.approx(expected, abs=1e-6)


def test_value_report_reused_as_strategy(tmp_path):
    out = tmp_path / "v.json"
    assert run("value", "seesaw", CORPUS / "chsh.json", "--restarts", 2, "--output", out)[0] == EXIT_OK
    r = run_json("repeat", CORPUS / "chsh.json", "--n", 2, "--strategy", out)
    validate(r, "repeat")
    assert r["strategy_value"] == pytest.approx(0.8535533905932737 ** 2, abs=1e-6)


def test_output_file_matches_stdout(tmp_path):
    out = tmp_path / "r.json"
    assert run("counterexample", "--k", 2, "--output", out)[0] == EXIT_OK
    _, text = run("counterexample", "--k", 2)
    assert _strip_timing(json.loads(out.read_text())) == _strip_timing(json.loads(text))


def test_csv_rows_for_battery():
    code, text = run("qit-battery", "--cases", 20, "--checks", "bures_triangle", "divergence_monotone", "--format", "csv")
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(text)))
    assert {r["name"] for r in rows} == {"bures_triangle", "divergence_monotone"}


def test_csv_key_value():
    code, text = run("value", "classical", CORPUS / "chsh.json", "--format", "csv")
    assert code == EXIT_OK
    pairs = dict(csv.reader(io.StringIO(text)))
    assert float(pairs["value"]) == pytest.approx(0.75)


def test_battery_violation_exit_code():
    code, text = run("qit-battery", "--cases", 200, "--checks", "binary_bures_bound")
    r = json.loads(text)
    validate(r, "battery")
    assert code == (EXIT_VIOLATION if r["violations"] else EXIT_OK)


def test_battery_reproducible():
    (ca, a), (cb, b) = run("qit-battery", "--cases", 30, "--seed", 3), run("qit-battery", "--cases", 30, "--seed", 3)
    assert ca == cb
    assert _strip_timing(json.loads(a)) == _strip_timing(json.loads(b))


def test_search_reproducible_and_valid():
    args = ("search", "sim", "--n", 2000, "--eps-prime", 0.1, "--eta", 0.001,
            "--losing-fraction", 0.05, "--samples", 500, "--seed", 9)
    a, b = run_json(*args), run_json(*args)
    validate(a, "search")
    assert _strip_timing(a) == _strip_timing(b)
    assert a["accept_prob"] <= a["bound"]


def test_search_seed_changes_result():
    base = ("search", "sim", "--n", 2000, "--eps-prime", 0.1, "--eta", 0.001, "--losing-fraction", 0.002, "--samples", 400)
    a, b = run_json(*base, "--seed", 1), run_json(*base, "--seed", 2)
    assert a["found_counts"] != b["found_counts"]


def test_advice_run(tmp_path):
    s = tmp_path / "s.json"
    assert run("value", "seesaw", CORPUS / "chsh.json", "--restarts", 2, "--output", s)[0] == EXIT_OK
    r = run_json("advice", "run", CORPUS / "chsh.json", "--n", 2, "--strategy", s)
    validate(r, "advice")
    assert r["lambda"] == pytest.approx(0.8535533905932737 ** 2, abs=1e-6)


def test_protocol_c(tmp_path):
    from repval.games import agreement_repeated_strategy, build_agreement_game
    from repval.games import game_to_json, strategy_to_json
    g, s = tmp_path / "g.json", tmp_path / "s.json"
    g.write_text(json.dumps(game_to_json(build_agreement_game(2))))
    s.write_text(json.dumps(strategy_to_json(agreement_repeated_strategy(2))))
    r = run_json("protocol-c", g, "--n", 2, "--strategy", s, "--C", 0)
    validate(r, "protocol_c")
    assert r["omega"] == 1.0 and r["holds"]


def test_unknown_flag_is_usage_error():
    assert run("counterexample", "--k", 2, "--bogus")[0] == EXIT_USAGE


def test_missing_argument_is_usage_error():
    assert run("protocol-c")[0] == EXIT_USAGE


def test_missing_file_is_usage_error(tmp_path):
    assert run("value", "classical", tmp_path / "nope.json")[0] == EXIT_USAGE


def test_budget_exit_code(tmp_path):
    s = tmp_path / "s.json"
    assert run("value", "seesaw", CORPUS / "chsh.json", "--restarts", 1, "--output", s)[0] == EXIT_OK
    assert run("advice", "run", CORPUS / "chsh.json", "--n", 3, "--strategy", s)[0] == EXIT_BUDGET


def test_invalid_game_exit_code(tmp_path):
    bad = json.loads(Path(CORPUS / "chsh.json").read_text())
    bad["mu"] = {"type": "explicit", "probs": [0.5, 0.5, 0.5, 0.5]}
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(bad))
    assert run("value", "classical", p)[0] == EXIT_INVARIANT


def test_search_infeasible_is_invariant():
    assert run("search", "sim", "--n", 200, "--eps-prime", 0.1, "--eta", 0.001,
               "--losing-fraction", 0.05)[0] == EXIT_INVARIANT


def test_threads_must_be_positive():
    assert run("counterexample", "--k", 2, "--threads", 0)[0] == EXIT_USAGE
