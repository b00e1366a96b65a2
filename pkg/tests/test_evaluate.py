import json
from fractions import Fraction
from itertools import combinations
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from fsmforge.config import ConfigError
from fsmforge.core import StateDef
from fsmforge.evaluate import Outcome, eval_rtl_candidate, eval_yaml_candidate, evaluate_run, pass_at_k
from fsmforge.pipeline import iter_problems, load_problem
from fsmforge.sim import states_visited
from fsmforge.yaml_io import serialize_fsm_yaml
from fsmforge.emit import emit_rtl


def first_problem(root):
    return load_problem(next(iter_problems(root))[1])


def flip_output(f, state):
    sd = f.states[state]
    o = "at_exit"
    states = dict(f.states)
    states[state] = StateDef({**sd.outputs, o: 1 - sd.outputs[o]}, sd.transitions)
    return type(f)(f.name, f.inputs, dict(f.outputs), states, f.reset_state, f.clock_name, f.reset_name)


def test_pass_at_k_examples():
    assert pass_at_k(4, 4, 2) == 1.0
    assert pass_at_k(4, 0, 2) == 0.0
    assert pass_at_k(4, 2, 2, exact=True) == Fraction(5, 6)
    assert pass_at_k(4, 3, 1) == 0.75


def combinatorial(n, c, k):
    subsets = list(combinations(range(n), k))
    return Fraction(sum(any(i < c for i in s) for s in subsets), len(subsets))


@given(st.integers(1, 12), st.data())
def test_pass_at_k_matches_subset_enumeration(n, data):
    c = data.draw(st.integers(0, n))
    k = data.draw(st.integers(1, n))
    assert pass_at_k(n, c, k, exact=True) == combinatorial(n, c, k)
    assert pass_at_k(n, c, 1) == pytest.approx(c / n)
    assert pass_at_k(n, c, n) == (1.0 if c else 0.0)
    if k < n:
        assert pass_at_k(n, c, k + 1) >= pass_at_k(n, c, k)
    if c < n:
        assert pass_at_k(n, c + 1, k) >= pass_at_k(n, c, k)


@pytest.mark.parametrize("args", [(4, 5, 1), (4, 2, 0), (4, 2, 5), (0, 0, 1), (4, -1, 1)])
def test_pass_at_k_range(args):
    with pytest.raises(ValueError):
        pass_at_k(*args)


def test_yaml_self_and_renamed(mock_dataset):
    rec = first_problem(mock_dataset[0])
    assert eval_yaml_candidate(rec, serialize_fsm_yaml(rec.fsm)).outcome is Outcome.PASS
    renamed = rec.fsm.renamed({s: f"Z_{s}" for s in rec.fsm.states})
    assert eval_yaml_candidate(rec, serialize_fsm_yaml(renamed)).passed


def test_yaml_flipped_output_first_visit(mock_dataset):
    root, _ = mock_dataset
    for _, pdir in list(iter_problems(root))[:10]:
        rec = load_problem(pdir)
        visits = states_visited(rec.fsm, rec.golden.inputs)[: len(rec.golden)]
        target = visits[len(visits) // 2]
        v = eval_yaml_candidate(rec, serialize_fsm_yaml(flip_output(rec.fsm, target)))
        assert v.outcome is Outcome.MISMATCH
        assert (v.cycle, v.signal) == (visits.index(target), "at_exit")
        assert v.cycle < len(rec.golden)


def test_yaml_parse_and_interface_failures(mock_dataset):
    rec = first_problem(mock_dataset[0])
    assert eval_yaml_candidate(rec, "name: [").outcome is Outcome.PARSE_FAIL
    text = serialize_fsm_yaml(rec.fsm).replace("at_exit", "done")
    v = eval_yaml_candidate(rec, text)
    assert v.outcome is Outcome.PARSE_FAIL and "interface" in v.detail


def write_candidates(root, cands, mutate_one=False):
    for _, pdir in iter_problems(root):
        rec = load_problem(pdir)
        d = cands / rec.id
        d.mkdir(parents=True)
        for j in range(4):
            f = flip_output(rec.fsm, rec.fsm.reset_state) if mutate_one and j == 2 else rec.fsm
            (d / f"sample_{j}.yaml").write_text(serialize_fsm_yaml(f))


def test_run_self_consistency(mock_dataset, tmp_path):
    root, _ = mock_dataset
    write_candidates(root, tmp_path / "c")
    report = evaluate_run(root, tmp_path / "c", "yaml", jobs=2)
    assert report["pipeline"] == "yaml"
    for t in ("low", "medium", "high"):
        assert report["tiers"][t]["pass_at"]["1"] == 1.0
        assert report["tiers"][t]["pass_at"]["4"] == 1.0
        assert "8" not in report["tiers"][t]["pass_at"]
    assert report["totals"]["missing"] == 0


def test_run_one_of_four_mutated(mock_dataset, tmp_path):
    root, _ = mock_dataset
    write_candidates(root, tmp_path / "c", mutate_one=True)
    report = evaluate_run(root, tmp_path / "c", "yaml")
    for t in ("low", "medium", "high"):
        assert report["tiers"][t]["pass_at"]["1"] == pytest.approx(0.75)
        assert report["tiers"][t]["pass_at"]["4"] == 1.0
    sample = report["problems"][0]["samples"][2]
    assert sample["outcome"] == "mismatch" and sample["cycle"] == 0


def test_run_empty_candidates(mock_dataset, tmp_path):
    root, _ = mock_dataset
    (tmp_path / "c").mkdir()
    report = evaluate_run(root, tmp_path / "c", "yaml")
    assert report["totals"] == {"evaluated": 0, "missing": 30, "samples": 0, "passed": 0}
    assert all(v["pass_at"] == {"1": None} for v in report["tiers"].values())
    json.dumps(report)


def test_run_reports_unknown_ids(mock_dataset, tmp_path):
    root, _ = mock_dataset
    (tmp_path / "c" / "nonexistent").mkdir(parents=True)
    assert evaluate_run(root, tmp_path / "c", "yaml")["unknown_candidates"] == ["nonexistent"]


def test_rtl_without_simulator(mock_dataset, tmp_path):
    root, _ = mock_dataset
    rec = first_problem(root)
    with pytest.raises(ConfigError):
        eval_rtl_candidate(rec, tmp_path / "x.sv", "definitely-not-a-simulator {sources}")
    with pytest.raises(ConfigError):
        evaluate_run(root, tmp_path, "rtl", sim_cmd=None)


def test_rtl_outcomes_with_fake_tool(mock_dataset, tmp_path):
    rec = first_problem(mock_dataset[0])
    cand = tmp_path / "c.sv"
    cand.write_text("module x; endmodule\n")
    assert eval_rtl_candidate(rec, cand, "echo LLMFSM_PASS {top}").outcome is Outcome.PASS
    v = eval_rtl_candidate(rec, cand, "echo LLMFSM_FAIL cycle=3 signal=at_exit expect=1 got=0")
    assert (v.outcome, v.cycle, v.signal) == (Outcome.MISMATCH, 3, "at_exit")
    assert eval_rtl_candidate(rec, cand, "false {sources}").outcome is Outcome.COMPILE_FAIL
    assert eval_rtl_candidate(rec, cand, "true {sources}").outcome is Outcome.TOOL_ERROR
    v = eval_rtl_candidate(rec, cand, "sleep 5", timeout=0.2)
    assert v.outcome is Outcome.TOOL_ERROR and "timed out" in v.detail


@pytest.mark.slow
def test_rtl_with_simulator(mock_dataset, tmp_path, sim_cmd):
    root, _ = mock_dataset
    _, pdir = next(iter_problems(root))
    rec = load_problem(pdir)
    assert eval_rtl_candidate(rec, pdir / "ref.sv", sim_cmd).outcome is Outcome.PASS
    bad = tmp_path / "bad.sv"
    bad.write_text(emit_rtl(flip_output(rec.fsm, rec.fsm.reset_state)))
    v = eval_rtl_candidate(rec, bad, sim_cmd)
    assert (v.outcome, v.cycle) == (Outcome.MISMATCH, 0)
    empty = tmp_path / "empty.sv"
    empty.write_text("")
    assert eval_rtl_candidate(rec, empty, sim_cmd).outcome is Outcome.COMPILE_FAIL
