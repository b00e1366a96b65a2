"""Acceptance criteria, one test per criterion.

Each test attaches a short measurement summary; the terminal summary prints
one PASS/FAIL/SKIP line per criterion.
"""

import json
import random
import subprocess
import tempfile
import time
from fractions import Fraction
from pathlib import Path

import pytest

from fsmforge.cli import main
from fsmforge.core import StateDef, Tier, Transition
from fsmforge.emit import FAIL_SENTINEL, PASS_SENTINEL, emit_rtl, emit_testbench
from fsmforge.emit import testbench_top as tb_top
from fsmforge.evaluate import pass_at_k
from fsmforge.guards import eval_guard, parse_guard, print_guard, solve_priority, valuations
from fsmforge.pipeline import iter_problems, load_problem
from fsmforge.semantics import mock_assign_semantics, mock_spec_from_fsm
from fsmforge.sim import coverage, run, states_visited
from fsmforge.stimgen import plan
from fsmforge.topo import preset_config, sample_graph
from fsmforge.verify import check_equivalence, replay_counterexample
from fsmforge.yaml_io import serialize_fsm_yaml

from conftest import acceptance_status
from factories import guard_depth, mutate_output, mutate_transition, random_fsm, random_guard, renamed_copy
from oracles import brute_force_equivalent

SEED = 20240601
PER_TIER = 30
TARGETS = {
    Tier.LOW: (2.71, 11.95),
    Tier.MEDIUM: (5.24, 32.17),
    Tier.HIGH: (8.83, 65.39),
}


def tree(root: Path):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def hermetic(tmp_path_factory):
    base = tmp_path_factory.mktemp("hermetic")
    timings, codes = [], []
    for name in ("run1", "run2"):
        t0 = time.perf_counter()
        codes.append(
            main(["gen", "--tier", "all", "--count", str(PER_TIER), "--seed", str(SEED),
                  "--provider", "mock", "--out", str(base / name)])
        )
        timings.append(time.perf_counter() - t0)
    return base / "run1", base / "run2", timings, codes


@pytest.mark.acceptance(1, "hermetic curation: 30/tier, 100% acceptance, byte-identical rerun")
def test_criterion_1_hermetic_curation(hermetic, record_property):
    run1, run2, timings, codes = hermetic
    manifest = json.loads((run1 / "manifest.json").read_text())
    counts = {t.value: sum(p["tier"] == t.value for p in manifest["problems"]) for t in Tier}
    same = tree(run1) == tree(run2)
    record_property("detail", f"exit={codes} counts={counts} gen={timings[0]:.1f}s identical={same}")
    assert codes == [0, 0]
    assert counts == {"low": PER_TIER, "medium": PER_TIER, "high": PER_TIER}
    # 100% acceptance: seeds are consecutive, so no attempt was discarded
    for t in Tier:
        seeds = sorted(p["seed"] for p in manifest["problems"] if p["tier"] == t.value)
        assert seeds == list(range(SEED, SEED + PER_TIER))
    assert max(timings) < 300
    assert same


@pytest.mark.acceptance(2, "tier fidelity: state bounds, phase/edge means, monotone words and lines")
def test_criterion_2_tier_fidelity(hermetic, record_property):
    run1 = hermetic[0]
    for entry, _ in iter_problems(run1):
        lo, hi = Tier(entry["tier"]).bounds
        assert lo <= entry["n_states"] <= hi

    summary, words, lines = [], [], []
    ok = True
    for tier, (phase_target, edge_target) in TARGETS.items():
        phases, edges, w, ln = [], [], [], []
        for seed in range(200):
            g, _ = sample_graph(preset_config(tier, seed))
            lo, hi = tier.bounds
            ok &= lo <= len(g.states) <= hi
            f, _, _ = mock_assign_semantics(g, seed)
            phases.append(len(g.phases))
            edges.append(len(g.edges))
            w.append(mock_spec_from_fsm(f).word_count)
            ln.append(emit_rtl(f).count("\n"))
        mp, me = sum(phases) / 200, sum(edges) / 200
        words.append(sum(w) / 200)
        lines.append(sum(ln) / 200)
        summary.append(f"{tier.value}: phases {mp:.2f} (target {phase_target}) edges {me:.2f} (target {edge_target})")
        ok &= abs(mp - phase_target) <= 1.0
        ok &= abs(me - edge_target) <= 0.3 * edge_target
    summary.append(f"words {[round(x) for x in words]} lines {[round(x) for x in lines]}")
    record_property("detail", "; ".join(summary))
    assert ok
    assert words[0] < words[1] < words[2]
    assert lines[0] < lines[1] < lines[2]


def _pair(rng):
    a = random_fsm(rng, rng.randint(1, 4), rng.randint(1, 2), widths=(1, 2))
    kind = rng.randrange(4)
    b = [lambda: a, lambda: renamed_copy(rng, a), lambda: mutate_output(rng, a), lambda: mutate_transition(rng, a)][kind]()
    return a, b


@pytest.mark.acceptance(3, "equivalence engine vs brute force; counterexamples replay; hard-tier speed")
def test_criterion_3_equivalence(record_property):
    rng = random.Random(SEED)
    negatives = 0
    for _ in range(200):
        a, b = _pair(rng)
        v = check_equivalence(a, b)
        ok, first = brute_force_equivalent(a, b)
        assert v.equivalent == ok
        if not ok:
            negatives += 1
            assert v.mismatch_cycle == first == len(v.counterexample)
            diffs = replay_counterexample(a, b, v.counterexample)
            assert diffs and min(d.cycle for d in diffs) == v.mismatch_cycle
            assert any(d.cycle == v.mismatch_cycle and d.output == v.mismatch_output for d in diffs)

    hard = random_fsm(random.Random(59), 59, 6, max_trans=4, widths=(4, 1))
    t0 = time.perf_counter()
    same = check_equivalence(hard, renamed_copy(rng, hard))
    elapsed = time.perf_counter() - t0
    mutant = mutate_output(rng, hard)
    diff = check_equivalence(hard, mutant)
    record_property("detail", f"200 pairs agree ({negatives} negative); 59-state check {elapsed * 1000:.0f} ms")
    assert same.equivalent
    if not diff.equivalent:
        diffs = replay_counterexample(hard, mutant, diff.counterexample)
        assert min(d.cycle for d in diffs) == diff.mismatch_cycle


@pytest.mark.acceptance(4, "stimulus plans cover every explicit transition of every persisted problem")
def test_criterion_4_coverage(hermetic, record_property):
    problems = [load_problem(pdir) for _, pdir in iter_problems(hermetic[0])]
    t0 = time.perf_counter()
    plans = [plan(rec.fsm, rec.seed) for rec in problems]
    elapsed = time.perf_counter() - t0
    for rec, p in zip(problems, plans):
        _, taken = coverage(rec.fsm, p.valuations())
        assert taken == set(rec.fsm.edge_list())
        assert coverage(rec.fsm, rec.golden.inputs)[1] == set(rec.fsm.edge_list())
    record_property("detail", f"{len(problems)} problems fully covered; planning took {elapsed:.2f}s")
    assert len(problems) == 3 * PER_TIER
    assert elapsed < 10


def _flip_reset_output(f):
    sd = f.states[f.reset_state]
    states = dict(f.states)
    states[f.reset_state] = StateDef({**sd.outputs, "at_exit": 1 - sd.outputs["at_exit"]}, sd.transitions)
    return type(f)(f.name, f.inputs, dict(f.outputs), states, f.reset_state, f.clock_name, f.reset_name)


@pytest.mark.acceptance(5, "evaluation self-consistency and pass@k estimator")
def test_criterion_5_eval(hermetic, tmp_path, record_property):
    root = hermetic[0]
    good, mixed = tmp_path / "good", tmp_path / "mixed"
    for _, pdir in iter_problems(root):
        rec = load_problem(pdir)
        for base in (good, mixed):
            (base / rec.id).mkdir(parents=True)
        (good / rec.id / "sample_0.yaml").write_text(serialize_fsm_yaml(rec.fsm))
        for j in range(4):
            f = _flip_reset_output(rec.fsm) if j == 1 else rec.fsm
            (mixed / rec.id / f"sample_{j}.yaml").write_text(serialize_fsm_yaml(f))

    out_good, out_mixed = tmp_path / "good.json", tmp_path / "mixed.json"
    assert main(["eval", "--dataset", str(root), "--candidates", str(good), "--pipeline", "yaml", "-o", str(out_good)]) == 0
    main(["eval", "--dataset", str(root), "--candidates", str(mixed), "--pipeline", "yaml", "-o", str(out_mixed)])
    r_good = json.loads(out_good.read_text())
    r_mixed = json.loads(out_mixed.read_text())
    p1 = {t: r_good["tiers"][t]["pass_at"]["1"] for t in r_good["tiers"]}
    m1 = {t: r_mixed["tiers"][t]["pass_at"]["1"] for t in r_mixed["tiers"]}
    m4 = {t: r_mixed["tiers"][t]["pass_at"]["4"] for t in r_mixed["tiers"]}
    exact = pass_at_k(4, 2, 2, exact=True)
    record_property("detail", f"self pass@1 {set(p1.values())}; mutated pass@1 {set(m1.values())} pass@4 {set(m4.values())}; (4,2,2) -> {exact}")
    assert set(p1.values()) == {1.0}
    assert all(v == pytest.approx(0.75) for v in m1.values())
    assert set(m4.values()) == {1.0}
    assert exact == Fraction(5, 6)


@pytest.mark.acceptance(6, "guard round trip on 1000 guards; solve_priority vs enumeration on 1000 states")
def test_criterion_6_guards(record_property):
    rng = random.Random(SEED)
    names = ("a", "b", "c", "d", "e", "f")
    envs = list(valuations(names))
    max_depth = 0
    for _ in range(1000):
        g = random_guard(rng, names, rng.randint(0, 6))
        max_depth = max(max_depth, guard_depth(g))
        text = print_guard(g)
        back = parse_guard(text)
        assert print_guard(back) == text
        assert all(eval_guard(back, v) == eval_guard(g, v) for v in envs)

    checked = shadowed = 0
    for _ in range(1000):
        k = rng.randint(1, 4)
        inputs = names[:k]
        trans = tuple(Transition(random_guard(rng, inputs, rng.randint(0, 3)), "X") for _ in range(rng.randint(1, 4)))
        state = StateDef({}, trans)
        idx = rng.randrange(len(trans))
        expected = None
        for v in valuations(inputs):
            fired = next((i for i, t in enumerate(trans) if eval_guard(t.guard, v)), None)
            if fired == idx:
                expected = v
                break
        assert solve_priority(state, idx, inputs) == expected
        checked += 1
        shadowed += expected is None
    record_property("detail", f"1000 guards (max depth {max_depth}) round-trip; {checked} states agree ({shadowed} shadowed)")


def _simulate(sim_cmd, dut: str, tb: str, top: str) -> str:
    with tempfile.TemporaryDirectory() as tmp:
        Path(tmp, "dut.sv").write_text(dut)
        Path(tmp, "tb.sv").write_text(tb)
        cmd = sim_cmd.replace("{sources}", "dut.sv tb.sv").replace("{top}", top)
        return subprocess.run(cmd, shell=True, cwd=tmp, capture_output=True, text=True, timeout=600).stdout


def _mutant(rng, rec):
    """A behavioural mutant and the (cycle, signal) where fsm-sim says it first diverges."""
    f = rec.fsm
    for _ in range(100):
        m = mutate_output(rng, f) if rng.random() < 0.5 else mutate_transition(rng, f)
        got = run(m, rec.golden.inputs)
        for t, (x, y) in enumerate(zip(got.rows, rec.golden.rows)):
            bad = [o for o in f.outputs if x.outputs[o] != y.outputs[o]]
            if bad:
                return m, t, bad[0]
    raise AssertionError("no divergent mutant found")


@pytest.mark.slow
@pytest.mark.acceptance(7, "emitted RTL passes its testbench under an external simulator; mutants fail at the predicted cycle")
def test_criterion_7_rtl_fidelity(hermetic, sim_cmd, record_property):
    rng = random.Random(SEED)
    problems = [load_problem(pdir) for _, pdir in iter_problems(hermetic[0])]
    chosen = [problems[i] for i in range(0, len(problems), len(problems) // 20)][:20]
    passes = fails = 0
    for rec in chosen:
        tb = emit_testbench(rec.fsm, rec.golden)
        out = _simulate(sim_cmd, emit_rtl(rec.fsm), tb, tb_top(rec.fsm))
        assert PASS_SENTINEL in out.split(), (rec.id, out[-500:])
        passes += 1
        m, cycle, signal = _mutant(rng, rec)
        out = _simulate(sim_cmd, emit_rtl(m), tb, tb_top(rec.fsm))
        assert f"{FAIL_SENTINEL} cycle={cycle} signal={signal} " in out, (rec.id, cycle, signal, out[-500:])
        assert PASS_SENTINEL not in out.split()
        fails += 1
    record_property("detail", f"{passes} references passed, {fails} mutants failed at the predicted cycle")
    assert passes == fails == 20


@pytest.mark.acceptance(8, "headline model accuracies and filter rates are not reproducible; criteria 1-7 stand in")
def test_criterion_8_replacements(record_property):
    statuses = {n: acceptance_status(n) for n in range(1, 8)}
    record_property("detail", f"replacement criteria: {statuses}")
    assert all(statuses[n] == "PASS" for n in range(1, 7))
    assert statuses[7] in ("PASS", "SKIP")
