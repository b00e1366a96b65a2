"""Score candidate solutions against a persisted dataset.

Pipeline P1 compiles a candidate SystemVerilog module with the reference
testbench under an external simulator; P2 parses a candidate YAML machine and
replays the golden inputs through the native interpreter.
"""

from __future__ import annotations

import enum
import logging
import os
import re
import shlex
import shutil
import subprocess
import tempfile
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from fsmforge.config import ConfigError
from fsmforge.core import Tier
from fsmforge.emit import FAIL_SENTINEL, PASS_SENTINEL, emit_testbench, testbench_top
from fsmforge.errors import FsmError
from fsmforge.pipeline import ProblemRecord, iter_problems, load_problem
from fsmforge.sim import run
from fsmforge.yaml_io import FsmYamlError, parse_fsm_yaml

log = logging.getLogger(__name__)

PASS_AT_KS = (1, 2, 4, 8, 16)
DEFAULT_TIMEOUT = 60.0


class Outcome(str, enum.Enum):
    PASS = "pass"
    COMPILE_FAIL = "compile_fail"
    PARSE_FAIL = "parse_fail"
    MISMATCH = "mismatch"
    TOOL_ERROR = "tool_error"


class Pipeline(str, enum.Enum):
    P1 = "rtl"
    P2 = "yaml"

    @property
    def suffix(self) -> str:
        return ".sv" if self is Pipeline.P1 else ".yaml"


@dataclass(frozen=True)
class Verdict:
    problem_id: str
    outcome: Outcome
    pipeline: Pipeline
    cycle: int | None = None
    signal: str | None = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.outcome is Outcome.PASS

    def to_json_obj(self) -> dict:
        d = {"outcome": self.outcome.value}
        if self.outcome is Outcome.MISMATCH:
            d.update(cycle=self.cycle, signal=self.signal)
        if self.detail:
            d["detail"] = self.detail
        return d


def eval_yaml_candidate(rec: ProblemRecord, candidate_yaml: str) -> Verdict:
    def verdict(outcome, **kw):
        return Verdict(rec.id, outcome, Pipeline.P2, **kw)

    try:
        cand = parse_fsm_yaml(candidate_yaml)
    except (FsmYamlError, FsmError) as e:
        return verdict(Outcome.PARSE_FAIL, detail=str(e))
    diff = cand.interface().diff(rec.fsm.interface())
    if diff:
        return verdict(Outcome.PARSE_FAIL, detail=f"interface mismatch on {diff}")

    trace = run(cand, rec.golden.inputs)
    for t, (got, want) in enumerate(zip(trace.rows, rec.golden.rows)):
        for o in rec.golden.output_names:
            if got.outputs[o] != want.outputs[o]:
                return verdict(
                    Outcome.MISMATCH,
                    cycle=t,
                    signal=o,
                    detail=f"expect={want.outputs[o]} got={got.outputs[o]}",
                )
    return verdict(Outcome.PASS)


_FAIL_RE = re.compile(
    rf"{FAIL_SENTINEL} cycle=(\d+) signal=([A-Za-z_][A-Za-z0-9_]*) expect=(\S+) got=(\S+)"
)


def check_sim_cmd(sim_cmd: str) -> None:
    """Raise ConfigError unless the template's program is on PATH."""
    try:
        argv = shlex.split(sim_cmd)
    except ValueError as e:
        raise ConfigError(f"unparseable sim command: {e}") from None
    if not argv or shutil.which(argv[0]) is None:
        raise ConfigError(f"simulator {argv[0] if argv else sim_cmd!r} not found on PATH")


def eval_rtl_candidate(
    rec: ProblemRecord,
    candidate_sv: str | os.PathLike,
    sim_cmd: str,
    timeout: float = DEFAULT_TIMEOUT,
) -> Verdict:
    """Run a candidate module (path to a .sv file) against the reference testbench.

    ``sim_cmd`` is a shell template; ``{sources}`` expands to the candidate and
    testbench file names and ``{top}`` to the testbench module. The command runs
    inside a scratch directory holding both files.
    """
    check_sim_cmd(sim_cmd)

    def verdict(outcome, **kw):
        return Verdict(rec.id, outcome, Pipeline.P1, **kw)

    source = Path(candidate_sv).read_text()
    with tempfile.TemporaryDirectory(prefix="fsmforge-") as tmp:
        Path(tmp, "candidate.sv").write_text(source)
        Path(tmp, "tb.sv").write_text(emit_testbench(rec.fsm, rec.golden))
        cmd = sim_cmd.replace("{sources}", "candidate.sv tb.sv").replace("{top}", testbench_top(rec.fsm))
        try:
            proc = subprocess.run(
                cmd, shell=True, cwd=tmp, capture_output=True, text=True, timeout=timeout
            )
        except subprocess.TimeoutExpired:
            return verdict(Outcome.TOOL_ERROR, detail=f"timed out after {timeout:g} s")

    m = _FAIL_RE.search(proc.stdout)
    if m:
        return verdict(
            Outcome.MISMATCH,
            cycle=int(m.group(1)),
            signal=m.group(2),
            detail=f"expect={m.group(3)} got={m.group(4)}",
        )
    if PASS_SENTINEL in proc.stdout.split():
        return verdict(Outcome.PASS)
    if proc.returncode != 0:
        tail = (proc.stderr or proc.stdout).strip().splitlines()[-5:]
        return verdict(Outcome.COMPILE_FAIL, detail="\n".join(tail))
    return verdict(Outcome.TOOL_ERROR, detail="simulation printed no result sentinel")


def pass_at_k(n: int, c: int, k: int, exact: bool = False) -> float | Fraction:
    """Unbiased pass@k: 1 - C(n-c, k) / C(n, k), as a running product."""
    if not (0 <= c <= n and 1 <= k <= n):
        raise ValueError(f"pass_at_k needs 0 <= c <= n and 1 <= k <= n, got n={n} c={c} k={k}")
    if n - c < k:
        p = Fraction(1)
    else:
        miss = Fraction(1)
        for i in range(n - c + 1, n + 1):
            miss *= 1 - Fraction(k, i)
        p = 1 - miss
    return p if exact else float(p)


def _samples(cdir: Path, suffix: str) -> list[Path]:
    found = []
    for f in cdir.glob(f"sample_*{suffix}"):
        idx = f.name[len("sample_") : -len(suffix)]
        if idx.isdigit():
            found.append((int(idx), f))
    return [f for _, f in sorted(found)]


def evaluate_run(
    dataset: str | os.PathLike,
    candidates: str | os.PathLike,
    pipeline: Pipeline | str,
    sim_cmd: str | None = None,
    jobs: int | None = None,
    sim_jobs: int = 1,
    timeout: float = DEFAULT_TIMEOUT,
) -> dict:
    pipeline = Pipeline(pipeline)
    if pipeline is Pipeline.P1:
        if not sim_cmd:
            raise ConfigError("the rtl pipeline needs a simulator command template")
        check_sim_cmd(sim_cmd)
    cand_root = Path(candidates)
    problems = list(iter_problems(dataset))
    known = {entry["id"] for entry, _ in problems}
    unknown = sorted(
        d.name for d in cand_root.iterdir() if d.is_dir() and d.name not in known
    ) if cand_root.exists() else []
    for name in unknown:
        log.warning("candidates for unknown problem %s ignored", name)

    sim_gate = threading.BoundedSemaphore(max(1, sim_jobs))

    def score(rec: ProblemRecord, path: Path) -> Verdict:
        if pipeline is Pipeline.P2:
            return eval_yaml_candidate(rec, path.read_text())
        with sim_gate:
            return eval_rtl_candidate(rec, path, sim_cmd, timeout)

    work = []
    for entry, pdir in problems:
        files = _samples(cand_root / entry["id"], pipeline.suffix)
        work.append((entry, load_problem(pdir) if files else None, files))

    with ThreadPoolExecutor(max_workers=max(1, jobs or os.cpu_count() or 1)) as pool:
        futures = [[pool.submit(score, rec, f) for f in files] for _, rec, files in work]
        verdicts = [[fut.result() for fut in row] for row in futures]

    per_problem = []
    by_tier: dict[str, list[tuple[int, int]]] = {t.value: [] for t in Tier}
    missing_by_tier = {t.value: 0 for t in Tier}
    for (entry, _, files), vs in zip(work, verdicts):
        item = {"id": entry["id"], "tier": entry["tier"], "samples": [v.to_json_obj() for v in vs]}
        if not vs:
            item["missing"] = True
            missing_by_tier[entry["tier"]] += 1
        else:
            by_tier[entry["tier"]].append((len(vs), sum(v.passed for v in vs)))
        per_problem.append(item)

    tiers = {}
    for t in Tier:
        counts = by_tier[t.value]
        pass_at: dict[str, float | None] = {}
        if not counts:
            pass_at["1"] = None
        else:
            n_min = min(n for n, _ in counts)
            for k in PASS_AT_KS:
                if k <= n_min:
                    pass_at[str(k)] = sum(pass_at_k(n, c, k) for n, c in counts) / len(counts)
        tiers[t.value] = {
            "evaluated": len(counts),
            "missing": missing_by_tier[t.value],
            "pass_at": pass_at,
        }
    evaluated = sum(len(v) for v in by_tier.values())
    return {
        "pipeline": pipeline.value,
        "totals": {
            "evaluated": evaluated,
            "missing": sum(missing_by_tier.values()),
            "samples": sum(len(vs) for vs in verdicts),
            "passed": sum(v.passed for vs in verdicts for v in vs),
        },
        "tiers": tiers,
        "problems": per_problem,
        "unknown_candidates": unknown,
    }
