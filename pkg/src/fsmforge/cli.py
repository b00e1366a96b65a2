"""Command-line entry point: ``fsmforge <subcommand> ...``.

Exit codes: 0 success, 1 negative result (not equivalent, not isomorphic,
failing samples), 2 partial curation, 3 interface or configuration error,
64 usage error (bad flags, unreadable or malformed input files).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from fsmforge.config import ConfigError, load_config
from fsmforge.core import AbstractGraph, StateMapping, Tier
from fsmforge.emit import Encoding, emit_miter, emit_rtl, emit_testbench
from fsmforge.errors import FsmError
from fsmforge.evaluate import evaluate_run
from fsmforge.pipeline import CurationIncomplete, CurationReport, curate, dataset_stats, format_stats
from fsmforge.semantics import LlmProvider, MockProvider
from fsmforge.sim import Trace, read_input_csv, run
from fsmforge.verify import MappingError, check_equivalence, check_isomorphism
from fsmforge.yaml_io import FsmYamlError, parse_fsm_yaml

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_PARTIAL = 2
EXIT_CONFIG = 3
EXIT_USAGE = 64

log = logging.getLogger("fsmforge")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _load_fsm(path: str):
    try:
        return parse_fsm_yaml(_read(path))
    except FsmYamlError as e:
        raise UsageError(f"{path}: {e}") from None


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _tiers(arg: str) -> list[Tier]:
    if arg == "all":
        return list(Tier)
    try:
        return [Tier.parse(arg)]
    except ValueError as e:
        raise UsageError(str(e)) from None


def cmd_gen(args) -> int:
    cfg = load_config(args.config)
    kind = args.provider or cfg.provider
    if kind == "llm":
        if cfg.llm is None:
            raise ConfigError("--provider llm needs a [provider] section in --config")
        provider = LlmProvider(cfg.llm)
    else:
        provider = MockProvider()
    jobs = args.jobs or cfg.jobs
    total = CurationReport()
    partial = False
    for tier in _tiers(args.tier):
        try:
            report = curate(
                tier,
                args.count,
                args.seed,
                provider,
                args.out,
                jobs=jobs,
                attempt_factor=cfg.attempt_factor,
                tail_factor=cfg.tail_factor,
            )
        except CurationIncomplete as e:
            report = e.report
            partial = True
            log.error("%s: %s", tier.value, e)
        total.merge(report)
    print(json.dumps(total.to_json_obj(), indent=2))
    return EXIT_PARTIAL if partial else EXIT_OK


def cmd_stats(args) -> int:
    rows = dataset_stats(args.dir)
    print(json.dumps(rows, indent=2) if args.json else format_stats(rows))
    return EXIT_OK


def cmd_emit_rtl(args) -> int:
    _write(emit_rtl(_load_fsm(args.fsm), Encoding(args.encoding)), args.output)
    return EXIT_OK


def cmd_emit_tb(args) -> int:
    f = _load_fsm(args.fsm)
    golden = Trace.from_csv(_read(args.golden), f.inputs, list(f.outputs))
    _write(emit_testbench(f, golden), args.output)
    return EXIT_OK


def cmd_emit_miter(args) -> int:
    _write(emit_miter(_load_fsm(args.a), _load_fsm(args.b), Encoding(args.encoding)), args.output)
    return EXIT_OK


def cmd_sim(args) -> int:
    f = _load_fsm(args.fsm)
    _write(run(f, read_input_csv(_read(args.inputs), f.inputs)).to_csv(), args.output)
    return EXIT_OK


def cmd_equiv(args) -> int:
    a = _load_fsm(args.a)
    verdict = check_equivalence(a, _load_fsm(args.b))
    if args.json:
        print(verdict.to_json())
    elif verdict.equivalent:
        print("equivalent")
    else:
        seq = " ".join(
            "".join(str(v[i]) for i in a.inputs) for v in verdict.counterexample
        )
        print(
            f"not equivalent: output {verdict.mismatch_output} differs at cycle "
            f"{verdict.mismatch_cycle} (inputs: {seq or '<reset>'})"
        )
    return EXIT_OK if verdict.equivalent else EXIT_NEGATIVE


def cmd_iso(args) -> int:
    try:
        graph = AbstractGraph.from_json(_read(args.graph))
        mapping = StateMapping.from_json_obj(json.loads(_read(args.mapping)))
    except (ValueError, KeyError, TypeError) as e:
        raise UsageError(f"malformed graph or mapping: {e}") from None
    try:
        result = check_isomorphism(graph, _load_fsm(args.fsm), mapping)
    except MappingError as e:
        print(f"not isomorphic: {e}")
        return EXIT_NEGATIVE
    print("isomorphic" if result.ok else f"not isomorphic: {result.violation}")
    return EXIT_OK if result.ok else EXIT_NEGATIVE


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    report = evaluate_run(
        args.dataset,
        args.candidates,
        args.pipeline,
        sim_cmd=args.sim_cmd or cfg.sim_cmd,
        jobs=args.jobs or cfg.jobs,
        sim_jobs=args.sim_jobs or cfg.sim_jobs,
        timeout=args.timeout or cfg.sim_timeout,
    )
    _write(json.dumps(report, indent=2) + "\n", args.output)
    t = report["totals"]
    return EXIT_OK if t["passed"] == t["samples"] else EXIT_NEGATIVE


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fsmforge", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="curate a verified dataset")
    g.add_argument("--tier", required=True, help="low, medium, high or all")
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--provider", choices=("mock", "llm"))
    g.add_argument("--out", required=True)
    g.add_argument("--jobs", type=int)
    g.add_argument("--config")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("stats", help="per-tier dataset table")
    s.add_argument("dir")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_stats)

    enc = ("onehot", "binary")
    e = sub.add_parser("emit-rtl", help="reference SystemVerilog module")
    e.add_argument("fsm")
    e.add_argument("--encoding", choices=enc, default="onehot")
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_emit_rtl)

    e = sub.add_parser("emit-tb", help="self-checking testbench")
    e.add_argument("fsm")
    e.add_argument("--golden", required=True)
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_emit_tb)

    e = sub.add_parser("emit-miter", help="miter of two machines")
    e.add_argument("a")
    e.add_argument("b")
    e.add_argument("--encoding", choices=enc, default="onehot")
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_emit_miter)

    e = sub.add_parser("sim", help="simulate a stimulus file")
    e.add_argument("fsm")
    e.add_argument("--inputs", required=True)
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_sim)

    e = sub.add_parser("equiv", help="behavioral equivalence of two machines")
    e.add_argument("a")
    e.add_argument("b")
    e.add_argument("--json", action="store_true")
    e.set_defaults(func=cmd_equiv)

    e = sub.add_parser("iso", help="check a machine against its topology")
    e.add_argument("graph")
    e.add_argument("fsm")
    e.add_argument("mapping")
    e.set_defaults(func=cmd_iso)

    e = sub.add_parser("eval", help="score candidate solutions")
    e.add_argument("--dataset", required=True)
    e.add_argument("--candidates", required=True)
    e.add_argument("--pipeline", choices=("rtl", "yaml"), required=True)
    e.add_argument("--sim-cmd")
    e.add_argument("--timeout", type=float)
    e.add_argument("--jobs", type=int)
    e.add_argument("--sim-jobs", type=int)
    e.add_argument("--config")
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except UsageError as e:
        print(f"fsmforge: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FsmError as e:
        print(f"fsmforge: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
