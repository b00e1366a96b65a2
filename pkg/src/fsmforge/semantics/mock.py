"""Deterministic stand-in for the LLM semantic passes.

Naming: the reset state is ``INIT``; member j of phase p (1-based) is
``P<p>_S<j>``. Inputs are ``go`` plus ``sel_0..sel_{m-1}`` where m is the
largest ceil(log2(out-degree)). A state with one successor moves on ``go``;
a state with k >= 2 successors takes edge j on the selector minterm that
encodes j. Outputs are ``phase_id`` (0 for INIT) and ``at_exit``.
"""

from __future__ import annotations

import re

from fsmforge.core import (
    AbstractGraph,
    Interface,
    SemanticFsm,
    StateDef,
    StateMapping,
    Transition,
    validate_fsm,
)
from fsmforge.errors import FsmError, GuardSyntaxError
from fsmforge.guards import And, Not, Var, parse_guard, print_guard
from fsmforge.rng import Xoshiro256
from fsmforge.semantics.spec_doc import SpecDocument


class ReconstructionError(FsmError):
    """A specification could not be turned back into a machine."""


_SCENARIOS = [
    ("dma", "a DMA engine that walks descriptor rings"),
    ("spi", "a SPI flash controller issuing command, address and data beats"),
    ("uart", "a UART transmitter framing bytes with start and stop bits"),
    ("cache", "a cache refill unit coordinating tag lookup and line fills"),
    ("pcie", "a link-training sequencer stepping through handshake stages"),
    ("i2c", "an I2C master arbitrating for the bus and clocking out bytes"),
    ("ddr", "a memory controller scheduling activate, read and precharge"),
    ("crypto", "a block-cipher core sequencing key expansion and rounds"),
]


def _bits(k: int) -> int:
    return (k - 1).bit_length() if k > 1 else 0


def _minterm(j: int, nbits: int):
    lits = []
    for b in range(nbits):
        v = Var(f"sel_{b}")
        lits.append(v if (j >> b) & 1 else Not(v))
    return lits[0] if len(lits) == 1 else And(tuple(lits))


def mock_assign_semantics(g: AbstractGraph, seed: int) -> tuple[SemanticFsm, StateMapping, str]:
    names: dict[int, str] = {g.reset_state: "INIT"}
    phase_of: dict[int, int] = {g.reset_state: 0}
    exits = set()
    for p, ph in enumerate(g.phases, start=1):
        for j, m in enumerate(ph.members):
            names[m] = f"P{p}_S{j}"
            phase_of[m] = p
        exits.add(ph.exit)

    succ = {s: g.successors(s) for s in g.states}
    m = max((_bits(len(v)) for v in succ.values()), default=0)
    inputs = ("go",) + tuple(f"sel_{b}" for b in range(m))
    phase_width = max(1, len(g.phases).bit_length())
    outputs = {"phase_id": phase_width, "at_exit": 1}

    order = [g.reset_state] + [s for ph in g.phases for s in ph.members]
    states = {}
    for s in order:
        targets = succ[s]
        k = len(targets)
        if k == 1:
            trans = (Transition(Var("go"), names[targets[0]]),)
        else:
            nb = _bits(k)
            trans = tuple(Transition(_minterm(j, nb), names[t]) for j, t in enumerate(targets))
        states[names[s]] = StateDef(
            {"phase_id": phase_of[s], "at_exit": int(s in exits)}, trans
        )

    key, blurb = _SCENARIOS[Xoshiro256(seed).below(len(_SCENARIOS))]
    fsm = SemanticFsm(
        name=f"{key}_ctrl",
        inputs=inputs,
        outputs=outputs,
        states=states,
        reset_state="INIT",
    )
    story = (
        f"The controller models {blurb}. After reset it waits in INIT until go is "
        f"raised, then advances through {len(g.phases)} phases. phase_id reports the "
        f"active phase and at_exit flags the last state of each phase; the sel lines "
        f"choose among branches where a state has several successors."
    )
    return fsm, StateMapping(dict(sorted(names.items()))), story


# --------------------------------------------------------------------------
# Forward map: machine -> specification


def _width_text(w: int) -> str:
    return "1 bit" if w == 1 else f"{w} bits"


def mock_spec_from_fsm(f: SemanticFsm) -> SpecDocument:
    io = [
        f"Module `{f.name}` is clocked on the rising edge of `{f.clock_name}`. "
        f"Reset `{f.reset_name}` is synchronous and active high.",
    ]
    io += [f"- `{i}`: input, 1 bit" for i in f.inputs]
    io += [f"- `{o}`: output, {_width_text(w)}" for o, w in f.outputs.items()]

    reqs = [f"On reset, the machine enters state {f.reset_state}."]
    for s, sd in f.states.items():
        drives = ", ".join(f"{o} = {sd.outputs[o]}" for o in f.outputs) or "no outputs"
        clauses = [f"When in state {s}, the machine drives {drives}"]
        for i, t in enumerate(sd.transitions):
            kw = "if" if i == 0 else "else if"
            clauses.append(f"{kw} {print_guard(t.guard)}, the machine moves to {t.next}")
        clauses.append("otherwise it holds" if sd.transitions else "it always holds")
        reqs.append("; ".join(clauses) + ".")
    return SpecDocument("\n".join(io), tuple(reqs))


# --------------------------------------------------------------------------
# Reverse map: specification -> machine

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_HEADER_RE = re.compile(
    rf"Module `({_IDENT})` is clocked on the rising edge of `({_IDENT})`\. "
    rf"Reset `({_IDENT})` is synchronous and active high\."
)
_SIGNAL_RE = re.compile(rf"- `({_IDENT})`: (input|output), (\d+) bits?\Z")
_RESET_RE = re.compile(rf"On reset, the machine enters state ({_IDENT})\.\Z")
_STATE_RE = re.compile(rf"When in state ({_IDENT}), the machine drives (.+)\Z")
_DRIVE_RE = re.compile(rf"({_IDENT}) = (\d+)\Z")
_TRANS_RE = re.compile(rf"(?:else )?if (.+), the machine moves to ({_IDENT})\Z")


def mock_fsm_from_spec(spec: SpecDocument, mapping: StateMapping, iface: Interface) -> SemanticFsm:
    lines = [ln.strip() for ln in spec.io_section.splitlines() if ln.strip()]
    if not lines:
        raise ReconstructionError("empty I/O section")
    m = _HEADER_RE.fullmatch(lines[0])
    if not m:
        raise ReconstructionError(f"unrecognized I/O header: {lines[0]!r}")
    name, clock, reset = m.groups()
    inputs, outputs = [], {}
    for ln in lines[1:]:
        sm = _SIGNAL_RE.match(ln)
        if not sm:
            raise ReconstructionError(f"unrecognized signal line: {ln!r}")
        sig, kind, width = sm.group(1), sm.group(2), int(sm.group(3))
        if kind == "input":
            if width != 1:
                raise ReconstructionError(f"input {sig} must be 1 bit")
            inputs.append(sig)
        else:
            outputs[sig] = width
    got = Interface(tuple(inputs), tuple(outputs.items()))
    bad = got.diff(iface)
    if bad or tuple(inputs) != tuple(iface.inputs):
        raise ReconstructionError(f"I/O section disagrees with the interface on {bad or 'input order'}")

    if not spec.requirements:
        raise ReconstructionError("empty requirements section")
    rm = _RESET_RE.match(spec.requirements[0])
    if not rm:
        raise ReconstructionError("first requirement must state the reset state")
    reset_state = rm.group(1)

    states: dict[str, StateDef] = {}
    for para in spec.requirements[1:]:
        if not para.endswith("."):
            raise ReconstructionError(f"requirement not terminated: {para!r}")
        clauses = para[:-1].split("; ")
        head = _STATE_RE.match(clauses[0])
        if not head:
            raise ReconstructionError(f"unrecognized requirement: {para!r}")
        sname, drives = head.groups()
        if sname in states:
            raise ReconstructionError(f"state {sname} described twice")
        outs = {}
        if drives != "no outputs":
            for item in drives.split(", "):
                dm = _DRIVE_RE.match(item)
                if not dm:
                    raise ReconstructionError(f"unrecognized output assignment {item!r}")
                outs[dm.group(1)] = int(dm.group(2))
        tail = clauses[-1]
        body = clauses[1:-1]
        if tail not in ("otherwise it holds", "it always holds") or (tail == "it always holds") != (not body):
            raise ReconstructionError(f"bad closing clause in {para!r}")
        trans = []
        for i, c in enumerate(body):
            tm = _TRANS_RE.match(c)
            if not tm or (i == 0) != c.startswith("if "):
                raise ReconstructionError(f"unrecognized transition clause {c!r}")
            try:
                guard = parse_guard(tm.group(1))
            except GuardSyntaxError as e:
                raise ReconstructionError(str(e)) from None
            trans.append(Transition(guard, tm.group(2)))
        states[sname] = StateDef(outs, tuple(trans))

    expected = set(mapping.pairs.values())
    if set(states) != expected:
        raise ReconstructionError(
            f"described states differ from the mapping: missing {sorted(expected - set(states))}, "
            f"unexpected {sorted(set(states) - expected)}"
        )
    fsm = SemanticFsm(
        name=name,
        inputs=tuple(inputs),
        outputs=outputs,
        states=states,
        reset_state=reset_state,
        clock_name=clock,
        reset_name=reset,
    )
    report = validate_fsm(fsm)
    if report:
        raise ReconstructionError("; ".join(str(v) for v in report))
    return fsm


class MockProvider:
    name = "mock"

    def assign_semantics(self, graph, seed, provenance=None):
        return mock_assign_semantics(graph, seed)

    def spec_from_fsm(self, fsm, provenance=None):
        return mock_spec_from_fsm(fsm)

    def fsm_from_spec(self, spec, mapping, iface, provenance=None):
        return mock_fsm_from_spec(spec, mapping, iface)
