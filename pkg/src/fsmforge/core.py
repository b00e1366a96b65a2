"""Shared domain types: abstract graphs, semantic Moore machines, tiers."""

from __future__ import annotations

import enum
import json
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

from fsmforge.errors import (  # noqa: F401  re-exported
    CapacityError,
    FsmError,
    InterfaceError,
    ValidationError,
    check_capacity,
)
from fsmforge.guards import Guard, variables

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


# --------------------------------------------------------------------------
# Tiers


class Tier(enum.Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"

    @property
    def bounds(self) -> tuple[int, int]:
        """Inclusive (min, max) state counts."""
        return _TIER_BOUNDS[self]

    @classmethod
    def parse(cls, text: str) -> Tier:
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown tier {text!r}; expected low, medium or high") from None


_TIER_BOUNDS = {
    Tier.LOW: (4, 13),
    Tier.MEDIUM: (14, 26),
    Tier.HIGH: (27, 59),
}


def tier_of(n_states: int) -> Tier:
    """Map a total state count onto its tier.

    Boundaries are left-closed: ``[4,14)``, ``[14,27)``, ``[27,59]``.
    """
    if not 4 <= n_states <= 59:
        raise ValueError(f"state count {n_states} outside valid interval [4, 59]")
    if n_states < 14:
        return Tier.LOW
    if n_states < 27:
        return Tier.MEDIUM
    return Tier.HIGH


# --------------------------------------------------------------------------
# Abstract topology


@dataclass(frozen=True)
class Phase:
    entry: int
    exit: int
    members: tuple[int, ...]

    def __post_init__(self):
        if not self.members:
            raise ValueError("phase has no members")
        if self.members[0] != self.entry or self.members[-1] != self.exit:
            raise ValueError("phase members must start at entry and end at exit")
        if len(self.members) > 1 and self.entry == self.exit:
            raise ValueError("multi-member phase needs distinct entry and exit")


@dataclass(frozen=True)
class TopoConfig:
    num_phases: int
    states_per_phase: tuple[int, int]
    p_forward_branch: float = 0.0
    p_back_edge: float = 0.0
    p_self_loop: float = 0.0
    max_out_degree: int = 4
    num_inter_phase_jumps: int = 0
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.states_per_phase
        if self.num_phases < 1:
            raise ValueError("num_phases must be >= 1")
        if not 1 <= lo <= hi:
            raise ValueError(f"states_per_phase range {self.states_per_phase} is empty or < 1")
        for name in ("p_forward_branch", "p_back_edge", "p_self_loop"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name}={p} outside [0, 1]")
        if self.max_out_degree < 1:
            raise ValueError("max_out_degree must be >= 1")
        if self.num_inter_phase_jumps < 0:
            raise ValueError("num_inter_phase_jumps must be >= 0")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class AbstractGraph:
    states: tuple[int, ...]
    phases: tuple[Phase, ...]
    edges: frozenset[tuple[int, int]]
    reset_state: int

    def successors(self, u: int) -> list[int]:
        return sorted(v for (a, v) in self.edges if a == u)

    def out_degree(self, u: int) -> int:
        return sum(1 for (a, _) in self.edges if a == u)

    def reachable(self) -> set[int]:
        adj: dict[int, list[int]] = {s: [] for s in self.states}
        for u, v in self.edges:
            adj[u].append(v)
        seen = {self.reset_state}
        queue = deque([self.reset_state])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return seen

    def problems(self) -> list[str]:
        """Invariant violations, empty when the graph is well formed."""
        out = []
        declared = set(self.states)
        if len(declared) != len(self.states):
            out.append("duplicate state ids")
        for u, v in sorted(self.edges):
            if u not in declared or v not in declared:
                out.append(f"edge ({u},{v}) has undeclared endpoint")
        owner: dict[int, int] = {}
        for i, ph in enumerate(self.phases):
            for m in ph.members:
                if m in owner:
                    out.append(f"state {m} in phases {owner[m]} and {i}")
                owner[m] = i
        if self.reset_state in owner:
            out.append("reset state belongs to a phase")
        if self.reset_state not in declared:
            out.append("reset state undeclared")
        elif not out:
            missing = declared - self.reachable()
            if missing:
                out.append(f"unreachable states {sorted(missing)}")
        return out

    def to_json(self) -> str:
        doc = {
            "states": list(self.states),
            "reset": self.reset_state,
            "phases": [
                {"entry": p.entry, "exit": p.exit, "members": list(p.members)}
                for p in self.phases
            ],
            "edges": [list(e) for e in sorted(self.edges)],
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> AbstractGraph:
        doc = json.loads(text)
        return cls(
            states=tuple(doc["states"]),
            phases=tuple(
                Phase(p["entry"], p["exit"], tuple(p["members"])) for p in doc["phases"]
            ),
            edges=frozenset((int(u), int(v)) for u, v in doc["edges"]),
            reset_state=doc["reset"],
        )


# --------------------------------------------------------------------------
# Semantic machine


@dataclass(frozen=True)
class Transition:
    guard: Guard
    next: str


@dataclass(frozen=True)
class StateDef:
    outputs: Mapping[str, int]
    transitions: tuple[Transition, ...] = ()


@dataclass(frozen=True)
class SemanticFsm:
    """Moore machine with per-state outputs and priority-ordered transitions.

    ``outputs`` and ``states`` are insertion-ordered dicts; their order is the
    declaration order used by every emitter.
    """

    name: str
    inputs: tuple[str, ...]
    outputs: Mapping[str, int]
    states: Mapping[str, StateDef]
    reset_state: str
    clock_name: str = "clk"
    reset_name: str = "rst"

    @property
    def state_names(self) -> list[str]:
        return list(self.states)

    def explicit_edges(self) -> set[tuple[str, str]]:
        """Distinct (source, target) pairs named by some transition."""
        return {
            (s, t.next) for s, sd in self.states.items() for t in sd.transitions
        }

    def edge_list(self) -> list[tuple[str, int]]:
        """Every explicit transition as (state, priority index)."""
        return [
            (s, i) for s, sd in self.states.items() for i in range(len(sd.transitions))
        ]

    def interface(self) -> Interface:
        return Interface(tuple(self.inputs), tuple(self.outputs.items()))

    def renamed(self, mapping: Mapping[str, str], name: str | None = None) -> SemanticFsm:
        """Copy with states renamed through ``mapping`` (missing keys kept)."""
        def r(s):
            return mapping.get(s, s)

        states = {
            r(s): StateDef(
                dict(sd.outputs),
                tuple(Transition(t.guard, r(t.next)) for t in sd.transitions),
            )
            for s, sd in self.states.items()
        }
        return SemanticFsm(
            name=name or self.name,
            inputs=self.inputs,
            outputs=dict(self.outputs),
            states=states,
            reset_state=r(self.reset_state),
            clock_name=self.clock_name,
            reset_name=self.reset_name,
        )


@dataclass(frozen=True)
class Interface:
    """I/O signature: ordered 1-bit inputs and (name, width) outputs."""

    inputs: tuple[str, ...]
    outputs: tuple[tuple[str, int], ...]

    def diff(self, other: Interface) -> list[str]:
        """Signals that are not declared identically on both sides."""
        bad = set(self.inputs) ^ set(other.inputs)
        mine, theirs = dict(self.outputs), dict(other.outputs)
        for name in set(mine) | set(theirs):
            if mine.get(name) != theirs.get(name):
                bad.add(name)
        return sorted(bad)


def require_same_interface(a: SemanticFsm, b: SemanticFsm) -> None:
    bad = a.interface().diff(b.interface())
    if bad:
        raise InterfaceError(
            f"I/O interfaces differ on signals: {', '.join(bad)}", bad
        )


@dataclass(frozen=True)
class StateMapping:
    """Bijection from abstract state id to semantic state name."""

    pairs: Mapping[int, str] = field(default_factory=dict)

    def __getitem__(self, u: int) -> str:
        return self.pairs[u]

    def inverse(self) -> dict[str, int]:
        return {v: k for k, v in self.pairs.items()}

    def to_json_obj(self) -> dict[str, str]:
        return {str(k): v for k, v in sorted(self.pairs.items())}

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> StateMapping:
        return cls({int(k): str(v) for k, v in obj.items()})


# --------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    code: str
    name: str
    detail: str = ""

    def __str__(self):
        return f"{self.code}({self.name}){': ' + self.detail if self.detail else ''}"


def validate_fsm(f: SemanticFsm) -> list[Violation]:
    """All invariant violations of ``f``; empty list means valid."""
    out: list[Violation] = []

    def bad(code, name, detail=""):
        out.append(Violation(code, str(name), detail))

    for label, ident in (("module", f.name), ("clock", f.clock_name), ("reset", f.reset_name)):
        if not isinstance(ident, str) or not IDENT_RE.match(ident):
            bad("BAD_IDENTIFIER", ident, f"{label} name")
    if f.clock_name == f.reset_name:
        bad("NAME_CLASH", f.clock_name, "clock and reset share a name")

    seen: set[str] = set()
    for sig in f.inputs:
        if not isinstance(sig, str) or not IDENT_RE.match(sig):
            bad("BAD_IDENTIFIER", sig, "input")
        if sig in seen:
            bad("DUPLICATE_NAME", sig, "input declared twice")
        seen.add(sig)
    for sig, width in f.outputs.items():
        if not isinstance(sig, str) or not IDENT_RE.match(sig):
            bad("BAD_IDENTIFIER", sig, "output")
        if sig in seen:
            bad("NAME_CLASH", sig, "output shares a name with an input")
        if not isinstance(width, int) or isinstance(width, bool) or width < 1:
            bad("BAD_WIDTH", sig, f"width {width!r}")
    for sig in (f.clock_name, f.reset_name):
        if sig in seen or sig in f.outputs:
            bad("NAME_CLASH", sig, "signal reuses the clock/reset name")

    if not f.states:
        bad("NO_STATES", f.name)
    if f.reset_state not in f.states:
        bad("UNDECLARED_RESET_STATE", f.reset_state)

    inputs = set(f.inputs)
    for s, sd in f.states.items():
        if not isinstance(s, str) or not IDENT_RE.match(s):
            bad("BAD_IDENTIFIER", s, "state")
        for o, width in f.outputs.items():
            if o not in sd.outputs:
                bad("MISSING_OUTPUT", o, f"state {s}")
                continue
            v = sd.outputs[o]
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                bad("OUTPUT_RANGE", o, f"state {s}: {v!r} is not an unsigned integer")
            elif isinstance(width, int) and v >= 1 << width:
                bad("OUTPUT_RANGE", o, f"state {s}: {v} does not fit {width} bits")
        for o in sd.outputs:
            if o not in f.outputs:
                bad("UNKNOWN_OUTPUT", o, f"state {s}")
        for i, t in enumerate(sd.transitions):
            if t.next not in f.states:
                bad("UNDECLARED_STATE", t.next, f"transition {s}[{i}]")
            for var in sorted(variables(t.guard) - inputs):
                bad("UNDECLARED_INPUT", var, f"guard of {s}[{i}]")
    return out


def require_valid(f: SemanticFsm) -> None:
    report = validate_fsm(f)
    if report:
        raise ValidationError(report)
