"""Topology preservation and behavioral equivalence checks."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Mapping, Sequence

from fsmforge.core import AbstractGraph, SemanticFsm, StateMapping, require_same_interface
from fsmforge.errors import FsmError, check_capacity
from fsmforge.guards import valuation_from_code
from fsmforge.sim import states_visited, step


class MappingError(FsmError):
    pass


@dataclass(frozen=True)
class IsoViolation:
    src: int
    dst: int
    src_name: str
    dst_name: str
    # "missing": abstract edge absent from the FSM; "extra": FSM edge not in the graph
    kind: str

    def __str__(self):
        return f"{self.kind} edge ({self.src_name},{self.dst_name}) for ids ({self.src},{self.dst})"


@dataclass(frozen=True)
class IsoResult:
    ok: bool
    violation: IsoViolation | None = None

    def __bool__(self):
        return self.ok


def check_isomorphism(g: AbstractGraph, f: SemanticFsm, m: StateMapping) -> IsoResult:
    pairs = dict(m.pairs)
    if set(pairs) != set(g.states):
        raise MappingError(
            f"mapping domain differs from graph states: missing {sorted(set(g.states) - set(pairs))}, "
            f"extra {sorted(set(pairs) - set(g.states))}"
        )
    names = list(pairs.values())
    if len(set(names)) != len(names):
        raise MappingError("mapping is not injective")
    if set(names) != set(f.states):
        raise MappingError(
            f"mapping image differs from FSM states: unmapped {sorted(set(f.states) - set(names))}, "
            f"unknown {sorted(set(names) - set(f.states))}"
        )
    inv = m.inverse()
    fsm_edges = {(inv[a], inv[b]) for a, b in f.explicit_edges()}
    bad = sorted(set(g.edges) ^ fsm_edges)
    if not bad:
        return IsoResult(True)
    u, v = bad[0]
    kind = "missing" if (u, v) in g.edges else "extra"
    return IsoResult(False, IsoViolation(u, v, pairs[u], pairs[v], kind))


@dataclass(frozen=True)
class EquivVerdict:
    equivalent: bool
    counterexample: tuple[dict, ...] | None = None
    mismatch_cycle: int | None = None
    mismatch_output: str | None = None

    def to_json_obj(self) -> dict:
        return {
            "equivalent": self.equivalent,
            "counterexample": None if self.counterexample is None else [dict(v) for v in self.counterexample],
            "mismatch_cycle": self.mismatch_cycle,
            "mismatch_output": self.mismatch_output,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2) + "\n"


class _Table:
    """Dense transition/output tables indexed by state number and input code."""

    def __init__(self, f: SemanticFsm, inputs: Sequence[str], outputs: Sequence[str]):
        self.names = list(f.states)
        index = {s: i for i, s in enumerate(self.names)}
        self.reset = index[f.reset_state]
        self.out = [tuple(f.states[s].outputs[o] for o in outputs) for s in self.names]
        vals = [valuation_from_code(inputs, c) for c in range(1 << len(inputs))]
        self.next = [[index[step(f, s, v)[0]] for v in vals] for s in self.names]


def check_equivalence(a: SemanticFsm, b: SemanticFsm, max_depth: int | None = None) -> EquivVerdict:
    """Breadth-first search of the product machine for an output divergence.

    Complete when ``max_depth`` is None or at least |S_a|*|S_b|; the returned
    counterexample is a shortest input prefix leading to a divergent pair.
    """
    require_same_interface(a, b)
    check_capacity(a.inputs)
    inputs = list(a.inputs)
    outputs = list(a.outputs)
    ta = _Table(a, inputs, outputs)
    tb = _Table(b, inputs, outputs)
    if max_depth is None:
        max_depth = len(ta.names) * len(tb.names)
    n_codes = 1 << len(inputs)

    start = (ta.reset, tb.reset)
    parent: dict[tuple[int, int], tuple[tuple[int, int], int] | None] = {start: None}
    depth = {start: 0}
    queue = deque([start])
    hit = start if ta.out[start[0]] != tb.out[start[1]] else None
    while queue and hit is None:
        pair = queue.popleft()
        d = depth[pair]
        if d >= max_depth:
            continue
        na, nb = ta.next[pair[0]], tb.next[pair[1]]
        for code in range(n_codes):
            nxt = (na[code], nb[code])
            if nxt in parent:
                continue
            parent[nxt] = (pair, code)
            depth[nxt] = d + 1
            if ta.out[nxt[0]] != tb.out[nxt[1]]:
                hit = nxt
                break
            queue.append(nxt)

    if hit is None:
        return EquivVerdict(True)
    codes = []
    node = hit
    while parent[node] is not None:
        node, code = parent[node]
        codes.append(code)
    codes.reverse()
    cex = tuple(valuation_from_code(inputs, c) for c in codes)
    oa, ob = ta.out[hit[0]], tb.out[hit[1]]
    first = next(o for o, x, y in zip(outputs, oa, ob) if x != y)
    return EquivVerdict(False, cex, len(cex), first)


@dataclass(frozen=True)
class OutputDiff:
    cycle: int
    output: str
    value_a: int
    value_b: int


def replay_counterexample(a: SemanticFsm, b: SemanticFsm, cex: Sequence[Mapping[str, int]]) -> list[OutputDiff]:
    """Every output difference over cycles 0..len(cex).

    Cycle t compares the states reached after the first t inputs, so a
    counterexample of length T exposes a divergence at cycle T.
    """
    sa = states_visited(a, cex)
    sb = states_visited(b, cex)
    diffs = []
    for t, (x, y) in enumerate(zip(sa, sb)):
        for o in a.outputs:
            va, vb = a.states[x].outputs[o], b.states[y].outputs.get(o)
            if va != vb:
                diffs.append(OutputDiff(t, o, va, vb))
    return diffs


__all__ = [
    "EquivVerdict",
    "IsoResult",
    "IsoViolation",
    "MappingError",
    "OutputDiff",
    "check_equivalence",
    "check_isomorphism",
    "replay_counterexample",
]
