"""Transition-covering stimulus plans.

For each coverable transition (u, i) the planner walks a shortest path to u
over feasible transitions, applies the witness valuation for (u, i), and
keeps going from wherever that leaves the machine. A seeded random tail is
appended at the end.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

from fsmforge.core import SemanticFsm, require_valid
from fsmforge.errors import check_capacity
from fsmforge.guards import solve_priority, valuation_from_code
from fsmforge.rng import Xoshiro256
from fsmforge.sim import step

Edge = tuple[str, int]


@dataclass(frozen=True)
class Segment:
    target: Edge
    valuations: tuple[dict, ...]


@dataclass(frozen=True)
class StimulusPlan:
    segments: tuple[Segment, ...]
    random_tail: tuple[dict, ...]
    seed: int
    # feasible edges that could not be reached without a second reset
    unreached: tuple[Edge, ...] = field(default=())

    def valuations(self) -> list[dict]:
        out = [v for seg in self.segments for v in seg.valuations]
        out.extend(self.random_tail)
        return out


def witnesses(f: SemanticFsm) -> dict[Edge, dict | None]:
    check_capacity(f.inputs)
    return {
        (s, i): solve_priority(f.states[s], i, f.inputs)
        for s, i in f.edge_list()
    }


def feasible_edges(f: SemanticFsm, _witnesses=None) -> set[Edge]:
    """Transitions with a firing valuation whose source is reachable from reset."""
    wit = _witnesses if _witnesses is not None else witnesses(f)
    reach = {f.reset_state}
    frontier = [f.reset_state]
    while frontier:
        s = frontier.pop()
        for i, t in enumerate(f.states[s].transitions):
            if wit[(s, i)] is not None and t.next not in reach:
                reach.add(t.next)
                frontier.append(t.next)
    return {e for e, w in wit.items() if w is not None and e[0] in reach}


def _shortest_path(f: SemanticFsm, feasible: set[Edge], src: str, dst: str) -> list[Edge] | None:
    if src == dst:
        return []
    prev: dict[str, Edge] = {}
    seen = {src}
    queue = deque([src])
    while queue:
        s = queue.popleft()
        for i, t in enumerate(f.states[s].transitions):
            if (s, i) not in feasible or t.next in seen:
                continue
            seen.add(t.next)
            prev[t.next] = (s, i)
            if t.next == dst:
                path = []
                node = dst
                while node != src:
                    e = prev[node]
                    path.append(e)
                    node = e[0]
                return path[::-1]
            queue.append(t.next)
    return None


def default_tail_len(f: SemanticFsm) -> int:
    return 2 * len(f.edge_list())


def plan(f: SemanticFsm, seed: int, tail_len: int | None = None) -> StimulusPlan:
    require_valid(f)
    wit = witnesses(f)
    feasible = feasible_edges(f, wit)
    if tail_len is None:
        tail_len = default_tail_len(f)

    order = [e for e in f.edge_list() if e in feasible]
    covered: set[Edge] = set()
    segments: list[Segment] = []
    current = f.reset_state
    pending = order
    while pending:
        deferred = []
        for edge in pending:
            if edge in covered:
                continue
            path = _shortest_path(f, feasible, current, edge[0])
            if path is None:
                deferred.append(edge)
                continue
            vals = []
            for e in [*path, edge]:
                v = wit[e]
                nxt, idx = step(f, current, v)
                assert idx == e[1] and current == e[0], "witness replay diverged"
                covered.add(e)
                vals.append(dict(v))
                current = nxt
            segments.append(Segment(edge, tuple(vals)))
        if len(deferred) == len(pending):
            break
        pending = deferred
    unreached = tuple(e for e in order if e not in covered)

    rng = Xoshiro256(seed)
    n = len(f.inputs)
    tail = tuple(valuation_from_code(f.inputs, rng.below(1 << n)) for _ in range(tail_len))
    return StimulusPlan(tuple(segments), tail, seed, unreached)


def coverage_sidecar(f: SemanticFsm, p: StimulusPlan) -> str:
    """JSON listing, per cycle index, the explicit transition that fires."""
    rows = []
    s = f.reset_state
    for t, v in enumerate(p.valuations()):
        nxt, idx = step(f, s, v)
        if idx is not None:
            rows.append({"cycle": t, "state": s, "index": idx, "next": nxt})
        s = nxt
    return json.dumps({"seed": p.seed, "covered": rows}, indent=2) + "\n"
