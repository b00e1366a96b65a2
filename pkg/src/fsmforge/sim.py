"""Cycle-accurate Moore interpreter.

Timing: after reset the machine sits in the reset state for row 0. Row t
pairs ``inputs[t]`` with the outputs of state s_t; the inputs take effect at
the clock edge between cycle t and t+1.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Mapping, Sequence

from fsmforge.core import SemanticFsm
from fsmforge.errors import FsmError, InterfaceError
from fsmforge.guards import eval_guard


@dataclass(frozen=True)
class TraceRow:
    inputs: Mapping[str, int]
    outputs: Mapping[str, int]


@dataclass(frozen=True)
class Trace:
    input_names: tuple[str, ...]
    output_names: tuple[str, ...]
    rows: tuple[TraceRow, ...]

    def __len__(self):
        return len(self.rows)

    @property
    def inputs(self) -> list[dict[str, int]]:
        return [dict(r.inputs) for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cycle", *self.input_names, *self.output_names])
        for t, row in enumerate(self.rows):
            w.writerow(
                [t]
                + [row.inputs[n] for n in self.input_names]
                + [row.outputs[n] for n in self.output_names]
            )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, input_names: Sequence[str], output_names: Sequence[str]) -> Trace:
        """Parse a trace whose column split is known from the FSM interface."""
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise FsmError("empty trace file") from None
        expected = ["cycle", *input_names, *output_names]
        if header != expected:
            raise InterfaceError(
                f"trace header {header} does not match {expected}",
                sorted(set(header) ^ set(expected)),
            )
        rows = []
        for t, rec in enumerate(reader):
            if not rec:
                continue
            if len(rec) != len(expected) or int(rec[0]) != t:
                raise FsmError(f"malformed trace row {t}: {rec}")
            vals = [int(x) for x in rec[1:]]
            k = len(input_names)
            rows.append(
                TraceRow(dict(zip(input_names, vals[:k])), dict(zip(output_names, vals[k:])))
            )
        return cls(tuple(input_names), tuple(output_names), tuple(rows))


def read_input_csv(text: str, input_names: Sequence[str]) -> list[dict[str, int]]:
    """Stimulus file: header names the inputs (an optional leading ``cycle`` column is ignored)."""
    reader = csv.DictReader(io.StringIO(text))
    missing = set(input_names) - set(reader.fieldnames or [])
    if missing:
        raise InterfaceError(f"stimulus lacks inputs {sorted(missing)}", sorted(missing))
    return [{n: int(row[n]) for n in input_names} for row in reader]


def step(f: SemanticFsm, state: str, v: Mapping[str, int]) -> tuple[str, int | None]:
    """Next state and the index of the transition taken (None: implicit hold)."""
    for i, t in enumerate(f.states[state].transitions):
        if eval_guard(t.guard, v):
            return t.next, i
    return state, None


def states_visited(f: SemanticFsm, inputs: Sequence[Mapping[str, int]]) -> list[str]:
    """s_0 .. s_T for T = len(inputs)."""
    s = f.reset_state
    out = [s]
    for v in inputs:
        s, _ = step(f, s, v)
        out.append(s)
    return out


def run(f: SemanticFsm, inputs: Sequence[Mapping[str, int]]) -> Trace:
    rows = []
    s = f.reset_state
    for v in inputs:
        rows.append(TraceRow({n: int(v[n]) for n in f.inputs}, dict(f.states[s].outputs)))
        s, _ = step(f, s, v)
    return Trace(tuple(f.inputs), tuple(f.outputs), tuple(rows))


def coverage(f: SemanticFsm, inputs: Sequence[Mapping[str, int]]) -> tuple[set[str], set[tuple[str, int]]]:
    """States entered and explicit (state, index) transitions taken."""
    s = f.reset_state
    visited = {s}
    taken: set[tuple[str, int]] = set()
    for v in inputs:
        nxt, idx = step(f, s, v)
        if idx is not None:
            taken.add((s, idx))
        s = nxt
        visited.add(s)
    return visited, taken
