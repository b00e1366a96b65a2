"""Boolean guard expressions over 1-bit inputs.

Grammar (whitespace insignificant)::

    expr   := term ('|' term)*
    term   := factor ('&' factor)*
    factor := '!' factor | '(' expr ')' | identifier | '0' | '1'
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from fsmforge.errors import GuardEvalError, GuardSyntaxError, check_capacity


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Not:
    child: Guard


@dataclass(frozen=True)
class And:
    children: tuple[Guard, ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("And needs at least two children")


@dataclass(frozen=True)
class Or:
    children: tuple[Guard, ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("Or needs at least two children")


Guard = Union[Const, Var, Not, And, Or]

TRUE = Const(1)
FALSE = Const(0)

_TOKEN_RE = re.compile(r"\s*(?:([A-Za-z_][A-Za-z0-9_]*)|([01])(?![A-Za-z0-9_])|([!&|()]))")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self._advance()

    def _advance(self):
        m = _TOKEN_RE.match(self.text, self.pos)
        rest = self.text[self.pos:]
        if not rest.strip():
            self.tok, self.kind, self.start = None, "end", len(self.text)
            self.pos = len(self.text)
            return
        if m is None:
            start = len(self.text) - len(rest.lstrip())
            raise GuardSyntaxError(self.text, start, {"identifier", "0", "1", "!", "("})
        self.start = m.start(m.lastindex)
        if m.group(1):
            self.tok, self.kind = m.group(1), "ident"
        elif m.group(2):
            self.tok, self.kind = m.group(2), "const"
        else:
            self.tok, self.kind = m.group(3), m.group(3)
        self.pos = m.end()

    def fail(self, expected):
        raise GuardSyntaxError(self.text, self.start, expected)

    def parse(self) -> Guard:
        g = self.expr()
        if self.kind != "end":
            self.fail({"&", "|", "end of input"})
        return g

    def expr(self) -> Guard:
        items = [self.term()]
        while self.kind == "|":
            self._advance()
            items.append(self.term())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def term(self) -> Guard:
        items = [self.factor()]
        while self.kind == "&":
            self._advance()
            items.append(self.factor())
        return items[0] if len(items) == 1 else And(tuple(items))

    def factor(self) -> Guard:
        kind, tok = self.kind, self.tok
        if kind == "!":
            self._advance()
            return Not(self.factor())
        if kind == "(":
            self._advance()
            g = self.expr()
            if self.kind != ")":
                self.fail({"&", "|", ")"})
            self._advance()
            return g
        if kind == "ident":
            self._advance()
            return Var(tok)
        if kind == "const":
            self._advance()
            return Const(int(tok))
        self.fail({"identifier", "0", "1", "!", "("})


def parse_guard(text: str) -> Guard:
    """Parse guard text; raises GuardSyntaxError with offset and expected tokens."""
    return _Parser(text).parse()


def print_guard(g: Guard) -> str:
    """Canonical text; any And/Or nested under And/Or/Not is parenthesized."""
    if isinstance(g, Const):
        return str(g.value)
    if isinstance(g, Var):
        return g.name
    if isinstance(g, Not):
        inner = print_guard(g.child)
        return f"!({inner})" if isinstance(g.child, (And, Or)) else f"!{inner}"
    sep = " & " if isinstance(g, And) else " | "
    parts = []
    for c in g.children:
        text = print_guard(c)
        parts.append(f"({text})" if isinstance(c, (And, Or)) else text)
    return sep.join(parts)


def variables(g: Guard) -> set[str]:
    if isinstance(g, Var):
        return {g.name}
    if isinstance(g, Const):
        return set()
    if isinstance(g, Not):
        return variables(g.child)
    out: set[str] = set()
    for c in g.children:
        out |= variables(c)
    return out


def eval_guard(g: Guard, v: Mapping[str, int]) -> int:
    if isinstance(g, Const):
        return g.value
    if isinstance(g, Var):
        try:
            return 1 if v[g.name] else 0
        except KeyError:
            raise GuardEvalError(g.name) from None
    if isinstance(g, Not):
        return 1 - eval_guard(g.child, v)
    if isinstance(g, And):
        # evaluate every child so unknown names surface regardless of order
        return int(all([eval_guard(c, v) for c in g.children]))
    return int(any([eval_guard(c, v) for c in g.children]))


def valuations(inputs: Sequence[str]):
    """All total valuations, lowest first; the first input is most significant."""
    n = len(inputs)
    for code in range(1 << n):
        yield valuation_from_code(inputs, code)


def valuation_from_code(inputs: Sequence[str], code: int) -> dict[str, int]:
    n = len(inputs)
    return {name: (code >> (n - 1 - i)) & 1 for i, name in enumerate(inputs)}


def valuation_code(inputs: Sequence[str], v: Mapping[str, int]) -> int:
    code = 0
    for name in inputs:
        code = (code << 1) | (1 if v[name] else 0)
    return code


def solve_priority(state, edge_index: int, inputs: Sequence[str]) -> dict[str, int] | None:
    """Lowest valuation under which transition ``edge_index`` of ``state`` fires.

    Firing means every earlier guard is false and this one is true. Returns
    None when priority shadowing makes the transition unreachable.
    """
    check_capacity(inputs)
    transitions = state.transitions
    if not 0 <= edge_index < len(transitions):
        raise IndexError(f"edge index {edge_index} out of range")
    earlier = [t.guard for t in transitions[:edge_index]]
    target = transitions[edge_index].guard
    for v in valuations(inputs):
        if eval_guard(target, v) and not any(eval_guard(g, v) for g in earlier):
            return v
    return None
