"""Exception hierarchy shared by every module."""

from __future__ import annotations


class FsmError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(FsmError):
    def __init__(self, report):
        self.report = list(report)
        lines = "; ".join(str(v) for v in self.report)
        super().__init__(f"invalid FSM: {lines}")


class InterfaceError(FsmError):
    """Two artifacts disagree on their input/output signals."""

    def __init__(self, message: str, signals=None):
        self.signals = list(signals or [])
        super().__init__(message)


class CapacityError(FsmError):
    """Input count exceeds the exhaustive-enumeration bound."""


class GuardSyntaxError(FsmError):
    def __init__(self, text: str, offset: int, expected: set[str]):
        self.text = text
        self.offset = offset
        self.expected = frozenset(expected)
        want = ", ".join(sorted(self.expected))
        super().__init__(f"guard syntax error at offset {offset} in {text!r}: expected one of {want}")


class GuardEvalError(FsmError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"guard references unknown variable {name!r}")


MAX_ENUM_INPUTS = 20


def check_capacity(inputs) -> None:
    if len(inputs) > MAX_ENUM_INPUTS:
        raise CapacityError(
            f"{len(inputs)} inputs exceeds enumeration bound of {MAX_ENUM_INPUTS}"
        )
