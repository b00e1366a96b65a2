"""Read and write the semantic FSM YAML interchange format.

Schema::

    name: <identifier>
    clock: <identifier>              # default clk
    reset: {signal: <identifier>, kind: synchronous, active: high, state: <State>}
    inputs: [<identifier>, ...]
    outputs: {<identifier>: <width>, ...}
    states:
      <State>:
        outputs: {<output>: <uint>, ...}
        transitions:
          - {guard: "<guard expr>", next: <State>}
"""

from __future__ import annotations

import json

import yaml

from fsmforge.core import SemanticFsm, StateDef, Transition, require_valid, validate_fsm
from fsmforge.errors import FsmError, GuardSyntaxError
from fsmforge.guards import parse_guard, print_guard


class FsmYamlError(FsmError):
    """Failure to load an FSM document.

    ``code`` is one of YAML_SYNTAX, MISSING_FIELD, UNKNOWN_KEY, WRONG_TYPE,
    BAD_GUARD or INVALID_FSM; ``path`` is a dotted location in the document.
    """

    def __init__(self, code: str, path: str, message: str, *, line=None, column=None, report=None):
        self.code = code
        self.path = path
        self.line = line
        self.column = column
        self.report = report or []
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{code} {path}: {message}{where}")


_TOP_KEYS = {"name", "clock", "reset", "inputs", "outputs", "states"}
_RESET_KEYS = {"signal", "kind", "active", "state"}
_STATE_KEYS = {"outputs", "transitions"}
_TRANSITION_KEYS = {"guard", "next"}


def _mapping(node, path, allowed, required=()):
    if not isinstance(node, dict):
        raise FsmYamlError("WRONG_TYPE", path, f"expected a mapping, got {type(node).__name__}")
    for key in node:
        if key not in allowed:
            raise FsmYamlError("UNKNOWN_KEY", f"{path}.{key}" if path else str(key), "unknown key")
    for key in required:
        if key not in node:
            raise FsmYamlError("MISSING_FIELD", f"{path}.{key}" if path else key, "required field missing")
    return node


def _string(node, path):
    if not isinstance(node, str):
        raise FsmYamlError("WRONG_TYPE", path, f"expected a string, got {node!r}")
    return node


def _uint(node, path):
    if isinstance(node, bool) or not isinstance(node, int) or node < 0:
        raise FsmYamlError("WRONG_TYPE", path, f"expected an unsigned integer, got {node!r}")
    return node


def parse_fsm_yaml(text: str) -> SemanticFsm:
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark or e.context_mark
        line = mark.line + 1 if mark else None
        col = mark.column + 1 if mark else None
        raise FsmYamlError("YAML_SYNTAX", "", str(e.problem or e), line=line, column=col) from None
    except yaml.YAMLError as e:
        raise FsmYamlError("YAML_SYNTAX", "", str(e)) from None

    if doc is None:
        doc = {}
    _mapping(doc, "", _TOP_KEYS, required=("name", "reset", "inputs", "outputs", "states"))
    name = _string(doc["name"], "name")
    clock = _string(doc.get("clock", "clk"), "clock")

    reset = _mapping(doc["reset"], "reset", _RESET_KEYS, required=("state",))
    reset_signal = _string(reset.get("signal", "rst"), "reset.signal")
    if reset.get("kind", "synchronous") != "synchronous":
        raise FsmYamlError("WRONG_TYPE", "reset.kind", "only 'synchronous' is supported")
    if reset.get("active", "high") != "high":
        raise FsmYamlError("WRONG_TYPE", "reset.active", "only 'high' is supported")
    reset_state = _string(reset["state"], "reset.state")

    raw_inputs = doc["inputs"] if doc["inputs"] is not None else []
    if not isinstance(raw_inputs, list):
        raise FsmYamlError("WRONG_TYPE", "inputs", "expected a list")
    inputs = tuple(_string(x, f"inputs[{i}]") for i, x in enumerate(raw_inputs))

    raw_outputs = doc["outputs"] if doc["outputs"] is not None else {}
    _mapping(raw_outputs, "outputs", set(raw_outputs) if isinstance(raw_outputs, dict) else set())
    outputs = {}
    for key, width in raw_outputs.items():
        outputs[_string(key, "outputs")] = _uint(width, f"outputs.{key}")

    raw_states = _mapping(doc["states"], "states", set(doc["states"]) if isinstance(doc["states"], dict) else set())
    states = {}
    for sname, body in raw_states.items():
        sname = _string(sname, "states")
        path = f"states.{sname}"
        if body is None:
            body = {}
        _mapping(body, path, _STATE_KEYS)
        outs = body.get("outputs") or {}
        _mapping(outs, f"{path}.outputs", set(outs) if isinstance(outs, dict) else set())
        state_outputs = {
            _string(o, f"{path}.outputs"): _uint(v, f"{path}.outputs.{o}") for o, v in outs.items()
        }
        raw_ts = body.get("transitions") or []
        if not isinstance(raw_ts, list):
            raise FsmYamlError("WRONG_TYPE", f"{path}.transitions", "expected a list")
        transitions = []
        for i, t in enumerate(raw_ts):
            tpath = f"{path}.transitions[{i}]"
            _mapping(t, tpath, _TRANSITION_KEYS, required=("guard", "next"))
            guard_text = t["guard"]
            if isinstance(guard_text, int) and not isinstance(guard_text, bool) and guard_text in (0, 1):
                guard_text = str(guard_text)
            guard_text = _string(guard_text, f"{tpath}.guard")
            try:
                guard = parse_guard(guard_text)
            except GuardSyntaxError as e:
                raise FsmYamlError("BAD_GUARD", f"{tpath}.guard", str(e)) from None
            transitions.append(Transition(guard, _string(t["next"], f"{tpath}.next")))
        states[sname] = StateDef(state_outputs, tuple(transitions))

    fsm = SemanticFsm(
        name=name,
        inputs=inputs,
        outputs=outputs,
        states=states,
        reset_state=reset_state,
        clock_name=clock,
        reset_name=reset_signal,
    )
    report = validate_fsm(fsm)
    if report:
        raise FsmYamlError(
            "INVALID_FSM", "", "; ".join(str(v) for v in report), report=report
        )
    return fsm


def _scalar(name: str) -> str:
    """Emit ``name`` bare unless YAML would read it back as something else."""
    try:
        if yaml.safe_load(name) == name and name.strip() == name and name:
            return name
    except yaml.YAMLError:
        pass
    return json.dumps(name)


def serialize_fsm_yaml(f: SemanticFsm) -> str:
    require_valid(f)
    q = _scalar
    lines = [
        f"name: {q(f.name)}",
        f"clock: {q(f.clock_name)}",
        f"reset: {{signal: {q(f.reset_name)}, kind: synchronous, active: high, state: {q(f.reset_state)}}}",
        f"inputs: [{', '.join(q(i) for i in f.inputs)}]",
        "outputs: {" + ", ".join(f"{q(o)}: {w}" for o, w in f.outputs.items()) + "}",
        "states:",
    ]
    for sname, sd in f.states.items():
        lines.append(f"  {q(sname)}:")
        outs = ", ".join(f"{q(o)}: {sd.outputs[o]}" for o in f.outputs)
        lines.append(f"    outputs: {{{outs}}}")
        if not sd.transitions:
            lines.append("    transitions: []")
            continue
        lines.append("    transitions:")
        for t in sd.transitions:
            lines.append(f"      - {{guard: {json.dumps(print_guard(t.guard))}, next: {q(t.next)}}}")
    return "\n".join(lines) + "\n"
