"""SystemVerilog text generation: reference RTL, self-checking testbench, miter."""

from __future__ import annotations

import enum

from fsmforge.core import SemanticFsm, Violation, require_same_interface, require_valid
from fsmforge.errors import InterfaceError, ValidationError
from fsmforge.guards import And, Const, Guard, Not, Or, Var
from fsmforge.sim import Trace

PASS_SENTINEL = "LLMFSM_PASS"
FAIL_SENTINEL = "LLMFSM_FAIL"

# keywords that would break the emitted text if used as a signal/module name
SV_KEYWORDS = frozenset("""
always always_comb always_ff always_latch and assign automatic begin bit break buf byte case casex casez
cmos const continue default defparam disable do edge else end endcase endfunction endgenerate endmodule
endpackage endtask enum event final for force forever fork function generate genvar if initial
inout input int integer interface localparam logic longint module nand negedge nmos nor not or
output package parameter posedge primitive pullup pulldown real reg repeat return shortint signed
string struct supply0 supply1 task time tri typedef union unique unsigned void wait while wire
xnor xor
""".split())


class Encoding(enum.Enum):
    ONEHOT = "onehot"
    BINARY = "binary"


def _check_names(f: SemanticFsm) -> None:
    names = [f.name, f.clock_name, f.reset_name, *f.inputs, *f.outputs]
    bad = [Violation("RESERVED_WORD", n, "SystemVerilog keyword") for n in names if n in SV_KEYWORDS]
    internal = {"state_q", "state_d", "mismatch", "failed", "dut", "t", "NUM_CYCLES"}
    internal |= {_state_param(s) for s in f.states}
    bad += [
        Violation("RESERVED_WORD", n, "collides with a generated identifier")
        for n in names
        if n in internal or n.startswith(("stim_", "exp_", "ref_", "rec_"))
    ]
    if bad:
        raise ValidationError(bad)


def state_codes(f: SemanticFsm, encoding: Encoding) -> tuple[int, dict[str, str]]:
    """Register width and the sized literal for each state, in declaration order."""
    names = list(f.states)
    n = len(names)
    if encoding is Encoding.ONEHOT:
        width = n
        return width, {s: f"{width}'b" + format(1 << i, f"0{width}b") for i, s in enumerate(names)}
    width = max(1, (n - 1).bit_length())
    return width, {s: f"{width}'d{i}" for i, s in enumerate(names)}


def sv_expr(g: Guard) -> str:
    if isinstance(g, Const):
        return "1'b1" if g.value else "1'b0"
    if isinstance(g, Var):
        return g.name
    if isinstance(g, Not):
        inner = sv_expr(g.child)
        return f"!({inner})" if isinstance(g.child, (And, Or)) else f"!{inner}"
    op = " && " if isinstance(g, And) else " || "
    return op.join(
        f"({sv_expr(c)})" if isinstance(c, (And, Or)) else sv_expr(c) for c in g.children
    )


def _decl(width: int) -> str:
    return "" if width == 1 else f"[{width - 1}:0] "


def _state_param(s: str) -> str:
    return f"S_{s}"


def emit_rtl(f: SemanticFsm, encoding: Encoding = Encoding.ONEHOT, module_name: str | None = None) -> str:
    require_valid(f)
    _check_names(f)
    encoding = Encoding(encoding)
    name = module_name or f.name
    width, codes = state_codes(f, encoding)
    ports = [f"  input  logic {f.clock_name}", f"  input  logic {f.reset_name}"]
    ports += [f"  input  logic {i}" for i in f.inputs]
    ports += [f"  output logic {_decl(w)}{o}" for o, w in f.outputs.items()]

    out = [
        "`timescale 1ns/1ps",
        f"// {encoding.value} state encoding, {len(f.states)} states",
        f"module {name} (",
    ]
    out.append(",\n".join(ports))
    out.append(");")
    out.append("")
    for s, code in codes.items():
        out.append(f"  localparam logic {_decl(width)}{_state_param(s)} = {code};")
    out.append("")
    out.append(f"  logic {_decl(width)}state_q, state_d;")
    out.append("")

    out.append("  always_comb begin")
    out.append("    state_d = state_q;")
    out.append("    case (state_q)")
    for s, sd in f.states.items():
        out.append(f"      {_state_param(s)}: begin")
        for i, t in enumerate(sd.transitions):
            kw = "if" if i == 0 else "else if"
            out.append(f"        {kw} ({sv_expr(t.guard)}) state_d = {_state_param(t.next)};")
        if sd.transitions:
            out.append(f"        else state_d = {_state_param(s)};")
        else:
            out.append(f"        state_d = {_state_param(s)};")
        out.append("      end")
    out.append(f"      default: state_d = {_state_param(f.reset_state)};")
    out.append("    endcase")
    out.append("  end")
    out.append("")

    out.append("  always_comb begin")
    for o, w in f.outputs.items():
        out.append(f"    {o} = {w}'d0;")
    out.append("    case (state_q)")
    for s, sd in f.states.items():
        assigns = " ".join(f"{o} = {w}'d{sd.outputs[o]};" for o, w in f.outputs.items())
        out.append(f"      {_state_param(s)}: begin {assigns} end")
    out.append("      default: ;")
    out.append("    endcase")
    out.append("  end")
    out.append("")

    out.append(f"  always_ff @(posedge {f.clock_name}) begin")
    out.append(f"    if ({f.reset_name}) state_q <= {_state_param(f.reset_state)};")
    out.append("    else state_q <= state_d;")
    out.append("  end")
    out.append("")
    out.append("endmodule")
    return "\n".join(out) + "\n"


def testbench_top(f: SemanticFsm) -> str:
    return f"{f.name}_tb"


def emit_testbench(f: SemanticFsm, golden: Trace) -> str:
    """Self-checking testbench with the golden vectors embedded as literals.

    Inputs change 1ns after each rising edge; outputs are compared on the
    falling edge, i.e. half a period before the edge that consumes the inputs.
    """
    require_valid(f)
    _check_names(f)
    if tuple(golden.input_names) != tuple(f.inputs) or tuple(golden.output_names) != tuple(f.outputs):
        bad = sorted(
            (set(golden.input_names) ^ set(f.inputs))
            | (set(golden.output_names) ^ set(f.outputs))
        )
        raise InterfaceError("golden trace columns do not match the FSM interface", bad)
    top = testbench_top(f)
    n = len(golden)
    clk, rst = f.clock_name, f.reset_name
    out = ["`timescale 1ns/1ps", f"module {top};", ""]
    out.append(f"  logic {clk} = 1'b0;")
    out.append(f"  logic {rst} = 1'b1;")
    for i in f.inputs:
        out.append(f"  logic {i} = 1'b0;")
    for o, w in f.outputs.items():
        out.append(f"  logic {_decl(w)}{o};")
    out.append("")
    conns = [f".{s}({s})" for s in (clk, rst, *f.inputs, *f.outputs)]
    out.append(f"  {f.name} dut ({', '.join(conns)});")
    out.append("")
    out.append(f"  always #5 {clk} = ~{clk};")
    out.append("")
    out.append(f"  localparam int NUM_CYCLES = {n};")
    out.append("  logic failed = 1'b0;")
    depth = max(n, 1)
    for i in f.inputs:
        out.append(f"  logic stim_{i} [0:{depth - 1}];")
    for o, w in f.outputs.items():
        out.append(f"  logic {_decl(w)}exp_{o} [0:{depth - 1}];")
    out.append("")
    out.append("`ifdef LLMFSM_DUMP")
    out.append(f"  initial begin $dumpfile(\"{top}.vcd\"); $dumpvars(0, {top}); end")
    out.append("`endif")
    out.append("")
    out.append("  initial begin")
    for t, row in enumerate(golden.rows):
        parts = [f"stim_{i}[{t}] = 1'b{row.inputs[i]};" for i in f.inputs]
        parts += [f"exp_{o}[{t}] = {w}'d{row.outputs[o]};" for o, w in f.outputs.items()]
        out.append("    " + " ".join(parts))
    out.append(f"    repeat (2) @(posedge {clk});")
    out.append(f"    #1 {rst} = 1'b0;")
    out.append("    for (int t = 0; t < NUM_CYCLES; t++) begin")
    for i in f.inputs:
        out.append(f"      {i} = stim_{i}[t];")
    out.append(f"      @(negedge {clk});")
    # some simulators let the process run on after $finish, so stop explicitly
    for o in f.outputs:
        out.append(f"      if (!failed && {o} !== exp_{o}[t]) begin")
        out.append(
            f"        $display(\"{FAIL_SENTINEL} cycle=%0d signal={o} expect=%0d got=%0d\", t, exp_{o}[t], {o});"
        )
        out.append("        failed = 1'b1;")
        out.append("      end")
    out.append("      if (failed) break;")
    out.append(f"      @(posedge {clk});")
    out.append("      #1;")
    out.append("    end")
    out.append(f"    if (!failed) $display(\"{PASS_SENTINEL}\");")
    out.append("    $finish;")
    out.append("  end")
    out.append("")
    out.append("endmodule")
    return "\n".join(out) + "\n"


def miter_names(a: SemanticFsm, b: SemanticFsm) -> tuple[str, str]:
    if a.name == b.name:
        return f"{a.name}_ref", f"{b.name}_rec"
    return a.name, b.name


def emit_miter(a: SemanticFsm, b: SemanticFsm, encoding: Encoding = Encoding.ONEHOT) -> str:
    """Both machines plus a wrapper whose ``mismatch`` output ORs all output inequalities."""
    require_same_interface(a, b)
    name_a, name_b = miter_names(a, b)
    clk, rst = a.clock_name, a.reset_name
    parts = [
        emit_rtl(a, encoding, module_name=name_a),
        emit_rtl(b, encoding, module_name=name_b),
    ]
    ports = [f"  input  logic {clk}", f"  input  logic {rst}"]
    ports += [f"  input  logic {i}" for i in a.inputs]
    ports.append("  output logic mismatch")
    w = ["module fsm_miter (", ",\n".join(ports), ");", ""]
    for o, width in a.outputs.items():
        w.append(f"  logic {_decl(width)}ref_{o}, rec_{o};")
    w.append("")
    for inst, mod, prefix, m in (("u_ref", name_a, "ref_", a), ("u_rec", name_b, "rec_", b)):
        conns = [f".{m.clock_name}({clk})", f".{m.reset_name}({rst})"]
        conns += [f".{i}({i})" for i in a.inputs]
        conns += [f".{o}({prefix}{o})" for o in a.outputs]
        w.append(f"  {mod} {inst} ({', '.join(conns)});")
    w.append("")
    terms = [f"(ref_{o} != rec_{o})" for o in a.outputs] or ["1'b0"]
    w.append(f"  assign mismatch = {' || '.join(terms)};")
    w.append("")
    w.append("endmodule")
    parts.append("\n".join(w) + "\n")
    return "\n".join(parts)
