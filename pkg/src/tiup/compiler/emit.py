"""RV32I code generation from IR."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import isa
from .ir import (Accumulate, Branch, Check, CheckNot, CompileError, Compute,
                 Finish, IrProgram, Jump, Label, LoadImm, MemLoad, MemStore,
                 Temp, VarRef, ZeroReg, defs, uses)
from .isa import Instr

RESULT_REG = 30
FINISH_REG = 31
MEM_WORDS = 256


@dataclass(frozen=True)
class RegPlan:
    """Architectural register roles."""

    inputs: tuple[int, ...] = tuple(range(1, 9))
    temps: tuple[int, ...] = tuple(range(9, 30))
    result: int = RESULT_REG
    finish: int = FINISH_REG
    bookkeeping: bool = True

    def __post_init__(self):
        pools = [set(self.inputs), set(self.temps), {self.result}, {self.finish}]
        seen: set[int] = set()
        for pool in pools:
            if pool & seen or 0 in pool:
                raise ValueError("register roles overlap")
            seen |= pool


DEFAULT_PLAN = RegPlan()
# body-only plan for the duplicated self-consistency programs (x1..x15)
SQED_PLAN = RegPlan(inputs=tuple(range(1, 9)), temps=tuple(range(9, 16)), bookkeeping=False)


@dataclass
class InstrSequence:
    words: list[int]
    symbols: dict[str, int]
    name: str = ""
    provenance: tuple = ()
    labels: dict[str, int] = field(default_factory=dict)
    inputs: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.words)

    @property
    def instructions(self) -> list[Instr]:
        return [isa.decode(w) for w in self.words]

    def input_registers(self) -> dict[str, int]:
        return {v: self.symbols[f"input:{v}"] for v in self.inputs}

    def assembly(self) -> str:
        lines = [f"# tautology: {self.name}"] if self.name else []
        for v, r in self.input_registers().items():
            lines.append(f"# input {v} -> x{r}")
        if "result" in self.symbols:
            lines.append(f"# result_reg -> x{self.symbols['result']}")
            lines.append(f"# finish_reg -> x{self.symbols['finish']}")
        at = {}
        for label, idx in self.labels.items():
            at.setdefault(idx, []).append(label)
        for i, w in enumerate(self.words):
            for label in at.get(i, []):
                lines.append(f"{label}:")
            lines.append(f"    {isa.disassemble(isa.decode(w)):<24} # {i * 4:04x}: {w:08x}")
        for label in at.get(len(self.words), []):
            lines.append(f"{label}:")
        return "\n".join(lines) + "\n"

    def binary(self) -> bytes:
        return isa.words_to_bytes(self.words)


def allocate_registers(ir: IrProgram, pool: tuple[int, ...]) -> dict[Temp, int]:
    """Linear-scan allocation over [first, last] occurrence intervals.

    Control flow only moves forward, so two temps whose intervals do not
    overlap can never be live at once on any path.  Registers are taken
    lowest-first; sources dying at a directive are released before its
    destination is assigned, except a store's value, which must survive
    the address computation.
    """
    last: dict[Temp, int] = {}
    for i, d in enumerate(ir.directives):
        for t in list(defs(d)) + [u for u in uses(d) if isinstance(u, Temp)]:
            last[t] = i
    free = sorted(pool)
    assigned: dict[Temp, int] = {}
    live: set[Temp] = set()
    for i, d in enumerate(ir.directives):
        keep = d.value if isinstance(d, MemStore) else None
        for u in uses(d):
            if isinstance(u, Temp) and u in live and last[u] == i and u != keep:
                live.discard(u)
                free.append(assigned[u])
        free.sort()
        for t in defs(d):
            if t in assigned:
                continue
            if not free:
                raise CompileError(
                    f"register pressure: more than {len(pool)} live temporaries", ir.name)
            assigned[t] = free.pop(0)
            live.add(t)
        for t in list(live):
            if last[t] == i:
                live.discard(t)
                free.append(assigned[t])
        free.sort()
    return assigned


def _li(rd: int, value: int) -> list[Instr]:
    value = isa.sign_extend(value, 32)
    if -2048 <= value < 2048:
        return [Instr("addi", rd, 0, 0, value)]
    lo = isa.sign_extend(value, 12)
    hi = ((value - lo) >> 12) & 0xFFFFF
    out = [Instr("lui", rd, 0, 0, hi)]
    if lo:
        out.append(Instr("addi", rd, rd, 0, lo))
    return out


_R = {"add": "add", "sub": "sub", "mul": "mul", "and": "and", "or": "or",
      "xor": "xor", "slt": "slt", "sltu": "sltu"}


def emit_rv32i(ir: IrProgram, plan: RegPlan = DEFAULT_PLAN) -> InstrSequence:
    """Encode an IR program as RV32I words."""
    if plan.bookkeeping:
        ir.validate()
    else:
        ir = ir.without_bookkeeping()
        ir.validate(bookkeeping=False)
    if len(ir.inputs) > len(plan.inputs):
        raise CompileError(
            f"{len(ir.inputs)} input variables exceed the {len(plan.inputs)} input registers", ir.name)
    inputs = dict(zip(ir.inputs, plan.inputs))
    temps = allocate_registers(ir, plan.temps)

    def reg(op) -> int:
        if isinstance(op, Temp):
            return temps[op]
        if isinstance(op, VarRef):
            return inputs[op.name]
        assert isinstance(op, ZeroReg)
        return 0

    code: list[Instr] = []
    fixups: list[tuple[int, str]] = []
    labels: dict[str, int] = {}
    if plan.bookkeeping:
        code.append(Instr("addi", plan.result, 0, 0, 1))
    for d in ir.directives:
        if isinstance(d, Label):
            labels[d.name] = len(code)
        elif isinstance(d, Compute):
            rd, a, b = reg(d.dst), reg(d.a), reg(d.b)
            if d.op in _R:
                code.append(Instr(_R[d.op], rd, a, b))
            elif d.op == "seq":
                if b == 0 or a == 0:
                    code.append(Instr("sltiu", rd, a or b, 0, 1))
                else:
                    code += [Instr("sub", rd, a, b), Instr("sltiu", rd, rd, 0, 1)]
            elif d.op == "sne":
                code += [Instr("sub", rd, a, b), Instr("sltu", rd, 0, rd)]
            else:
                raise CompileError(f"unknown compute op {d.op}", ir.name)
        elif isinstance(d, LoadImm):
            code += _li(reg(d.dst), d.value)
        elif isinstance(d, MemLoad):
            rd = reg(d.dst)
            code += [Instr("andi", rd, reg(d.index), 0, MEM_WORDS - 1),
                     Instr("slli", rd, rd, 0, 2),
                     Instr("lw", rd, rd, 0, 0)]
        elif isinstance(d, MemStore):
            s = reg(d.scratch)
            code += [Instr("andi", s, reg(d.index), 0, MEM_WORDS - 1),
                     Instr("slli", s, s, 0, 2),
                     Instr("sw", 0, s, reg(d.value), 0)]
        elif isinstance(d, Branch):
            fixups.append((len(code), d.label))
            code.append(Instr("beq", 0, reg(d.cond), 0, 0))
        elif isinstance(d, Jump):
            fixups.append((len(code), d.label))
            code.append(Instr("jal", 0, 0, 0, 0))
        elif isinstance(d, Check):
            code.append(Instr("and", plan.result, plan.result, reg(d.cond)))
        elif isinstance(d, CheckNot):
            s = reg(d.scratch)
            code += [Instr("sltiu", s, reg(d.cond), 0, 1),
                     Instr("and", plan.result, plan.result, s)]
        elif isinstance(d, Accumulate):
            code.append(Instr("and", plan.result, plan.result, reg(d.src)))
        elif isinstance(d, Finish):
            code.append(Instr("addi", plan.finish, 0, 0, 1))
        else:
            raise CompileError(f"unknown directive {d!r}", ir.name)

    for at, label in fixups:
        ins = code[at]
        offset = (labels[label] - at) * 4
        code[at] = Instr(ins.name, ins.rd, ins.rs1, ins.rs2, offset)

    words = []
    for ins in code:
        try:
            words.append(isa.encode(ins))
        except isa.EncodingError as exc:
            raise CompileError(str(exc), ir.name) from exc

    symbols = {f"input:{v}": r for v, r in inputs.items()}
    symbols.update({f"temp:{t}": r for t, r in temps.items()})
    if plan.bookkeeping:
        symbols["result"] = plan.result
        symbols["finish"] = plan.finish
    return InstrSequence(words, symbols, ir.name, ir.provenance, labels, ir.inputs)


def compile_tautology(f, plan: RegPlan = DEFAULT_PLAN) -> InstrSequence:
    from .ir import lower_to_ir
    return emit_rv32i(lower_to_ir(f), plan)
