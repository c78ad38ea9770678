"""Three-address IR and the lowering from formulas.

Implications become a branch on the antecedent:

    %tP = <antecedent>
    beq %tP, else_n
  if_n:
    check %tP                 ; this arm is only correct when %tP holds
    %tJ = <consequent>
    jmp join_n
  else_n:
    checknot %tP, %tS         ; and this one only when it does not
    %tJ = li i32 1            ; vacuous truth
  join_n:

The two ``check`` directives fold the path condition into Result_Reg, so
a core that takes the wrong arm clears the result instead of silently
computing the other arm's value.  ``%tJ`` is written once on each arm.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from ..formula import (BOOL, BinOp, Const, Formula, MemLd, MemRef, MemSt, Node,
                       UnaryOp, Var, type_of, uses_memory, walk)

COMPUTE_OPS = ("add", "sub", "mul", "and", "or", "xor", "slt", "sltu", "seq", "sne")


class CompileError(ValueError):
    def __init__(self, message: str, name: str = ""):
        super().__init__(f"{name}: {message}" if name else message)
        self.name = name


@dataclass(frozen=True)
class Temp:
    n: int

    def __str__(self) -> str:
        return f"%t{self.n}"


@dataclass(frozen=True)
class VarRef:
    name: str

    def __str__(self) -> str:
        return f"%{self.name}"


@dataclass(frozen=True)
class ZeroReg:
    def __str__(self) -> str:
        return "0"


ZERO = ZeroReg()
Operand = Union[Temp, VarRef, ZeroReg]


@dataclass(frozen=True)
class Compute:
    dst: Temp
    op: str
    a: Operand
    b: Operand

    def __str__(self) -> str:
        return f"{self.dst} = {self.op} i32 {self.a}, {self.b}"


@dataclass(frozen=True)
class LoadImm:
    dst: Temp
    value: int

    def __str__(self) -> str:
        return f"{self.dst} = li i32 {self.value}"


@dataclass(frozen=True)
class MemLoad:
    dst: Temp
    index: Operand

    def __str__(self) -> str:
        return f"{self.dst} = ld i32 %mem, {self.index}"


@dataclass(frozen=True)
class MemStore:
    scratch: Temp
    index: Operand
    value: Operand

    def __str__(self) -> str:
        return f"st i32 %mem, {self.index}, {self.value} ; addr {self.scratch}"


@dataclass(frozen=True)
class Branch:
    cond: Temp
    label: str

    def __str__(self) -> str:
        return f"beq {self.cond}, {self.label}"


@dataclass(frozen=True)
class Jump:
    label: str

    def __str__(self) -> str:
        return f"jmp {self.label}"


@dataclass(frozen=True)
class Label:
    name: str

    def __str__(self) -> str:
        return f"{self.name}:"


@dataclass(frozen=True)
class Check:
    cond: Temp

    def __str__(self) -> str:
        return f"check {self.cond}"


@dataclass(frozen=True)
class CheckNot:
    cond: Temp
    scratch: Temp

    def __str__(self) -> str:
        return f"checknot {self.cond}, {self.scratch}"


@dataclass(frozen=True)
class Accumulate:
    src: Temp

    def __str__(self) -> str:
        return f"%result_reg = and i32 {self.src}, %result_reg"


@dataclass(frozen=True)
class Finish:
    def __str__(self) -> str:
        return "finish"


Directive = Union[Compute, LoadImm, MemLoad, MemStore, Branch, Jump, Label,
                  Check, CheckNot, Accumulate, Finish]
BOOKKEEPING = (Check, CheckNot, Accumulate, Finish)


def defs(d: Directive) -> tuple[Temp, ...]:
    if isinstance(d, (Compute, LoadImm, MemLoad)):
        return (d.dst,)
    if isinstance(d, MemStore):
        return (d.scratch,)
    if isinstance(d, CheckNot):
        return (d.scratch,)
    return ()


def uses(d: Directive) -> tuple[Operand, ...]:
    if isinstance(d, Compute):
        return (d.a, d.b)
    if isinstance(d, MemLoad):
        return (d.index,)
    if isinstance(d, MemStore):
        return (d.index, d.value)
    if isinstance(d, (Branch, Check, CheckNot)):
        return (d.cond,)
    if isinstance(d, Accumulate):
        return (d.src,)
    return ()


@dataclass
class IrProgram:
    directives: list[Directive]
    inputs: tuple[str, ...]
    name: str = ""
    provenance: tuple = ()

    def text(self) -> str:
        lines = []
        for d in self.directives:
            lines.append(str(d) if isinstance(d, Label) else "  " + str(d))
        return "\n".join(lines) + ("\n" if lines else "")

    def temps(self) -> list[Temp]:
        seen: dict[Temp, None] = {}
        for d in self.directives:
            for t in defs(d):
                seen.setdefault(t)
        return list(seen)

    def without_bookkeeping(self) -> "IrProgram":
        body = [d for d in self.directives if not isinstance(d, BOOKKEEPING)]
        return IrProgram(body, self.inputs, self.name, self.provenance)

    def validate(self, bookkeeping: bool = True) -> None:
        validate_ir(self, bookkeeping)


# ---------------------------------------------------------------- validation

def _successors(directives, labels):
    succ = []
    for i, d in enumerate(directives):
        if isinstance(d, Jump):
            succ.append([labels[d.label]])
        elif isinstance(d, Branch):
            succ.append([i + 1, labels[d.label]])
        else:
            succ.append([i + 1])
    return succ


def validate_ir(ir: IrProgram, bookkeeping: bool = True) -> None:
    """Check the structural invariants; raise CompileError on violation.

    - every label is defined once and every target exists
    - control flow only moves forward
    - along every path each temp is written at most once and is written
      before it is read
    - (with bookkeeping) exactly one accumulate, immediately followed by
      the final finish
    """
    ds = ir.directives
    labels: dict[str, int] = {}
    for i, d in enumerate(ds):
        if isinstance(d, Label):
            if d.name in labels:
                raise CompileError(f"label {d.name} defined twice", ir.name)
            labels[d.name] = i
    for i, d in enumerate(ds):
        if isinstance(d, (Branch, Jump)):
            if d.label not in labels:
                raise CompileError(f"undefined label {d.label}", ir.name)
            if labels[d.label] <= i:
                raise CompileError(f"backward jump to {d.label}", ir.name)

    succ = _successors(ds, labels)
    n = len(ds)
    # must-defined / may-defined temps on entry to each directive
    must: list[set | None] = [None] * (n + 1)
    may: list[set] = [set() for _ in range(n + 1)]
    must[0] = set()
    for i, d in enumerate(ds):
        if must[i] is None:
            continue  # unreachable
        for op in uses(d):
            if isinstance(op, Temp) and op not in must[i]:
                raise CompileError(f"{op} may be read before it is written", ir.name)
        out_must, out_may = set(must[i]), set(may[i])
        for t in defs(d):
            if t in out_may:
                raise CompileError(f"{t} may be written twice on one path", ir.name)
            out_must.add(t)
            out_may.add(t)
        for j in succ[i]:
            must[j] = set(out_must) if must[j] is None else must[j] & out_must
            may[j] |= out_may

    if bookkeeping:
        acc = [i for i, d in enumerate(ds) if isinstance(d, Accumulate)]
        fin = [i for i, d in enumerate(ds) if isinstance(d, Finish)]
        if len(acc) != 1 or len(fin) != 1:
            raise CompileError("expected exactly one accumulate and one finish", ir.name)
        if not (fin[0] == n - 1 and acc[0] == n - 2):
            raise CompileError("accumulate must immediately precede the final finish", ir.name)


# ---------------------------------------------------------------- lowering

_SIMPLE = {"add": "add", "sub": "sub", "mul": "mul", "and": "and", "or": "or",
           "xor": "xor", "lt_s": "slt", "lt_u": "sltu", "eq": "seq", "ne": "sne",
           "logand": "and", "logor": "or"}


def _store_indices(mem: Node) -> list[Node]:
    out = []
    while isinstance(mem, MemSt):
        out.append(mem.index)
        mem = mem.mem
    return out


def check_memory_discipline(root: Node, name: str = "") -> None:
    """Reject memory expressions the straight-line store/load lowering
    cannot reproduce faithfully.

    Stores execute imperatively on one shared memory, so a load is only
    compiled when its address was written by its own store chain, and
    index/value expressions may not themselves touch memory.  A load from
    the untouched initial memory is allowed only in formulas that never
    store.
    """
    has_store = any(isinstance(n, MemSt) for n in walk(root))
    for node in walk(root):
        if isinstance(node, MemSt):
            if uses_memory(node.index) or uses_memory(node.value):
                raise CompileError("nested memory operation inside st()", name)
        if isinstance(node, MemLd):
            if uses_memory(node.index):
                raise CompileError("nested memory operation inside ld() index", name)
            indices = _store_indices(node.mem)
            if isinstance(node.mem, MemRef):
                if has_store:
                    raise CompileError("load from initial memory in a formula that stores", name)
            elif node.index not in indices:
                raise CompileError("load address is not one of its store chain's indices", name)


class _Lowerer:
    def __init__(self, name: str):
        self.out: list[Directive] = []
        self.ntemp = 0
        self.nlabel = 0
        self.name = name

    def temp(self) -> Temp:
        self.ntemp += 1
        return Temp(self.ntemp)

    def emit(self, d: Directive) -> None:
        self.out.append(d)

    def compute(self, op, a, b, dst):
        dst = dst or self.temp()
        self.emit(Compute(dst, op, a, b))
        return dst

    def lower(self, node: Node, dst: Temp | None = None) -> Operand:
        if isinstance(node, Var):
            if dst is not None:
                return self.compute("add", VarRef(node.name), ZERO, dst)
            return VarRef(node.name)
        if isinstance(node, Const):
            value = node.value & 0xFFFFFFFF
            if value == 0 and dst is None:
                return ZERO
            dst = dst or self.temp()
            self.emit(LoadImm(dst, value - (1 << 32) if value >> 31 else value))
            return dst
        if isinstance(node, UnaryOp):
            a = self.lower(node.child)
            if node.op == "lognot":
                return self.compute("seq", a, ZERO, dst)
            if node.op == "neg":
                return self.compute("sub", ZERO, a, dst)
            ones = self.temp()
            self.emit(LoadImm(ones, -1))
            return self.compute("xor", a, ones, dst)
        if isinstance(node, MemLd):
            self.store_chain(node.mem)
            idx = self.lower(node.index)
            dst = dst or self.temp()
            self.emit(MemLoad(dst, idx))
            return dst
        if isinstance(node, MemSt):
            raise CompileError("memory value used outside ld()", self.name)
        if isinstance(node, BinOp):
            if node.op == "implies":
                return self.implies(node, dst)
            a = self.lower(node.left)
            b = self.lower(node.right)
            if node.op == "gt_s":
                return self.compute("slt", b, a, dst)
            if node.op not in _SIMPLE:
                raise CompileError(f"unsupported operator {node.op}", self.name)
            return self.compute(_SIMPLE[node.op], a, b, dst)
        raise CompileError(f"unsupported node {type(node).__name__}", self.name)

    def store_chain(self, mem: Node) -> None:
        if isinstance(mem, MemRef):
            return
        self.store_chain(mem.mem)
        idx = self.lower(mem.index)
        val = self.lower(mem.value)
        self.emit(MemStore(self.temp(), idx, val))

    def implies(self, node: BinOp, dst: Temp | None) -> Temp:
        k = self.nlabel
        self.nlabel += 1
        cond = self.lower(node.left)
        dst = dst or self.temp()
        self.emit(Branch(cond, f"else_{k}"))
        self.emit(Label(f"if_{k}"))
        self.emit(Check(cond))
        self.lower(node.right, dst)
        self.emit(Jump(f"join_{k}"))
        self.emit(Label(f"else_{k}"))
        self.emit(CheckNot(cond, self.temp()))
        self.emit(LoadImm(dst, 1))
        self.emit(Label(f"join_{k}"))
        return dst


def lower_to_ir(f) -> IrProgram:
    """Lower a boolean formula (or an instantiated tautology) to IR."""
    formula: Formula = getattr(f, "formula", f)
    name = getattr(f, "name", "") or formula.name
    provenance = getattr(f, "provenance", ())
    if type_of(formula.root) != BOOL:
        raise CompileError("only boolean-valued formulas can be compiled", name)
    check_memory_discipline(formula.root, name)
    lw = _Lowerer(name)
    top = lw.lower(formula.root)
    lw.emit(Accumulate(top))
    lw.emit(Finish())
    ir = IrProgram(lw.out, formula.free_vars, name, provenance)
    ir.validate()
    return ir
