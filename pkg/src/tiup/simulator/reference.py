"""Single-instruction reference interpreter (no pipeline).

Written independently of the kernel, in plain Python integers, for
conformance testing.
"""

from __future__ import annotations

from ..compiler.isa import Instr

MASK = 0xFFFFFFFF


def _s(v: int) -> int:
    v &= MASK
    return v - (1 << 32) if v >> 31 else v


def execute(ins: Instr, regs: list[int], mem: dict[int, int], pc: int = 0,
            mem_words: int = 256) -> int:
    """Apply ``ins`` at byte address ``pc``; returns the next pc.

    ``regs`` (32 unsigned values) and ``mem`` (word index -> value) are
    updated in place.  x0 stays 0.
    """
    n = ins.name
    a, b, imm = regs[ins.rs1] & MASK, regs[ins.rs2] & MASK, ins.imm
    nxt = pc + 4
    rd_val = None

    ops = {
        "add": lambda: a + b, "sub": lambda: a - b, "sll": lambda: a << (b % 32),
        "slt": lambda: int(_s(a) < _s(b)), "sltu": lambda: int(a < b),
        "xor": lambda: a ^ b, "srl": lambda: a >> (b % 32), "sra": lambda: _s(a) >> (b % 32),
        "or": lambda: a | b, "and": lambda: a & b, "mul": lambda: a * b,
        "mulh": lambda: (_s(a) * _s(b)) >> 32, "mulhsu": lambda: (_s(a) * b) >> 32,
        "mulhu": lambda: (a * b) >> 32,
        "addi": lambda: a + imm, "slti": lambda: int(_s(a) < imm),
        "sltiu": lambda: int(a < (imm & MASK)), "xori": lambda: a ^ imm,
        "ori": lambda: a | imm, "andi": lambda: a & imm,
        "slli": lambda: a << imm, "srli": lambda: a >> imm, "srai": lambda: _s(a) >> imm,
        "lui": lambda: imm << 12, "auipc": lambda: pc + (imm << 12),
    }
    conds = {
        "beq": lambda: a == b, "bne": lambda: a != b, "blt": lambda: _s(a) < _s(b),
        "bge": lambda: _s(a) >= _s(b), "bltu": lambda: a < b, "bgeu": lambda: a >= b,
    }
    if n in ops:
        rd_val = ops[n]()
    elif n in conds:
        if conds[n]():
            nxt = pc + imm
    elif n == "jal":
        rd_val, nxt = pc + 4, pc + imm
    elif n == "jalr":
        rd_val, nxt = pc + 4, ((a + imm) & MASK) & ~1
    elif n == "lw":
        rd_val = mem.get((((a + imm) & MASK) >> 2) % mem_words, 0)
    elif n == "sw":
        mem[(((a + imm) & MASK) >> 2) % mem_words] = b
    if rd_val is not None and ins.rd != 0:
        regs[ins.rd] = rd_val & MASK
    return nxt & MASK
