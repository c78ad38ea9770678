"""RV32I (+ M-extension multiplies) instruction encoding and decoding.

Only the subset the toolchain and the simulator understand is covered:
the integer computational instructions, LUI/AUIPC, JAL/JALR, the six
conditional branches, LW/SW and MUL/MULH/MULHSU/MULHU.  Anything else
decodes to an ``illegal`` marker instead of raising.

Immediates are stored the way an assembler writes them: sign-extended
byte offsets for I/S/B/J formats, the raw 20-bit field for U format and
the shift amount for SLLI/SRLI/SRAI.
"""

from __future__ import annotations

from dataclasses import dataclass

OP_LUI = 0b0110111
OP_AUIPC = 0b0010111
OP_JAL = 0b1101111
OP_JALR = 0b1100111
OP_BRANCH = 0b1100011
OP_LOAD = 0b0000011
OP_STORE = 0b0100011
OP_IMM = 0b0010011
OP_REG = 0b0110011

# name -> (funct3, funct7) for register-register ops
R_TYPE = {
    "add": (0b000, 0b0000000),
    "sub": (0b000, 0b0100000),
    "sll": (0b001, 0b0000000),
    "slt": (0b010, 0b0000000),
    "sltu": (0b011, 0b0000000),
    "xor": (0b100, 0b0000000),
    "srl": (0b101, 0b0000000),
    "sra": (0b101, 0b0100000),
    "or": (0b110, 0b0000000),
    "and": (0b111, 0b0000000),
    "mul": (0b000, 0b0000001),
    "mulh": (0b001, 0b0000001),
    "mulhsu": (0b010, 0b0000001),
    "mulhu": (0b011, 0b0000001),
}
I_ALU = {
    "addi": 0b000,
    "slti": 0b010,
    "sltiu": 0b011,
    "xori": 0b100,
    "ori": 0b110,
    "andi": 0b111,
}
I_SHIFT = {
    "slli": (0b001, 0b0000000),
    "srli": (0b101, 0b0000000),
    "srai": (0b101, 0b0100000),
}
BRANCHES = {
    "beq": 0b000,
    "bne": 0b001,
    "blt": 0b100,
    "bge": 0b101,
    "bltu": 0b110,
    "bgeu": 0b111,
}

MNEMONICS = (
    tuple(R_TYPE) + tuple(I_ALU) + tuple(I_SHIFT) + tuple(BRANCHES)
    + ("lui", "auipc", "jal", "jalr", "lw", "sw")
)

# Dense numbering shared with the simulator kernel.  0 is reserved for illegal.
OPCODE_IDS = {name: i + 1 for i, name in enumerate(MNEMONICS)}
ILLEGAL_ID = 0

_R_DECODE = {(f3, f7): name for name, (f3, f7) in R_TYPE.items()}
_I_ALU_DECODE = {f3: name for name, f3 in I_ALU.items()}
_I_SHIFT_DECODE = {(f3, f7): name for name, (f3, f7) in I_SHIFT.items()}
_BRANCH_DECODE = {f3: name for name, f3 in BRANCHES.items()}


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class Instr:
    """One decoded instruction.  Unused fields stay 0."""

    name: str
    rd: int = 0
    rs1: int = 0
    rs2: int = 0
    imm: int = 0

    @property
    def illegal(self) -> bool:
        return self.name == "illegal"

    @property
    def writes_rd(self) -> bool:
        return self.name not in BRANCHES and self.name not in ("sw", "illegal")

    def sources(self) -> tuple[int, ...]:
        if self.name in R_TYPE or self.name in BRANCHES or self.name == "sw":
            return (self.rs1, self.rs2)
        if self.name in ("lui", "auipc", "jal", "illegal"):
            return ()
        return (self.rs1,)

    def registers(self) -> set[int]:
        regs = set(self.sources())
        if self.writes_rd:
            regs.add(self.rd)
        return regs

    def __str__(self) -> str:
        return disassemble(self)


ILLEGAL = Instr("illegal")
NOP = Instr("addi", 0, 0, 0, 0)


def _bits(value: int, hi: int, lo: int) -> int:
    return (value >> lo) & ((1 << (hi - lo + 1)) - 1)


def sign_extend(value: int, bits: int) -> int:
    value &= (1 << bits) - 1
    return value - (1 << bits) if value >> (bits - 1) else value


def _check_reg(*regs: int) -> None:
    for r in regs:
        if not 0 <= r < 32:
            raise EncodingError(f"register x{r} out of range")


def _check_signed(value: int, bits: int, what: str) -> None:
    if not -(1 << (bits - 1)) <= value < (1 << (bits - 1)):
        raise EncodingError(f"{what} immediate {value} does not fit in {bits} signed bits")


def encode(ins: Instr) -> int:
    """Assemble ``ins`` into a 32-bit instruction word."""
    name, rd, rs1, rs2, imm = ins.name, ins.rd, ins.rs1, ins.rs2, ins.imm
    _check_reg(rd, rs1, rs2)
    if name in R_TYPE:
        f3, f7 = R_TYPE[name]
        return (f7 << 25) | (rs2 << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | OP_REG
    if name in I_ALU or name in ("lw", "jalr"):
        _check_signed(imm, 12, name)
        if name == "lw":
            f3, opcode = 0b010, OP_LOAD
        elif name == "jalr":
            f3, opcode = 0b000, OP_JALR
        else:
            f3, opcode = I_ALU[name], OP_IMM
        return ((imm & 0xFFF) << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | opcode
    if name in I_SHIFT:
        if not 0 <= imm < 32:
            raise EncodingError(f"shift amount {imm} out of range")
        f3, f7 = I_SHIFT[name]
        return (f7 << 25) | (imm << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | OP_IMM
    if name == "sw":
        _check_signed(imm, 12, name)
        imm &= 0xFFF
        return ((_bits(imm, 11, 5) << 25) | (rs2 << 20) | (rs1 << 15) | (0b010 << 12)
                | (_bits(imm, 4, 0) << 7) | OP_STORE)
    if name in BRANCHES:
        _check_signed(imm, 13, name)
        if imm & 1:
            raise EncodingError(f"branch offset {imm} is odd")
        imm &= 0x1FFF
        return ((_bits(imm, 12, 12) << 31) | (_bits(imm, 10, 5) << 25) | (rs2 << 20)
                | (rs1 << 15) | (BRANCHES[name] << 12) | (_bits(imm, 4, 1) << 8)
                | (_bits(imm, 11, 11) << 7) | OP_BRANCH)
    if name in ("lui", "auipc"):
        if not 0 <= imm < (1 << 20):
            raise EncodingError(f"upper immediate {imm:#x} out of range")
        return (imm << 12) | (rd << 7) | (OP_LUI if name == "lui" else OP_AUIPC)
    if name == "jal":
        _check_signed(imm, 21, name)
        if imm & 1:
            raise EncodingError(f"jump offset {imm} is odd")
        imm &= 0x1FFFFF
        return ((_bits(imm, 20, 20) << 31) | (_bits(imm, 10, 1) << 21) | (_bits(imm, 11, 11) << 20)
                | (_bits(imm, 19, 12) << 12) | (rd << 7) | OP_JAL)
    raise EncodingError(f"unsupported instruction {name!r}")


def decode(word: int) -> Instr:
    """Decode a 32-bit word; unsupported encodings give ``ILLEGAL``."""
    word &= 0xFFFFFFFF
    opcode = word & 0x7F
    rd = _bits(word, 11, 7)
    f3 = _bits(word, 14, 12)
    rs1 = _bits(word, 19, 15)
    rs2 = _bits(word, 24, 20)
    f7 = _bits(word, 31, 25)
    if opcode == OP_REG:
        name = _R_DECODE.get((f3, f7))
        return Instr(name, rd, rs1, rs2) if name else ILLEGAL
    if opcode == OP_IMM:
        if f3 in (0b001, 0b101):
            name = _I_SHIFT_DECODE.get((f3, f7))
            return Instr(name, rd, rs1, 0, rs2) if name else ILLEGAL
        return Instr(_I_ALU_DECODE[f3], rd, rs1, 0, sign_extend(word >> 20, 12))
    if opcode == OP_LOAD:
        return Instr("lw", rd, rs1, 0, sign_extend(word >> 20, 12)) if f3 == 0b010 else ILLEGAL
    if opcode == OP_JALR:
        return Instr("jalr", rd, rs1, 0, sign_extend(word >> 20, 12)) if f3 == 0 else ILLEGAL
    if opcode == OP_STORE:
        if f3 != 0b010:
            return ILLEGAL
        return Instr("sw", 0, rs1, rs2, sign_extend((f7 << 5) | rd, 12))
    if opcode == OP_BRANCH:
        name = _BRANCH_DECODE.get(f3)
        if name is None:
            return ILLEGAL
        imm = ((_bits(word, 31, 31) << 12) | (_bits(word, 7, 7) << 11)
               | (_bits(word, 30, 25) << 5) | (_bits(word, 11, 8) << 1))
        return Instr(name, 0, rs1, rs2, sign_extend(imm, 13))
    if opcode in (OP_LUI, OP_AUIPC):
        return Instr("lui" if opcode == OP_LUI else "auipc", rd, 0, 0, word >> 12)
    if opcode == OP_JAL:
        imm = ((_bits(word, 31, 31) << 20) | (_bits(word, 19, 12) << 12)
               | (_bits(word, 20, 20) << 11) | (_bits(word, 30, 21) << 1))
        return Instr("jal", rd, 0, 0, sign_extend(imm, 21))
    return ILLEGAL


def disassemble(ins: Instr) -> str:
    n = ins.name
    if n == "illegal":
        return "illegal"
    if ins == NOP:
        return "nop"
    if n in R_TYPE:
        return f"{n} x{ins.rd}, x{ins.rs1}, x{ins.rs2}"
    if n in I_ALU or n in I_SHIFT:
        return f"{n} x{ins.rd}, x{ins.rs1}, {ins.imm}"
    if n in ("lw", "jalr"):
        return f"{n} x{ins.rd}, {ins.imm}(x{ins.rs1})"
    if n == "sw":
        return f"sw x{ins.rs2}, {ins.imm}(x{ins.rs1})"
    if n in BRANCHES:
        return f"{n} x{ins.rs1}, x{ins.rs2}, {ins.imm:+d}"
    if n in ("lui", "auipc"):
        return f"{n} x{ins.rd}, {ins.imm:#x}"
    return f"jal x{ins.rd}, {ins.imm:+d}"


def words_to_bytes(words) -> bytes:
    return b"".join(int(w & 0xFFFFFFFF).to_bytes(4, "little") for w in words)


def bytes_to_words(data: bytes) -> list[int]:
    if len(data) % 4:
        raise EncodingError("binary length is not a multiple of 4 bytes")
    return [int.from_bytes(data[i:i + 4], "little") for i in range(0, len(data), 4)]
