"""Formula to RV32I compilation."""

from .emit import (DEFAULT_PLAN, FINISH_REG, RESULT_REG, SQED_PLAN, InstrSequence,
                   RegPlan, compile_tautology, emit_rv32i)
from .ir import CompileError, IrProgram, lower_to_ir
from .isa import Instr, decode, disassemble, encode

__all__ = [
    "CompileError", "DEFAULT_PLAN", "FINISH_REG", "IrProgram", "Instr", "InstrSequence",
    "RESULT_REG", "RegPlan", "SQED_PLAN", "compile_tautology", "decode", "disassemble",
    "emit_rv32i", "encode", "lower_to_ir",
]
