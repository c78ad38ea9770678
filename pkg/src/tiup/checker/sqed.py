"""Self-consistency baseline: EDDI-V style duplication with +16 renaming.

The duplicate runs after the original in the same instruction stream,
on the upper register bank and on a separate memory half.  Consistency
is judged on the drained final state: every register the original
writes must equal its +16 partner.  The BNE check words are emitted for
reference but evaluated as a property rather than executed on the DUV,
so a core that mis-executes branches cannot trip the checks themselves.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..compiler import isa
from ..compiler.emit import SQED_PLAN, InstrSequence, compile_tautology
from ..compiler.ir import CompileError
from ..simulator import kernel as K
from ..simulator.anomalies import GOLDEN, AnomalySpec
from ..simulator.machine import dump_trace, run_to_finish
from .search import Budget
from .tiup import HANG, VIOLATED, Counterexample, Report, Verdict, _search

OFFSET = 16
DUP_MEM_BYTES = 1024
SQED_MEM_WORDS = 512


class EddivError(ValueError):
    pass


def _rename(ins: isa.Instr) -> isa.Instr:
    def r(x: int) -> int:
        if x == 0:
            return 0
        if not 1 <= x < OFFSET:
            raise EddivError(f"register x{x} is outside the renameable range x1..x15")
        return x + OFFSET

    rd = r(ins.rd) if ins.writes_rd else ins.rd
    srcs = ins.sources()
    rs1 = r(ins.rs1) if len(srcs) >= 1 else ins.rs1
    rs2 = r(ins.rs2) if len(srcs) == 2 else ins.rs2
    imm = ins.imm + DUP_MEM_BYTES if ins.name in ("lw", "sw") else ins.imm
    return isa.Instr(ins.name, rd, rs1, rs2, imm)


@dataclass
class EddivProgram:
    original: list[int]
    duplicate: list[int]
    checks: list[tuple[int, int]]
    name: str = ""
    provenance: tuple = ()
    inputs: tuple[str, ...] = ()
    input_regs: tuple[int, ...] = ()

    @property
    def words(self) -> list[int]:
        """Instruction stream executed on the DUV: original then duplicate."""
        return self.original + self.duplicate

    def check_words(self) -> list[int]:
        """``bne r, r+16, ERROR`` for every pair; ERROR is the word after the last."""
        n = len(self.checks)
        return [isa.encode(isa.Instr("bne", 0, a, b, (n - i) * 4))
                for i, (a, b) in enumerate(self.checks)]

    def listing(self) -> str:
        lines = [f"# self-consistency program: {self.name}"]
        for w in self.original:
            lines.append(f"    {isa.disassemble(isa.decode(w))}")
        lines.append("# duplicate")
        for w in self.duplicate:
            lines.append(f"    {isa.disassemble(isa.decode(w))}")
        lines.append("# checks")
        for w in self.check_words():
            lines.append(f"    {isa.disassemble(isa.decode(w))}")
        lines.append("ERROR:")
        return "\n".join(lines) + "\n"

    def initial_registers(self, values: np.ndarray) -> np.ndarray:
        """QED-consistent start: each input in r and r+16, all else 0."""
        regs = np.zeros((len(values), 32), dtype=np.int64)
        for col, r in enumerate(self.input_regs):
            regs[:, r] = values[:, col]
            regs[:, r + OFFSET] = values[:, col]
        return regs


def build_eddiv(original, name: str = "", provenance: tuple = ()) -> EddivProgram:
    """Duplicate ``original`` (an InstrSequence or a word list) onto x17..x31."""
    if isinstance(original, InstrSequence):
        name = name or original.name
        provenance = provenance or original.provenance
        words = list(original.words)
        inputs = original.inputs
        input_regs = tuple(original.input_registers().values())
    else:
        words, inputs, input_regs = list(original), (), ()
    dup, dests = [], []
    for w in words:
        ins = isa.decode(w)
        if ins.illegal:
            raise EddivError(f"cannot duplicate illegal word {w:#010x}")
        if ins.writes_rd and ins.rd != 0 and ins.rd not in dests:
            dests.append(ins.rd)
        dup.append(isa.encode(_rename(ins)))
    checks = [(r, r + OFFSET) for r in sorted(dests)]
    return EddivProgram(words, dup, checks, name, provenance, tuple(inputs), input_regs)


def diverged_pairs(prog: EddivProgram, regs) -> list[tuple[int, int]]:
    return [(a, b) for a, b in prog.checks if int(regs[a]) != int(regs[b])]


def replay_sqed(prog: EddivProgram, sigma: dict[str, int], anomaly: AnomalySpec = GOLDEN):
    regs = {}
    for name, r in zip(prog.inputs, prog.input_regs):
        regs[r] = regs[r + OFFSET] = sigma[name]
    return run_to_finish(prog.words, regs=regs, anomaly=anomaly, mode=K.MODE_DRAIN,
                         mem_words=SQED_MEM_WORDS)


def verify_sqed_one(prog: EddivProgram, anomaly: AnomalySpec = GOLDEN,
                    budget: Budget = Budget()) -> Verdict:
    t0 = time.perf_counter()
    pairs = np.array(prog.checks, dtype=np.int64).reshape(-1, 2)

    def judge(res):
        drained = res.status == K.DRAINED
        if not len(pairs):
            return np.zeros(len(drained), dtype=bool)
        diff = (res.regs[:, pairs[:, 0]] != res.regs[:, pairs[:, 1]]).any(axis=1)
        return drained & diff

    _, kind, tried, row = _search(prog.words, len(prog.inputs), anomaly, budget, prog.name,
                                  prog.initial_registers, judge, K.MODE_DRAIN, SQED_MEM_WORDS)
    verdict = Verdict(prog.name, prog.provenance, "sqed", kind, tried)
    sigma = None if row is None else {n: _signed(v) for n, v in zip(prog.inputs, row)}
    if kind == VIOLATED:
        st = replay_sqed(prog, sigma, anomaly)
        header = f"self-consistency {prog.name}\nanomaly {anomaly.id}\n" + " ".join(
            f"{k}={v}" for k, v in sigma.items())
        verdict.counterexample = Counterexample(
            sigma, st.retired, st.cycle, st.result_reg, st.finish_reg,
            dump_trace(st, header), diverged_pairs(prog, st.regs))
    elif kind == HANG:
        verdict.hang_sigma = sigma
    verdict.wall_time = time.perf_counter() - t0
    return verdict


def _signed(v) -> int:
    v = int(v) & 0xFFFFFFFF
    return v - (1 << 32) if v >> 31 else v


def sqed_corpus(tautologies) -> tuple[list[EddivProgram], list[str]]:
    """Self-consistency programs from the compiled tautology bodies.

    Bodies that do not fit x1..x15 are skipped and reported by name.
    """
    progs, skipped = [], []
    for t in tautologies:
        try:
            seq = compile_tautology(t, SQED_PLAN)
        except CompileError:
            skipped.append(getattr(t, "name", str(t)))
            continue
        progs.append(build_eddiv(seq))
    return progs, skipped


def verify_sqed(programs, anomaly: AnomalySpec = GOLDEN, budget: Budget = Budget(),
                stop_at_first: bool = False) -> Report:
    verdicts = []
    for prog in programs:
        v = verify_sqed_one(prog, anomaly, budget)
        verdicts.append(v)
        if stop_at_first and v.detected:
            break
    return Report("sqed", anomaly.id, verdicts)
