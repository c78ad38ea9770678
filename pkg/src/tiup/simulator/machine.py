"""Machine state, scheduler and run helpers around the pipeline kernel."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..compiler import isa
from ..compiler.emit import FINISH_REG, RESULT_REG, InstrSequence
from . import kernel as K
from .anomalies import GOLDEN, AnomalySpec

TIUP_MEM_WORDS = 256

OUTCOME_NAMES = {K.FINISHED: "finished", K.HANG: "hang", K.DRAINED: "drained",
                 K.RUNNING: "running"}
_OP_NAMES = {v: k for k, v in isa.OPCODE_IDS.items()}


def predecode(words) -> np.ndarray:
    """(op id, rd, rs1, rs2, imm) rows for the kernel."""
    rows = np.zeros((max(len(words), 1), 5), dtype=np.int64)
    for i, w in enumerate(words):
        ins = isa.decode(w)
        rows[i] = (isa.OPCODE_IDS.get(ins.name, isa.ILLEGAL_ID), ins.rd, ins.rs1, ins.rs2, ins.imm)
    return rows


def first_multiply(words) -> int:
    for i, w in enumerate(words):
        if isa.decode(w).name in ("mul", "mulh", "mulhsu", "mulhu"):
            return i
    return -1


@dataclass
class Scheduler:
    """Instruction queue served to fetch.

    An in-range pc yields queue[pc]; the first out-of-range fetches yield
    the epilogue ``Result_Reg <- 0; Finish_Reg <- 1`` and NOPs after that.
    """

    words: list[int]
    prog: np.ndarray = field(init=False, repr=False)
    first_mul: int = field(init=False)

    def __post_init__(self):
        self.words = [int(w) & 0xFFFFFFFF for w in self.words]
        self.prog = predecode(self.words)
        self.first_mul = first_multiply(self.words)

    @classmethod
    def of(cls, seq) -> "Scheduler":
        if isinstance(seq, Scheduler):
            return seq
        return cls(list(getattr(seq, "words", seq)))

    def __len__(self) -> int:
        return len(self.words)

    def serve(self, pc: int, epi: int = 0) -> isa.Instr:
        if 0 <= pc < len(self.words):
            return isa.decode(self.words[pc])
        if epi == 0:
            return isa.Instr("andi", RESULT_REG, RESULT_REG, 0, 0)
        if epi == 1:
            return isa.Instr("addi", FINISH_REG, 0, 0, 1)
        return isa.NOP


@dataclass(frozen=True)
class TraceEntry:
    cycle: int
    pc: int
    instr: isa.Instr
    squashed: bool
    wrote: int | None = None
    value: int = 0

    def __str__(self) -> str:
        if self.pc >= 0:
            where = f"{self.pc * 4:#06x}"
        else:
            where = {K.Q_EPI0: "epi.0", K.Q_EPI1: "epi.1"}.get(self.pc, "nop")
        text = f"{self.cycle:6d}  {where:>6}  {isa.disassemble(self.instr):<24}"
        if self.squashed:
            return text + "[squashed]"
        if self.wrote is not None:
            return text + f"x{self.wrote}={self.value:#010x}"
        return text.rstrip()


@dataclass
class MachineState:
    regs: np.ndarray
    mem: np.ndarray
    lat: np.ndarray = field(default_factory=lambda: np.zeros((4, K.NF), dtype=np.int64))
    ctl: np.ndarray = field(default_factory=lambda: np.zeros(K.NCTL, dtype=np.int64))
    trace: list[TraceEntry] = field(default_factory=list)

    @classmethod
    def reset(cls, regs=None, mem_words: int = TIUP_MEM_WORDS) -> "MachineState":
        r = np.zeros(32, dtype=np.int64)
        if regs is not None:
            for i, v in (regs.items() if isinstance(regs, dict) else enumerate(regs)):
                r[i] = int(v) & 0xFFFFFFFF
        return cls(r, np.zeros(mem_words, dtype=np.int64))

    @property
    def pc(self) -> int:
        return int(self.ctl[K.PC])

    @property
    def cycle(self) -> int:
        return int(self.ctl[K.CYCLE])

    @property
    def result_reg(self) -> int:
        return int(self.regs[RESULT_REG])

    @property
    def finish_reg(self) -> int:
        return int(self.regs[FINISH_REG])

    @property
    def retired(self) -> int:
        return int(self.ctl[K.RETIRED])

    @property
    def illegal_retired(self) -> int:
        return int(self.ctl[K.ILLEGAL])

    @property
    def status(self) -> str:
        return OUTCOME_NAMES[int(self.ctl[K.STATUS])]

    @property
    def committed_trace(self) -> list[TraceEntry]:
        return [t for t in self.trace if not t.squashed]

    def reg(self, i: int) -> int:
        return int(self.regs[i])

    def copy(self) -> "MachineState":
        return MachineState(self.regs.copy(), self.mem.copy(), self.lat.copy(),
                            self.ctl.copy(), list(self.trace))


def _decode_trace(rows: np.ndarray) -> list[TraceEntry]:
    out = []
    for row in rows:
        op = int(row[K.T_OP])
        name = _OP_NAMES.get(op, "illegal")
        ins = isa.Instr(name, int(row[K.T_RD]), int(row[K.T_RS1]), int(row[K.T_RS2]),
                        int(row[K.T_IMM]))
        if name in isa.BRANCHES or name == "sw":
            ins = isa.Instr(name, 0, ins.rs1, ins.rs2, ins.imm)
        squashed = int(row[K.T_KIND]) == K.K_SQUASHED
        wrote = int(row[K.T_RD]) if (not squashed and row[K.T_WR]) else None
        out.append(TraceEntry(int(row[K.T_CYCLE]), int(row[K.T_Q]), ins, squashed, wrote,
                              int(row[K.T_VAL])))
    return out


def default_cycle_cap(n: int) -> int:
    return 10 * n + 100


def _advance(state: MachineState, sched: Scheduler, anomaly: AnomalySpec, mode: int,
             limit: int, traced: bool) -> None:
    if state.ctl[K.CYCLE] == 0 and state.ctl[K.RETIRED] == 0:
        state.ctl[K.FIRST_MUL] = sched.first_mul
    cap = 4 * (limit - int(state.ctl[K.CYCLE])) + 8 if traced else 1
    buf = np.zeros((max(cap, 1), K.NT), dtype=np.int64)
    state.ctl[K.NTRACE] = 0
    K.run(sched.prog, len(sched), state.regs, state.mem, state.lat, state.ctl,
          anomaly.vector(), mode, limit, buf, traced)
    if traced:
        state.trace.extend(_decode_trace(buf[: int(state.ctl[K.NTRACE])]))


def step(state: MachineState, scheduler, anomaly: AnomalySpec = GOLDEN,
         mode: int = K.MODE_FINISH) -> MachineState:
    """Advance one clock cycle (in place) and return the state."""
    if state.ctl[K.STATUS] != K.RUNNING:
        return state
    sched = Scheduler.of(scheduler)
    _advance(state, sched, anomaly, mode, int(state.ctl[K.CYCLE]) + 1, True)
    if state.ctl[K.STATUS] == K.HANG:
        state.ctl[K.STATUS] = K.RUNNING
    return state


def initial_registers(seq: InstrSequence, inputs: dict[str, int]) -> dict[int, int]:
    regs = {}
    for name, r in seq.input_registers().items():
        if name not in inputs:
            raise KeyError(f"no value for input {name!r}")
        regs[r] = inputs[name]
    return regs


def run_to_finish(seq, inputs=None, anomaly: AnomalySpec = GOLDEN, *,
                  regs=None, mode: int = K.MODE_FINISH, max_cycles: int | None = None,
                  mem_words: int = TIUP_MEM_WORDS, traced: bool = True) -> MachineState:
    """Run from reset until Finish_Reg is set (or the pipeline drains).

    ``inputs`` maps formula variables to values via the sequence's symbol
    table; ``regs`` sets architectural registers directly.  A run that
    reaches the cycle cap ends with status ``hang``.
    """
    sched = Scheduler.of(seq)
    init = dict(regs or {})
    if inputs:
        init.update(initial_registers(seq, inputs))
    state = MachineState.reset(init, mem_words)
    limit = max_cycles if max_cycles is not None else default_cycle_cap(len(sched))
    _advance(state, sched, anomaly, mode, limit, traced)
    return state


@dataclass
class BatchResult:
    status: np.ndarray
    regs: np.ndarray
    retired: np.ndarray
    cycles: np.ndarray

    @property
    def result(self) -> np.ndarray:
        return self.regs[:, RESULT_REG]

    @property
    def finish(self) -> np.ndarray:
        return self.regs[:, FINISH_REG]


def run_batch(seq, init_regs: np.ndarray, anomaly: AnomalySpec = GOLDEN, *,
              mode: int = K.MODE_FINISH, max_cycles: int | None = None,
              mem_words: int = TIUP_MEM_WORDS) -> BatchResult:
    """Untraced runs of one program from each row of ``init_regs`` (N x 32)."""
    sched = Scheduler.of(seq)
    limit = max_cycles if max_cycles is not None else default_cycle_cap(len(sched))
    init = np.ascontiguousarray(init_regs, dtype=np.int64) & 0xFFFFFFFF
    status, final, retired, cycles = K.run_batch(
        sched.prog, len(sched), init, anomaly.vector(), mode, limit, mem_words,
        sched.first_mul)
    return BatchResult(status, final, retired, cycles)


def dump_trace(state: MachineState, header: str = "") -> str:
    lines = [f"# {line}" for line in header.splitlines()]
    lines.append("# cycle      pc  instruction             writeback")
    lines.extend(str(t) for t in state.trace)
    lines.append(f"# status={state.status} cycles={state.cycle} retired={state.retired} "
                 f"Result_Reg={state.result_reg} Finish_Reg={state.finish_reg}")
    return "\n".join(lines) + "\n"
