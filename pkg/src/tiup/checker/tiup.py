"""Bounded search for violations of Finish_Reg -> Result_Reg."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..compiler.emit import InstrSequence, compile_tautology
from ..simulator import kernel as K
from ..simulator.anomalies import GOLDEN, AnomalySpec
from ..simulator.machine import Scheduler, dump_trace, run_batch, run_to_finish
from .search import Budget, assignments, plan_size, to_signed

PASS, VIOLATED, HANG, EXHAUSTED = "pass", "violated", "hang", "exhausted-budget"
_SEVERITY = {PASS: 0, EXHAUSTED: 1, HANG: 2, VIOLATED: 3}


@dataclass
class Counterexample:
    sigma: dict[str, int]
    retired: int
    cycles: int
    result_reg: int
    finish_reg: int
    trace: str = ""
    # self-consistency baseline: register pairs that diverged
    diverged: list[tuple[int, int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {"sigma": self.sigma, "retired": self.retired, "cycles": self.cycles,
             "result_reg": self.result_reg, "finish_reg": self.finish_reg}
        if self.diverged:
            d["diverged"] = [list(p) for p in self.diverged]
        return d


@dataclass
class Verdict:
    name: str
    provenance: tuple
    method: str
    outcome: str
    assignments_tried: int
    counterexample: Counterexample | None = None
    hang_sigma: dict[str, int] | None = None
    wall_time: float = 0.0

    @property
    def detected(self) -> bool:
        return self.outcome in (VIOLATED, HANG)

    def to_dict(self) -> dict:
        """JSON form; wall time is deliberately left out."""
        d = {"name": self.name, "provenance": _prov(self.provenance), "method": self.method,
             "outcome": self.outcome, "assignments_tried": self.assignments_tried}
        if self.counterexample is not None:
            d["counterexample"] = self.counterexample.to_dict()
        if self.hang_sigma is not None:
            d["hang_sigma"] = self.hang_sigma
        return d


def _prov(p) -> list:
    if not p:
        return []
    template, seeds = p
    return [template, list(seeds)]


@dataclass
class Report:
    method: str
    anomaly: str
    verdicts: list[Verdict]

    @property
    def outcome(self) -> str:
        if not self.verdicts:
            return PASS
        return max((v.outcome for v in self.verdicts), key=_SEVERITY.__getitem__)

    @property
    def detected(self) -> bool:
        return self.outcome in (VIOLATED, HANG)

    def first_detection(self) -> Verdict | None:
        return next((v for v in self.verdicts if v.detected), None)


def _input_matrix(seq: InstrSequence, values: np.ndarray) -> np.ndarray:
    regs = np.zeros((len(values), 32), dtype=np.int64)
    for col, r in enumerate(seq.input_registers().values()):
        regs[:, r] = values[:, col]
    return regs


def sigma_of(seq: InstrSequence, row) -> dict[str, int]:
    return {name: to_signed(int(v)) for name, v in zip(seq.inputs, row)}


def replay_tiup(seq: InstrSequence, sigma: dict[str, int],
                anomaly: AnomalySpec = GOLDEN):
    """Traced re-execution of one assignment."""
    return run_to_finish(seq, sigma, anomaly)


def _search(words, nvars, anomaly, budget, key, regs_of, judge, mode, mem_words):
    """Scan the plan chunk by chunk.

    Returns (index of first detection, outcome, assignments tried, row).
    """
    sched = Scheduler.of(words)
    total, truncated = plan_size(nvars, budget)
    start = 0
    while start < total:
        stop = min(total, start + budget.chunk)
        values = assignments(nvars, budget, key, start, stop)
        res = run_batch(sched, regs_of(values), anomaly, mode=mode, mem_words=mem_words)
        bad = judge(res)
        hang = res.status == K.HANG
        hit = np.flatnonzero(bad | hang)
        if hit.size:
            i = int(hit[0])
            kind = HANG if hang[i] else VIOLATED
            return start + i, kind, start + i + 1, values[i]
        start = stop
    return None, (EXHAUSTED if truncated else PASS), total, None


def verify_one(seq: InstrSequence, anomaly: AnomalySpec = GOLDEN,
               budget: Budget = Budget(), name: str | None = None) -> Verdict:
    """Check one compiled tautology over the budgeted assignments."""
    name = name or seq.name
    t0 = time.perf_counter()

    def judge(res):
        return (res.status == K.FINISHED) & (res.finish != 0) & (res.result == 0)

    _, kind, tried, row = _search(seq.words, len(seq.inputs), anomaly, budget, name,
                                  lambda v: _input_matrix(seq, v), judge,
                                  K.MODE_FINISH, 256)
    verdict = Verdict(name, seq.provenance, "tiup", kind, tried)
    if kind == VIOLATED:
        sigma = sigma_of(seq, row)
        st = replay_tiup(seq, sigma, anomaly)
        header = f"tautology {name}\nanomaly {anomaly.id}\n" + " ".join(
            f"{k}={v}" for k, v in sigma.items())
        verdict.counterexample = Counterexample(sigma, st.retired, st.cycle, st.result_reg,
                                                st.finish_reg, dump_trace(st, header))
    elif kind == HANG:
        verdict.hang_sigma = sigma_of(seq, row)
    verdict.wall_time = time.perf_counter() - t0
    return verdict


def compile_corpus(tautologies) -> list[InstrSequence]:
    return [t if isinstance(t, InstrSequence) else compile_tautology(t) for t in tautologies]


def verify_tiup(tautologies, anomaly: AnomalySpec = GOLDEN, budget: Budget = Budget(),
                stop_at_first: bool = False) -> Report:
    """Check every tautology independently; aggregate by worst outcome."""
    verdicts = []
    for seq in compile_corpus(tautologies):
        v = verify_one(seq, anomaly, budget)
        verdicts.append(v)
        if stop_at_first and v.detected:
            break
    return Report("tiup", anomaly.id, verdicts)


def is_violating(state) -> bool:
    return state.finish_reg != 0 and state.result_reg == 0

