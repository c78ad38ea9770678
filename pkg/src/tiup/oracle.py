"""Exhaustive small-width tautology oracle.

Every assignment of W-bit values to the free variables is evaluated with
numpy, chunk by chunk.  Enumeration is lexicographic over the variables
sorted by name, each taking the unsigned values 0 .. 2^W - 1, so the first
falsifier reported is stable.  Memory starts all-zero and has 8 words.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .formula import (BOOL, BinOp, Const, Formula, FormulaError, MemLd, MemRef,
                      MemSt, Node, UnaryOp, Var, to_signed, type_of, walk)

DEFAULT_LIMIT = 1 << 26
ORACLE_MEM_SIZE = 8
CHUNK = 1 << 18


class OracleError(FormulaError):
    pass


class StateSpaceTooLarge(OracleError):
    pass


@dataclass(frozen=True)
class OracleVerdict:
    valid: bool
    width: int
    assignments_checked: int
    counterexample: dict[str, int] | None = None
    # initial memory used for the check; None when the formula has no memory ops
    memory: dict[int, int] | None = None

    def describe(self) -> str:
        if self.valid:
            return f"valid at W={self.width} ({self.assignments_checked} assignments)"
        pairs = " ".join(f"{k}={v}" for k, v in self.counterexample.items())
        return f"falsified at W={self.width}: {pairs}"


def _eval_vec(node: Node, env: dict[str, np.ndarray], width: int, n: int):
    """Vectorised evaluation; bitvectors are unsigned int64 arrays.

    Memory values are a list of (index, value) writes applied to the
    all-zero background, oldest first.
    """
    mask = np.int64((1 << width) - 1)
    sign = np.int64(1 << (width - 1))

    def signed(a):
        return np.where(a & sign, a - (mask + 1), a)

    def ev(nd):
        if isinstance(nd, Var):
            return env[nd.name]
        if isinstance(nd, Const):
            return np.full(n, nd.value & int(mask), dtype=np.int64)
        if isinstance(nd, MemRef):
            return []
        if isinstance(nd, MemSt):
            writes = list(ev(nd.mem))
            writes.append((ev(nd.index) % ORACLE_MEM_SIZE, ev(nd.value)))
            return writes
        if isinstance(nd, MemLd):
            writes = ev(nd.mem)
            idx = ev(nd.index) % ORACLE_MEM_SIZE
            out = np.zeros(n, dtype=np.int64)
            for widx, wval in writes:
                out = np.where(widx == idx, wval, out)
            return out
        if isinstance(nd, UnaryOp):
            a = ev(nd.child)
            if nd.op == "lognot":
                return 1 - a
            if nd.op == "bitnot":
                return ~a & mask
            return -a & mask
        assert isinstance(nd, BinOp)
        op = nd.op
        a, b = ev(nd.left), ev(nd.right)
        if op in ("logand", "and"):
            return a & b
        if op in ("logor", "or"):
            return a | b
        if op == "implies":
            return (1 - a) | b
        if op == "xor":
            return a ^ b
        if op == "add":
            return (a + b) & mask
        if op == "sub":
            return (a - b) & mask
        if op == "mul":
            # operands are < 2^W with W <= 16, so the product fits int64
            return (a * b) & mask
        if op == "eq":
            return (a == b).astype(np.int64)
        if op == "ne":
            return (a != b).astype(np.int64)
        if op == "lt_u":
            return (a < b).astype(np.int64)
        if op == "lt_s":
            return (signed(a) < signed(b)).astype(np.int64)
        if op == "gt_s":
            return (signed(a) > signed(b)).astype(np.int64)
        raise OracleError(f"unknown operator {op}")

    return ev(node)


def check_tautology(f: Formula, width: int = 4, limit: int = DEFAULT_LIMIT) -> OracleVerdict:
    """Exhaustively decide whether ``f`` holds for every W-bit assignment."""
    if not 1 <= width <= 16:
        raise OracleError(f"oracle width must be in 1..16, got {width}")
    if type_of(f.root) != BOOL:
        raise OracleError("oracle expects a boolean-valued formula")
    names = f.free_vars
    total = 1 << (width * len(names))
    if total > limit:
        raise StateSpaceTooLarge(
            f"{total} assignments ({len(names)} variables at W={width}) exceed limit {limit}")
    memory = {} if any(isinstance(n, (MemLd, MemSt)) for n in walk(f.root)) else None

    vmask = (1 << width) - 1
    start = 0
    while start < total:
        stop = min(total, start + CHUNK)
        flat = np.arange(start, stop, dtype=np.int64)
        env = {}
        for pos, name in enumerate(names):
            shift = width * (len(names) - 1 - pos)
            env[name] = (flat >> shift) & vmask
        result = np.asarray(_eval_vec(f.root, env, width, stop - start))
        bad = np.flatnonzero(result == 0)
        if bad.size:
            i = int(bad[0])
            cex = {name: to_signed(int(env[name][i]), width) for name in names}
            return OracleVerdict(False, width, start + i + 1, cex, memory)
        start = stop
    return OracleVerdict(True, width, total, None, memory)


@dataclass
class AdmissionReport:
    admitted: list[Formula] = field(default_factory=list)
    rejected: list[tuple[Formula, OracleVerdict]] = field(default_factory=list)


def admit_seeds(library, width: int = 4, confirm_width: int | None = 5,
                limit: int = DEFAULT_LIMIT) -> AdmissionReport:
    """Split a seed library into admitted and rejected seeds.

    A seed is admitted when it is valid at ``width`` and, if given, at
    ``confirm_width`` too.  Rejections keep the falsifying verdict.
    """
    report = AdmissionReport()
    for seed in library:
        verdict = check_tautology(seed, width, limit)
        if verdict.valid and confirm_width is not None:
            verdict = check_tautology(seed, confirm_width, limit)
        if verdict.valid:
            report.admitted.append(seed)
        else:
            report.rejected.append((seed, verdict))
    return report
