"""Input-assignment search space: small-magnitude grid, then random samples."""

from __future__ import annotations

import itertools
import zlib
from dataclasses import asdict, dataclass

import numpy as np

MASK32 = 0xFFFFFFFF


@dataclass(frozen=True)
class Budget:
    """How many assignments to try per property.

    The grid gives every variable each value in [grid_lo, grid_hi]
    (sign-extended to 32 bits).  With ``grid_limit`` set and the full grid
    larger than it, each variable instead ranges over the first m
    corner-priority values, m^k <= grid_limit.  ``samples`` uniformly random
    32-bit assignments follow, seeded from ``seed`` and the property's key.
    ``max_runs`` truncates the whole plan.
    """

    grid_lo: int = -8
    grid_hi: int = 7
    samples: int = 2000
    seed: int = 20240601
    grid_limit: int | None = None
    max_runs: int | None = None
    chunk: int = 4096

    def to_dict(self) -> dict:
        return asdict(self)


def corner_order(lo: int, hi: int) -> list[int]:
    """Values in [lo, hi], most bug-prone first."""
    first = [0, 1, -1, 2, -2, hi, lo]
    k = 2
    while (1 << k) <= max(abs(lo), abs(hi)):
        first += [1 << k, -(1 << k)]
        k += 1
    rest = sorted(range(lo, hi + 1), key=lambda v: (abs(v), v))
    out: list[int] = []
    for v in first + rest:
        if lo <= v <= hi and v not in out:
            out.append(v)
    return out


def grid_values(nvars: int, budget: Budget) -> list[int]:
    full = list(range(budget.grid_lo, budget.grid_hi + 1))
    if nvars == 0 or budget.grid_limit is None or len(full) ** nvars <= budget.grid_limit:
        return full
    m = 1
    while (m + 1) ** nvars <= budget.grid_limit:
        m += 1
    return sorted(corner_order(budget.grid_lo, budget.grid_hi)[:m])


def plan_size(nvars: int, budget: Budget) -> tuple[int, bool]:
    """(number of assignments that will be tried, whether max_runs truncated)."""
    total = len(grid_values(nvars, budget)) ** nvars + budget.samples
    if budget.max_runs is not None and total > budget.max_runs:
        return budget.max_runs, True
    return total, False


def assignments(nvars: int, budget: Budget, key: str, start: int = 0,
                stop: int | None = None) -> np.ndarray:
    """Rows start..stop of the plan as unsigned 32-bit values (shape [n, nvars]).

    Grid rows come first in lexicographic order (first variable slowest),
    then the random samples.
    """
    total, _ = plan_size(nvars, budget)
    stop = total if stop is None else min(stop, total)
    values = np.array(grid_values(nvars, budget), dtype=np.int64)
    ngrid = len(values) ** nvars
    rows = []
    if start < ngrid:
        flat = np.arange(start, min(stop, ngrid), dtype=np.int64)
        cols = []
        for pos in range(nvars):
            base = len(values) ** (nvars - 1 - pos)
            cols.append(values[(flat // base) % len(values)])
        rows.append(np.stack(cols, axis=1) if cols else np.zeros((len(flat), 0), np.int64))
    if stop > ngrid:
        rng = np.random.default_rng([budget.seed, zlib.crc32(key.encode())])
        rand = rng.integers(0, 1 << 32, size=(budget.samples, nvars), dtype=np.int64)
        lo = max(start, ngrid) - ngrid
        rows.append(rand[lo: stop - ngrid])
    if not rows:
        return np.zeros((0, nvars), dtype=np.int64)
    return np.concatenate(rows) & MASK32


def to_signed(v: int) -> int:
    v &= MASK32
    return v - (1 << 32) if v >> 31 else v


def grid_product(nvars: int, budget: Budget):
    """Pure-Python iterator over the grid part (for tests)."""
    return itertools.product(grid_values(nvars, budget), repeat=nvars)
