"""Anomaly catalog: injectable micro-architectural bugs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernel as K


class UnknownAnomaly(KeyError):
    pass


@dataclass(frozen=True)
class AnomalySpec:
    id: str
    stage: str
    synopsis: str
    category: str
    mutation: str
    params: tuple[tuple[str, int | str], ...] = ()
    code: int = K.A_NONE

    @property
    def golden(self) -> bool:
        return self.code == K.A_NONE

    def param(self, name: str):
        return dict(self.params)[name]

    def vector(self) -> np.ndarray:
        vec = np.zeros(K.NANOM, dtype=np.int64)
        vec[0] = self.code
        for i, (_, value) in enumerate(self.params[: K.NANOM - 1]):
            vec[i + 1] = _PARAM_CODES.get(value, value) if isinstance(value, str) else value
        return vec


# string-valued mode parameters as the kernel sees them
_PARAM_CODES = {"default": 0, "sign_magnitude": 0, "le_unsigned": 0,
                "mulhu_as_mulh": 1, "signed": 1}


@dataclass(frozen=True)
class _Entry:
    code: int
    stage: str
    synopsis: str
    category: str
    mutation: str
    params: tuple[tuple[str, int | str], ...] = ()
    choices: dict = field(default_factory=dict)


GOLDEN = AnomalySpec("golden", "none", "No anomaly", "-", "identity")

CATALOG: dict[str, _Entry] = {
    "a03": _Entry(K.A03, "decode", "Register target redirection", "single instruction",
                  "writes addressed to register `from` land in register `to`",
                  (("from", 9), ("to", 10))),
    "a04": _Entry(K.A04, "decode", "Register source redirection", "single instruction",
                  "reads of register `from` return register `to`",
                  (("from", 9), ("to", 10))),
    "a05": _Entry(K.A05, "execute", "Incorrect unsigned less-than compare", "single instruction",
                  "SLTU computes rs1 <=u rs2 (mode le_unsigned) or a signed compare (mode signed)",
                  (("mode", "le_unsigned"),), {"mode": ("le_unsigned", "signed")}),
    "a06": _Entry(K.A06, "writeback", "GPR0 can be assigned", "single instruction",
                  "writes to x0 are kept and visible to later reads"),
    "a10": _Entry(K.A10, "branch-unit", "Erroneous branch address", "control flow",
                  "taken conditional branches land `delta` bytes past their target",
                  (("delta", 4),)),
    "a11": _Entry(K.A11, "branch-unit", "Erroneous branch direction", "control flow",
                  "conditional branch outcomes are inverted"),
    "a12": _Entry(K.A12, "decode", "Next-instruction operand decode error", "multiple instruction",
                  "the instruction decoded after any multiply has rs2 xor 1"),
    "a13": _Entry(K.A13, "decode", "Next instruction decoded as NOP", "multiple instruction",
                  "the instruction following the first multiply in the queue becomes a NOP"),
    "a14": _Entry(K.A14, "decode", "Next register read forced to all 0s", "multiple instruction",
                  "the instruction following the first multiply in the queue reads rs1 as 0"),
    "a15": _Entry(K.A15, "branch-unit", "Speculative instructions not flushed", "control flow",
                  "wrong-path instructions after a redirect are not squashed"),
    "a16": _Entry(K.A16, "execute", "Unsigned multiply operand converts to signed", "single instruction",
                  "MUL/MULHU operands with the top bit set are read as sign-magnitude negatives "
                  "(mode sign_magnitude) or MULHU executes as MULH (mode mulhu_as_mulh)",
                  (("mode", "sign_magnitude"),), {"mode": ("sign_magnitude", "mulhu_as_mulh")}),
    "a17": _Entry(K.A17, "decode", "Source operand misidentified as 0", "multiple instruction",
                  "rs2 >= x16 reads 0 when the previously decoded instruction wrote rd >= x16"),
    "a18": _Entry(K.A18, "execute", "ALU opcode mismatch", "single instruction",
                  "ADD executes as SUB"),
}

ANOMALY_IDS = tuple(CATALOG)


def inject(anomaly_id: str, **params) -> AnomalySpec:
    """Build the AnomalySpec for ``anomaly_id``; ``golden``/``none`` gives the identity."""
    if anomaly_id in ("golden", "none", ""):
        return GOLDEN
    try:
        entry = CATALOG[anomaly_id]
    except KeyError:
        raise UnknownAnomaly(f"unknown anomaly {anomaly_id!r}") from None
    known = dict(entry.params)
    for name, value in params.items():
        if name not in known:
            raise ValueError(f"{anomaly_id} has no parameter {name!r}")
        if name in entry.choices:
            if value not in entry.choices[name]:
                raise ValueError(f"{anomaly_id}.{name} must be one of {entry.choices[name]}")
        else:
            value = int(value)
        known[name] = value
    for name in ("from", "to"):
        if name in known and not 0 <= int(known[name]) < 32:
            raise ValueError(f"{anomaly_id}.{name} must be a register index")
    return AnomalySpec(anomaly_id, entry.stage, entry.synopsis, entry.category,
                       entry.mutation, tuple(known.items()), entry.code)
