"""Bounded property checking and the self-consistency baseline."""

from .search import Budget
from .sqed import EddivProgram, build_eddiv, sqed_corpus, verify_sqed
from .tiup import (EXHAUSTED, HANG, PASS, VIOLATED, Counterexample, Report, Verdict,
                   verify_one, verify_tiup)

__all__ = [
    "Budget", "Counterexample", "EXHAUSTED", "EddivProgram", "HANG", "PASS", "Report",
    "VIOLATED", "Verdict", "build_eddiv", "sqed_corpus", "verify_one", "verify_sqed",
    "verify_tiup",
]
