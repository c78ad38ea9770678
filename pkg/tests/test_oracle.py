from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings

from strategies import formulas
from tiup.formula import eval_formula, parse_formula, to_signed
from tiup.oracle import StateSpaceTooLarge, admit_seeds, check_tautology

LISTING3 = "(x+y>0) && (y+z<0) -> (x+y)*(y+z)<0"


def brute_force(f, width):
    """First falsifier in unsigned-lexicographic order, or None."""
    names = f.free_vars
    for i, values in enumerate(itertools.product(range(1 << width), repeat=len(names))):
        sigma = dict(zip(names, values))
        if not eval_formula(f, sigma, width=width):
            return i + 1, {n: to_signed(v, width) for n, v in sigma.items()}
    return (1 << width) ** len(names), None


def test_de_morgan_two_bits(seed_map):
    v = check_tautology(seed_map["demorgan_xor"], width=2)
    assert v.valid
    assert v.assignments_checked == 16
    assert v.counterexample is None


def test_never_true():
    v = check_tautology(parse_formula("x == x + 1"), width=4)
    assert not v.valid
    assert v.counterexample == {"x": 0}
    assert v.assignments_checked == 1


def test_listing3_rejected_lexicographically_first():
    f = parse_formula(LISTING3)
    v = check_tautology(f, width=4)
    assert not v.valid
    assert v.counterexample == {"x": 0, "y": 2, "z": 6}
    assert v.assignments_checked == 39
    # the hand-derived falsifier is valid too, just later in the order
    assert eval_formula(f, {"x": 4, "y": 0, "z": -4}, width=4) == 0


def test_counterexample_refalsifies_at_same_width():
    f = parse_formula(LISTING3)
    v = check_tautology(f, width=4)
    assert eval_formula(f, v.counterexample, width=4) == 0


def test_counterexample_is_stable():
    f = parse_formula(LISTING3)
    assert check_tautology(f, 4).counterexample == check_tautology(f, 4).counterexample


def test_exhaustive_count_when_valid(seed_map):
    v = check_tautology(seed_map["assoc_sub"], width=4)
    assert v.valid and v.assignments_checked == 2 ** 12


def test_limit_guard(seed_map):
    with pytest.raises(StateSpaceTooLarge):
        check_tautology(seed_map["assoc_sub"], width=8, limit=1000)


def test_memory_formula_counterexample_includes_memory():
    v = check_tautology(parse_formula("ld(mem, j) == 0"), width=3)
    # the zero-initialised memory makes this valid; a store-based falsifier is not
    assert v.valid
    v = check_tautology(parse_formula("ld(st(mem, i, v), j) == v"), width=2)
    assert not v.valid
    assert v.counterexample == {"i": 0, "j": 1, "v": 1}
    assert v.memory is not None


def test_closed_formula():
    assert check_tautology(parse_formula("1 + 1 == 2"), width=4).assignments_checked == 1


@settings(max_examples=100)
@given(formulas(max_leaves=4))
def test_differential_against_scalar_evaluator(f):
    tried, cex = brute_force(f, width=3)
    v = check_tautology(f, width=3)
    assert v.valid == (cex is None)
    assert v.counterexample == cex
    assert v.assignments_checked == tried


class TestAdmission:
    def test_all_shipped_seeds_admitted(self, seeds):
        report = admit_seeds(seeds, width=4, confirm_width=5)
        assert [s.name for s in report.admitted] == [s.name for s in seeds]
        assert report.rejected == []

    def test_listing3_candidate_rejected(self, seeds):
        bad = parse_formula(LISTING3, name="listing3")
        report = admit_seeds(list(seeds) + [bad], width=4)
        assert len(report.admitted) == 7
        (formula, verdict), = report.rejected
        assert formula.name == "listing3"
        assert verdict.counterexample == {"x": 0, "y": 2, "z": 6}
        assert "x=0 y=2 z=6" in verdict.describe()

    def test_empty_library(self):
        report = admit_seeds([])
        assert report.admitted == [] and report.rejected == []
