from __future__ import annotations

import numpy as np
import pytest

from tiup.checker import (Budget, build_eddiv, sqed_corpus, verify_one, verify_sqed,
                          verify_tiup)
from tiup.checker.search import assignments, corner_order, grid_product, grid_values, plan_size
from tiup.checker.sqed import EddivError, diverged_pairs, replay_sqed
from tiup.checker.tiup import (EXHAUSTED, HANG, PASS, VIOLATED, Report, Verdict, is_violating,
                               replay_tiup)
from tiup.compiler import compile_tautology, isa
from tiup.compiler.isa import Instr
from tiup.simulator import inject

SMALL = Budget(grid_limit=256, samples=100)


def words(*instrs):
    return [isa.encode(i) for i in instrs]


class TestSearchPlan:
    def test_full_grid_when_small(self):
        b = Budget()
        assert grid_values(2, b) == list(range(-8, 8))
        assert plan_size(2, b) == (256 + 2000, False)

    def test_grid_limit_keeps_corners(self):
        vals = grid_values(3, Budget(grid_limit=4096))
        assert len(vals) ** 3 <= 4096 and len(vals) == 16
        vals = grid_values(4, Budget(grid_limit=4096))
        assert len(vals) == 8
        assert {0, 1, -1, 2, -2, 7, -8} <= set(vals)

    def test_corner_order(self):
        assert corner_order(-8, 7)[:7] == [0, 1, -1, 2, -2, 7, -8]
        assert sorted(corner_order(-8, 7)) == list(range(-8, 8))

    def test_grid_rows_first_and_lexicographic(self):
        b = Budget(samples=10)
        rows = assignments(2, b, "k")
        grid = np.array(list(grid_product(2, b)), dtype=np.int64) & 0xFFFFFFFF
        assert rows.shape == (266, 2)
        assert (rows[:256] == grid).all()

    def test_deterministic_and_keyed(self):
        b = Budget(samples=50)
        a1, a2 = assignments(3, b, "p"), assignments(3, b, "p")
        assert (a1 == a2).all()
        assert not (assignments(3, b, "q")[-50:] == a1[-50:]).all()

    def test_slicing_matches_whole(self):
        b = Budget(samples=300)
        whole = assignments(2, b, "s")
        parts = np.concatenate([assignments(2, b, "s", i, i + 97) for i in range(0, len(whole), 97)])
        assert (whole == parts).all()

    def test_max_runs(self):
        assert plan_size(3, Budget(max_runs=10)) == (10, True)


class TestTiup:
    def test_golden_corpus_passes(self, corpus):
        report = verify_tiup(corpus, budget=SMALL)
        assert report.outcome == PASS
        assert len(report.verdicts) == len(corpus) == 161

    def test_a18_violated_on_associative_law(self, corpus):
        report = verify_tiup(corpus, inject("a18"), SMALL, stop_at_first=True)
        assert report.outcome == VIOLATED
        w = report.first_detection()
        assert "assoc_sub" in w.name
        cex = w.counterexample
        assert cex.retired >= 3
        assert (cex.finish_reg, cex.result_reg) == (1, 0)
        st = replay_tiup(compile_tautology(corpus[0]), cex.sigma, inject("a18"))
        assert is_violating(st)
        assert st.retired == cex.retired
        assert "tautology assoc_sub" in cex.trace

    def test_a17_missed(self, corpus):
        report = verify_tiup(corpus, inject("a17"), SMALL, stop_at_first=True)
        assert not report.detected
        assert report.outcome == PASS

    def test_budget_truncation_is_labelled(self, seed_map):
        seq = compile_tautology(seed_map["assoc_sub"])
        v = verify_one(seq, budget=Budget(max_runs=50))
        assert v.outcome == EXHAUSTED and v.assignments_tried == 50
        assert not v.detected

    def test_hang_is_its_own_outcome(self, seed_map):
        seq = compile_tautology(seed_map["signed_trichotomy"])
        beq = next(i for i in seq.instructions if i.name == "beq")
        v = verify_one(seq, inject("a10", delta=-beq.imm), SMALL)
        assert v.outcome == HANG and v.detected
        assert v.hang_sigma is not None and v.counterexample is None

    def test_verdict_serialisation_omits_wall_time(self, seed_map):
        v = verify_one(compile_tautology(seed_map["eq_reflexive"]), budget=SMALL)
        d = v.to_dict()
        assert "wall_time" not in d
        assert d["outcome"] == PASS

    def test_report_takes_worst_outcome(self):
        vs = [Verdict("a", (), "tiup", PASS, 1), Verdict("b", (), "tiup", EXHAUSTED, 1),
              Verdict("c", (), "tiup", VIOLATED, 1)]
        assert Report("tiup", "x", vs).outcome == VIOLATED
        assert Report("tiup", "x", vs[:2]).outcome == EXHAUSTED
        assert Report("tiup", "x", []).outcome == PASS


class TestEddiv:
    def test_listing_rename(self):
        prog = build_eddiv(words(Instr("add", 4, 1, 2)))
        assert isa.decode(prog.duplicate[0]) == Instr("add", 20, 17, 18)
        assert prog.checks == [(4, 20)]
        (check,) = [isa.decode(w) for w in prog.check_words()]
        assert (check.name, check.rs1, check.rs2) == ("bne", 4, 20)
        assert "ERROR:" in prog.listing()

    def test_empty_original(self):
        prog = build_eddiv([])
        assert prog.duplicate == [] and prog.checks == []

    def test_memory_partition(self):
        prog = build_eddiv(words(Instr("sw", 0, 9, 1, 0), Instr("lw", 10, 9, 0, 4)))
        dup = [isa.decode(w) for w in prog.duplicate]
        assert dup[0] == Instr("sw", 0, 25, 17, 1024)
        assert dup[1] == Instr("lw", 26, 25, 0, 1028)

    def test_x0_is_not_renamed(self):
        prog = build_eddiv(words(Instr("addi", 5, 0, 0, 3)))
        assert isa.decode(prog.duplicate[0]) == Instr("addi", 21, 0, 0, 3)

    def test_high_registers_rejected(self):
        with pytest.raises(EddivError):
            build_eddiv(words(Instr("add", 16, 1, 2)))

    def test_corpus_fits(self, corpus):
        progs, skipped = sqed_corpus(corpus)
        assert skipped == [] and len(progs) == len(corpus)
        for p in progs:
            assert len(p.duplicate) == len(p.original)

    def test_golden_passes(self, corpus):
        progs, _ = sqed_corpus(corpus[:20])
        assert verify_sqed(progs, budget=SMALL).outcome == PASS

    def test_a18_false_negative(self, corpus):
        progs, _ = sqed_corpus(corpus[:1])
        report = verify_sqed(progs, inject("a18"), Budget())
        assert report.outcome == PASS
        assert report.verdicts[0].assignments_tried == 16 ** 3 + 2000

    def test_a03_detected_and_replays(self, corpus):
        progs, _ = sqed_corpus(corpus)
        report = verify_sqed(progs, inject("a03"), SMALL, stop_at_first=True)
        assert report.outcome == VIOLATED
        w = report.first_detection()
        prog = next(p for p in progs if p.name == w.name)
        st = replay_sqed(prog, w.counterexample.sigma, inject("a03"))
        pairs = diverged_pairs(prog, st.regs)
        assert pairs and pairs == w.counterexample.diverged

    def test_a17_detected(self, corpus):
        progs, _ = sqed_corpus(corpus)
        assert verify_sqed(progs, inject("a17"), SMALL, stop_at_first=True).detected
