from __future__ import annotations

import random

import numpy as np
import pytest

from strategies import random_instr
from tiup.compiler import compile_tautology, isa
from tiup.compiler.isa import Instr
from tiup.simulator import (CATALOG, GOLDEN, MachineState, Scheduler, UnknownAnomaly,
                            dump_trace, inject, run_batch, run_to_finish, step)
from tiup.simulator.machine import default_cycle_cap
from tiup.simulator.reference import execute

MASK = 0xFFFFFFFF


def prog(*instrs):
    return [isa.encode(i) for i in instrs]


def run(instrs, regs=None, anomaly="golden", **params):
    return run_to_finish(prog(*instrs), regs=regs or {}, anomaly=inject(anomaly, **params))


def reference_run(words, regs, mem_words=256, max_steps=10_000):
    regs = [int(v) & MASK for v in regs]
    mem: dict[int, int] = {}
    path, pc = [], 0
    code = [isa.decode(w) for w in words]
    for _ in range(max_steps):
        if not 0 <= pc < 4 * len(code):
            return regs, mem, path
        path.append(pc // 4)
        pc = execute(code[pc // 4], regs, mem, pc, mem_words)
        regs[0] = 0
    raise AssertionError("reference did not terminate")


class TestExamples:
    def test_golden_associative(self, seed_map):
        seq = compile_tautology(seed_map["assoc_sub"])
        st = run_to_finish(seq, {"x": 3, "y": 1, "z": 2})
        assert (st.finish_reg, st.result_reg) == (1, 1)
        assert st.status == "finished"

    def test_a18_associative(self, seed_map):
        seq = compile_tautology(seed_map["assoc_sub"])
        st = run_to_finish(seq, {"x": 0, "y": 0, "z": 1}, inject("a18"))
        assert (st.finish_reg, st.result_reg) == (1, 0)
        assert st.retired == len(seq)

    def test_a10_branch_out_of_queue_fires_epilogue(self):
        code = [Instr("addi", 30, 0, 0, 1), Instr("beq", 0, 0, 0, 8),
                Instr("addi", 5, 0, 0, 1), Instr("addi", 31, 0, 0, 1)]
        golden = run(code)
        assert (golden.result_reg, golden.finish_reg) == (1, 1)
        st = run(code, anomaly="a10", delta=400)
        assert (st.result_reg, st.finish_reg) == (0, 1)
        assert any(t.pc < 0 and t.instr.name == "andi" for t in st.committed_trace)

    def test_empty_queue_runs_only_the_epilogue(self):
        st = run_to_finish([])
        assert (st.result_reg, st.finish_reg) == (0, 1)
        assert [t.instr.name for t in st.committed_trace] == ["andi", "addi"]

    def test_a06_x0_keeps_its_value(self):
        code = [Instr("addi", 0, 0, 0, 5), Instr("addi", 5, 0, 0, 0)]
        assert run(code).reg(5) == 0
        assert run(code, anomaly="a06").reg(5) == 5

    def test_a11_on_implication(self, seed_map):
        seq = compile_tautology(seed_map["signed_trichotomy"])
        assert run_to_finish(seq, {"x": 0, "y": 0}).result_reg == 1
        assert run_to_finish(seq, {"x": 0, "y": 0}, inject("a11")).result_reg == 0

    def test_hang_reports_cycle_cap(self):
        code = [Instr("beq", 0, 0, 0, 4), Instr("addi", 31, 0, 0, 1)]
        st = run(code, anomaly="a10", delta=-4)
        assert st.status == "hang"
        assert st.cycle == default_cycle_cap(2)
        assert st.finish_reg == 0


class TestAnomalies:
    def test_a03_target_redirection(self):
        st = run([Instr("addi", 9, 0, 0, 7)], anomaly="a03")
        assert (st.reg(9), st.reg(10)) == (0, 7)

    def test_a04_source_redirection(self):
        code = [Instr("addi", 10, 0, 0, 3), Instr("addi", 9, 0, 0, 7), Instr("add", 5, 9, 0)]
        assert run(code).reg(5) == 7
        assert run(code, anomaly="a04").reg(5) == 3

    def test_a05_less_or_equal(self):
        code = [Instr("sltu", 5, 1, 2)]
        assert run(code, {1: 5, 2: 5}).reg(5) == 0
        assert run(code, {1: 5, 2: 5}, anomaly="a05").reg(5) == 1

    def test_a05_signed_mode(self):
        code = [Instr("sltu", 5, 1, 2)]
        assert run(code, {1: -1, 2: 0}).reg(5) == 0
        assert run(code, {1: -1, 2: 0}, anomaly="a05", mode="signed").reg(5) == 1

    def test_a11_inverts_direction(self):
        code = [Instr("beq", 0, 0, 0, 8), Instr("addi", 5, 0, 0, 1), Instr("addi", 6, 0, 0, 1)]
        assert (run(code).reg(5), run(code).reg(6)) == (0, 1)
        st = run(code, anomaly="a11")
        assert (st.reg(5), st.reg(6)) == (1, 1)

    def test_a12_flips_next_rs2(self):
        code = [Instr("mul", 5, 1, 2), Instr("add", 6, 3, 2)]
        regs = {1: 2, 2: 3, 3: 10}
        assert run(code, regs).reg(6) == 13
        assert run(code, regs, anomaly="a12").reg(6) == 20

    def test_a13_next_becomes_nop(self):
        code = [Instr("mul", 5, 1, 2), Instr("addi", 6, 0, 0, 9)]
        assert run(code, {1: 2, 2: 3}).reg(6) == 9
        st = run(code, {1: 2, 2: 3}, anomaly="a13")
        assert (st.reg(5), st.reg(6)) == (6, 0)

    def test_a14_next_rs1_reads_zero(self):
        code = [Instr("mul", 5, 1, 2), Instr("addi", 6, 1, 0, 1)]
        assert run(code, {1: 4, 2: 3}).reg(6) == 5
        assert run(code, {1: 4, 2: 3}, anomaly="a14").reg(6) == 1

    def test_a13_only_first_multiply(self):
        code = [Instr("mul", 5, 1, 2), Instr("addi", 6, 0, 0, 9),
                Instr("mul", 7, 1, 2), Instr("addi", 8, 0, 0, 9)]
        st = run(code, {1: 2, 2: 3}, anomaly="a13")
        assert (st.reg(6), st.reg(8)) == (0, 9)

    def test_a15_wrong_path_not_flushed(self):
        code = [Instr("beq", 0, 0, 0, 8), Instr("addi", 5, 0, 0, 1), Instr("addi", 6, 0, 0, 1)]
        assert run(code).reg(5) == 0
        assert run(code, anomaly="a15").reg(5) == 1

    def test_a16_sign_magnitude(self):
        code = [Instr("mul", 5, 1, 2)]
        regs = {1: 0x80000003, 2: 2}
        assert run(code, regs).reg(5) == 6
        assert run(code, regs, anomaly="a16").reg(5) == (-6) & MASK

    def test_a16_mulhu_as_mulh(self):
        code = [Instr("mulhu", 5, 1, 2)]
        regs = {1: -1, 2: 2}
        assert run(code, regs).reg(5) == 1
        assert run(code, regs, anomaly="a16", mode="mulhu_as_mulh").reg(5) == MASK

    def test_a17_high_source_after_high_write(self):
        code = [Instr("addi", 16, 0, 0, 1), Instr("add", 5, 1, 17)]
        regs = {1: 1, 17: 9}
        assert run(code, regs).reg(5) == 10
        assert run(code, regs, anomaly="a17").reg(5) == 1

    def test_a17_needs_high_destination(self):
        code = [Instr("addi", 15, 0, 0, 1), Instr("add", 5, 1, 17)]
        assert run(code, {1: 1, 17: 9}, anomaly="a17").reg(5) == 10

    def test_a18_add_becomes_sub(self):
        code = [Instr("add", 5, 1, 2)]
        assert run(code, {1: 5, 2: 3}).reg(5) == 8
        assert run(code, {1: 5, 2: 3}, anomaly="a18").reg(5) == 2

    def test_catalog(self):
        assert list(CATALOG) == ["a03", "a04", "a05", "a06", "a10", "a11", "a12", "a13",
                                 "a14", "a15", "a16", "a17", "a18"]
        assert inject("golden") is GOLDEN
        with pytest.raises(UnknownAnomaly):
            inject("a99")
        with pytest.raises(ValueError):
            inject("a18", delta=3)
        with pytest.raises(ValueError):
            inject("a05", mode="bogus")
        assert dict(inject("a03", to=12).params) == {"from": 9, "to": 12}


class TestConformance:
    ALU = [n for n in isa.MNEMONICS if n not in isa.BRANCHES and n not in ("jal", "jalr")]

    def test_single_instructions(self):
        rng = random.Random(11)
        for _ in range(10_000):
            ins = random_instr(rng, self.ALU)
            if ins.writes_rd and ins.rd >= 30:
                continue
            # Result_Reg and Finish_Reg start cleared, as after reset
            regs = [0] + [rng.choice([rng.getrandbits(32), rng.randrange(-4, 4) & MASK])
                          for _ in range(29)] + [0, 0]
            ref_regs, ref_mem, _ = reference_run(prog(ins), regs)
            st = run_to_finish(prog(ins), regs=dict(enumerate(regs)), traced=False)
            assert [st.reg(i) for i in range(30)] == ref_regs[:30], ins
            for k, v in ref_mem.items():
                assert int(st.mem[k]) == v, ins

    def test_random_programs_with_hazards_and_forward_control(self):
        rng = random.Random(12)
        names = [n for n in isa.MNEMONICS if n != "jalr"]
        for _ in range(600):
            n = rng.randrange(1, 16)
            code = []
            for i in range(n):
                ins = random_instr(rng, names)
                # keep x30/x31 for the epilogue and draw registers from a small set
                small = lambda: rng.choice([0, 1, 2, 3, 5, 17])  # noqa: E731
                rd = small() if ins.writes_rd else 0
                rs1, rs2 = small(), small()
                imm = ins.imm
                if ins.name in isa.BRANCHES or ins.name == "jal":
                    imm = 4 * rng.randrange(1, n - i + 3)
                if ins.name in ("lw", "sw"):
                    imm = 4 * rng.randrange(-4, 4)
                fields = dict(rd=rd, rs1=rs1 if ins.sources() else 0,
                              rs2=rs2 if len(ins.sources()) == 2 else 0, imm=imm)
                code.append(Instr(ins.name, **fields))
            words = prog(*code)
            regs = [0] + [rng.choice([rng.getrandbits(32), rng.randrange(0, 64)])
                          for _ in range(29)] + [0, 0]
            ref_regs, ref_mem, path = reference_run(words, regs)
            st = run_to_finish(words, regs=dict(enumerate(regs)))
            assert st.status == "finished"
            assert [st.reg(i) for i in range(30)] == ref_regs[:30], code
            for k, v in ref_mem.items():
                assert int(st.mem[k]) == v, code
            committed = [t.pc for t in st.committed_trace if t.pc >= 0]
            assert committed == path, code


class TestMachine:
    def test_trace_replay_is_deterministic(self, seed_map):
        seq = compile_tautology(seed_map["mem_ld_st"])
        a = run_to_finish(seq, {"j": 7, "v": -3}, inject("a12"))
        b = run_to_finish(seq, {"j": 7, "v": -3}, inject("a12"))
        assert [str(t) for t in a.trace] == [str(t) for t in b.trace]
        assert dump_trace(a) == dump_trace(b)

    def test_in_order_retirement(self, corpus):
        rng = random.Random(3)
        for t in corpus[::7]:
            seq = compile_tautology(t)
            sigma = {v: rng.randrange(-8, 8) for v in seq.inputs}
            st = run_to_finish(seq, sigma)
            cycles = [e.cycle for e in st.committed_trace]
            assert cycles == sorted(cycles)
            body = [e.pc for e in st.committed_trace if e.pc >= 0]
            assert body == sorted(body)
            assert st.committed_trace[-1].wrote == 31 or st.finish_reg == 1

    def test_step_matches_run(self, seed_map):
        seq = compile_tautology(seed_map["signed_trichotomy"])
        sched = Scheduler.of(seq)
        st = MachineState.reset({1: 3, 2: -2})
        while st.finish_reg == 0:
            step(st, sched)
        whole = run_to_finish(seq, {"x": 3, "y": -2})
        assert st.cycle == whole.cycle
        assert [str(t) for t in st.trace] == [str(t) for t in whole.trace]

    def test_batch_matches_single_runs(self, seed_map):
        seq = compile_tautology(seed_map["unsigned_antisymmetry"])
        rng = np.random.default_rng(0)
        init = np.zeros((64, 32), dtype=np.int64)
        init[:, 1:3] = rng.integers(0, 1 << 32, size=(64, 2))
        res = run_batch(seq, init, inject("a05"))
        for row in range(64):
            st = run_to_finish(seq, regs={1: init[row, 1], 2: init[row, 2]},
                               anomaly=inject("a05"), traced=False)
            assert int(res.result[row]) == st.result_reg
            assert int(res.retired[row]) == st.retired

    def test_scheduler_serves_epilogue(self):
        s = Scheduler([isa.encode(Instr("add", 1, 2, 3))])
        assert s.serve(0).name == "add"
        assert s.serve(1, 0) == Instr("andi", 30, 30, 0, 0)
        assert s.serve(1, 1) == Instr("addi", 31, 0, 0, 1)
        assert s.serve(5, 2) == isa.NOP

    def test_illegal_word_retires_without_effect(self):
        st = run_to_finish([0xFFFFFFFF, isa.encode(Instr("addi", 5, 0, 0, 1))])
        assert st.illegal_retired == 1
        assert st.reg(5) == 1

    def test_load_use_forwarding(self):
        code = [Instr("addi", 1, 0, 0, 42), Instr("sw", 0, 0, 1, 8),
                Instr("lw", 2, 0, 0, 8), Instr("add", 3, 2, 2)]
        assert run(code).reg(3) == 84
