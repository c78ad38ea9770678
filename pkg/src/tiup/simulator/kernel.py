"""Numba kernel for the 5-stage in-order pipeline.

State lives in flat int64 arrays so the same code serves single traced
runs and batched input searches.  Register values are unsigned 32-bit
quantities held in int64.

Latches (rows of ``lat``): 0 IF/ID, 1 ID/EX, 2 EX/MEM, 3 MEM/WB.
Each cycle processes WB first, so ID observes this cycle's write-back,
then MEM, EX, ID and IF.  Branches and jumps resolve in EX and squash
the two younger instructions (the one in ID and the one being fetched).
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ..compiler.isa import OPCODE_IDS

# --- opcode ids (frozen into the compiled kernel)
OP_ILLEGAL = 0
OP_ADD = OPCODE_IDS["add"]
OP_SUB = OPCODE_IDS["sub"]
OP_SLL = OPCODE_IDS["sll"]
OP_SLT = OPCODE_IDS["slt"]
OP_SLTU = OPCODE_IDS["sltu"]
OP_XOR = OPCODE_IDS["xor"]
OP_SRL = OPCODE_IDS["srl"]
OP_SRA = OPCODE_IDS["sra"]
OP_OR = OPCODE_IDS["or"]
OP_AND = OPCODE_IDS["and"]
OP_MUL = OPCODE_IDS["mul"]
OP_MULH = OPCODE_IDS["mulh"]
OP_MULHSU = OPCODE_IDS["mulhsu"]
OP_MULHU = OPCODE_IDS["mulhu"]
OP_ADDI = OPCODE_IDS["addi"]
OP_SLTI = OPCODE_IDS["slti"]
OP_SLTIU = OPCODE_IDS["sltiu"]
OP_XORI = OPCODE_IDS["xori"]
OP_ORI = OPCODE_IDS["ori"]
OP_ANDI = OPCODE_IDS["andi"]
OP_SLLI = OPCODE_IDS["slli"]
OP_SRLI = OPCODE_IDS["srli"]
OP_SRAI = OPCODE_IDS["srai"]
OP_BEQ = OPCODE_IDS["beq"]
OP_BNE = OPCODE_IDS["bne"]
OP_BLT = OPCODE_IDS["blt"]
OP_BGE = OPCODE_IDS["bge"]
OP_BLTU = OPCODE_IDS["bltu"]
OP_BGEU = OPCODE_IDS["bgeu"]
OP_LUI = OPCODE_IDS["lui"]
OP_AUIPC = OPCODE_IDS["auipc"]
OP_JAL = OPCODE_IDS["jal"]
OP_JALR = OPCODE_IDS["jalr"]
OP_LW = OPCODE_IDS["lw"]
OP_SW = OPCODE_IDS["sw"]

# --- latch fields
V, Q, OP, RD, RS1, RS2, IMM, A, B, RES, WR, ZA, ZB = range(13)
NF = 13

# --- control words
PC, CYCLE, EPI, STATUS, PREV_MUL, PREV_RD_HI, RETIRED, ILLEGAL, FIRST_MUL, NTRACE = range(10)
NCTL = 10

# --- status
RUNNING, FINISHED, HANG, DRAINED = 0, 1, 2, 3

# --- run modes
MODE_FINISH, MODE_DRAIN = 0, 1

# --- anomaly ids; params follow in anom[1:]
A_NONE = 0
A03, A04, A05, A06 = 3, 4, 5, 6
A10, A11, A12, A13, A14, A15, A16, A17, A18 = 10, 11, 12, 13, 14, 15, 16, 17, 18
NANOM = 4

# --- queue positions that are not program instructions
Q_EPI0, Q_EPI1, Q_NOP = -1, -2, -3

# --- trace records
T_CYCLE, T_KIND, T_Q, T_OP, T_RD, T_RS1, T_RS2, T_IMM, T_WR, T_VAL = range(10)
NT = 10
K_RETIRED, K_SQUASHED = 0, 1

M32 = 0xFFFFFFFF


@njit(cache=True)
def _signed(v):
    v &= M32
    if v >= 0x80000000:
        return v - 0x100000000
    return v


@njit(cache=True)
def reads_rs1(op):
    return not (op == OP_LUI or op == OP_AUIPC or op == OP_JAL or op == OP_ILLEGAL)


@njit(cache=True)
def reads_rs2(op):
    return (OP_ADD <= op <= OP_MULHU) or (OP_BEQ <= op <= OP_BGEU) or op == OP_SW


@njit(cache=True)
def writes_rd(op):
    return not ((OP_BEQ <= op <= OP_BGEU) or op == OP_SW or op == OP_ILLEGAL)


@njit(cache=True)
def is_mul(op):
    return OP_MUL <= op <= OP_MULHU


@njit(cache=True)
def _mulhu(a, b):
    ah = a >> 16
    al = a & 0xFFFF
    bh = b >> 16
    bl = b & 0xFFFF
    mid = ah * bl + al * bh
    return (ah * bh + (((mid << 16) + al * bl) >> 32)) & M32


@njit(cache=True)
def alu(op, a, b, imm, q):
    """Result of a non-branch instruction with operand values a, b."""
    if op == OP_ADD:
        return (a + b) & M32
    if op == OP_SUB:
        return (a - b) & M32
    if op == OP_SLL:
        return (a << (b & 31)) & M32
    if op == OP_SLT:
        return 1 if _signed(a) < _signed(b) else 0
    if op == OP_SLTU:
        return 1 if a < b else 0
    if op == OP_XOR:
        return a ^ b
    if op == OP_SRL:
        return a >> (b & 31)
    if op == OP_SRA:
        return (_signed(a) >> (b & 31)) & M32
    if op == OP_OR:
        return a | b
    if op == OP_AND:
        return a & b
    if op == OP_MUL:
        # wraps in int64; the low 32 bits are exact
        return (a * b) & M32
    if op == OP_MULH:
        return ((_signed(a) * _signed(b)) >> 32) & M32
    if op == OP_MULHSU:
        return ((_signed(a) * b) >> 32) & M32
    if op == OP_MULHU:
        return _mulhu(a, b)
    if op == OP_ADDI:
        return (a + imm) & M32
    if op == OP_SLTI:
        return 1 if _signed(a) < imm else 0
    if op == OP_SLTIU:
        return 1 if a < (imm & M32) else 0
    if op == OP_XORI:
        return (a ^ imm) & M32
    if op == OP_ORI:
        return (a | imm) & M32
    if op == OP_ANDI:
        return (a & imm) & M32
    if op == OP_SLLI:
        return (a << imm) & M32
    if op == OP_SRLI:
        return a >> imm
    if op == OP_SRAI:
        return (_signed(a) >> imm) & M32
    if op == OP_LUI:
        return (imm << 12) & M32
    if op == OP_AUIPC:
        return (q * 4 + (imm << 12)) & M32
    if op == OP_JAL or op == OP_JALR:
        return ((q + 1) * 4) & M32
    if op == OP_LW or op == OP_SW:
        return (a + imm) & M32
    return 0


@njit(cache=True)
def branch_taken(op, a, b):
    if op == OP_BEQ:
        return a == b
    if op == OP_BNE:
        return a != b
    if op == OP_BLT:
        return _signed(a) < _signed(b)
    if op == OP_BGE:
        return _signed(a) >= _signed(b)
    if op == OP_BLTU:
        return a < b
    return a >= b


@njit(cache=True)
def _serve(prog, nprog, pc, ctl, mode, out):
    """Scheduler: fill ``out`` with (q, op, rd, rs1, rs2, imm).

    Returns False when nothing is served (drain mode past the end).
    Epilogue progress is committed by the caller.
    """
    if 0 <= pc < nprog:
        out[0] = pc
        out[1] = prog[pc, 0]
        out[2] = prog[pc, 1]
        out[3] = prog[pc, 2]
        out[4] = prog[pc, 3]
        out[5] = prog[pc, 4]
        return True
    if mode == MODE_DRAIN:
        return False
    epi = ctl[EPI]
    if epi == 0:
        # Result_Reg <- 0
        out[0] = Q_EPI0
        out[1] = OP_ANDI
        out[2] = 30
        out[3] = 30
        out[4] = 0
        out[5] = 0
    elif epi == 1:
        # Finish_Reg <- 1
        out[0] = Q_EPI1
        out[1] = OP_ADDI
        out[2] = 31
        out[3] = 0
        out[4] = 0
        out[5] = 1
    else:
        out[0] = Q_NOP
        out[1] = OP_ADDI
        out[2] = 0
        out[3] = 0
        out[4] = 0
        out[5] = 0
    return True


@njit(cache=True)
def _record(trace, ctl, kind, q, op, rd, rs1, rs2, imm, wr, val):
    n = ctl[NTRACE]
    if n < trace.shape[0]:
        trace[n, T_CYCLE] = ctl[CYCLE]
        trace[n, T_KIND] = kind
        trace[n, T_Q] = q
        trace[n, T_OP] = op
        trace[n, T_RD] = rd
        trace[n, T_RS1] = rs1
        trace[n, T_RS2] = rs2
        trace[n, T_IMM] = imm
        trace[n, T_WR] = wr
        trace[n, T_VAL] = val
        ctl[NTRACE] = n + 1


@njit(cache=True)
def _squash(lat, row, ctl, trace, tr_on):
    if lat[row, V] == 0:
        return
    q = lat[row, Q]
    if q == Q_EPI0 or q == Q_EPI1:
        # a squashed epilogue instruction will be served again
        k = -1 - q
        if k < ctl[EPI]:
            ctl[EPI] = k
    if tr_on:
        _record(trace, ctl, K_SQUASHED, q, lat[row, OP], lat[row, RD], lat[row, RS1],
                lat[row, RS2], lat[row, IMM], 0, 0)


@njit(cache=True)
def _mem_index(addr, nmem):
    return (addr >> 2) % nmem


@njit(cache=True)
def cycle(prog, nprog, regs, mem, lat, ctl, anom, mode, trace, tr_on, fetched):
    """Advance the machine by one clock cycle."""
    aid = anom[0]
    nmem = mem.shape[0]

    # ---------------- WB
    if lat[3, V] == 1:
        rd = lat[3, RD]
        wr = 0
        if lat[3, WR] == 1 and (rd != 0 or aid == A06):
            regs[rd] = lat[3, RES]
            wr = 1
        if lat[3, OP] == OP_ILLEGAL:
            ctl[ILLEGAL] += 1
        ctl[RETIRED] += 1
        if tr_on:
            _record(trace, ctl, K_RETIRED, lat[3, Q], lat[3, OP], rd, lat[3, RS1],
                    lat[3, RS2], lat[3, IMM], wr, lat[3, RES])
        if mode == MODE_FINISH and regs[31] != 0:
            lat[3, V] = 0
            ctl[STATUS] = FINISHED
            ctl[CYCLE] += 1
            return

    # ---------------- MEM  (EX/MEM -> MEM/WB)
    for f in range(NF):
        lat[3, f] = lat[2, f]
    if lat[3, V] == 1:
        if lat[3, OP] == OP_LW:
            lat[3, RES] = mem[_mem_index(lat[3, RES], nmem)]
        elif lat[3, OP] == OP_SW:
            mem[_mem_index(lat[3, RES], nmem)] = lat[3, B]

    # ---------------- EX  (ID/EX -> EX/MEM)
    # Operands come from the instruction directly ahead (row 3 after the
    # copy above) or else from the register file, which already holds
    # every older result including this cycle's write-back.  This is
    # equivalent to full EX/MEM + MEM/WB forwarding.
    redirect = False
    target = 0
    ex_valid = lat[1, V] == 1
    res = 0
    a_val = 0
    b_val = 0
    if ex_valid:
        op = lat[1, OP]
        q = lat[1, Q]
        imm = lat[1, IMM]
        a = 0 if lat[1, ZA] == 1 else _operand(lat, regs, lat[1, RS1], aid)
        b = 0 if lat[1, ZB] == 1 else _operand(lat, regs, lat[1, RS2], aid)
        eop = op
        if aid == A18 and op == OP_ADD:
            eop = OP_SUB
        if aid == A16 and (op == OP_MUL or op == OP_MULHU):
            if anom[1] == 0:
                # sign-magnitude reinterpretation of operands with the MSB set
                if a & 0x80000000:
                    a = (-(a & 0x7FFFFFFF)) & M32
                if b & 0x80000000:
                    b = (-(b & 0x7FFFFFFF)) & M32
            elif op == OP_MULHU:
                eop = OP_MULH
        if OP_BEQ <= op <= OP_BGEU:
            taken = branch_taken(op, a, b)
            if aid == A11:
                taken = not taken
            if taken:
                offset = imm
                if aid == A10:
                    offset += anom[1]
                redirect = True
                target = q + (offset >> 2)
        elif op == OP_JAL:
            redirect = True
            target = q + (imm >> 2)
            res = alu(eop, a, b, imm, q)
        elif op == OP_JALR:
            redirect = True
            target = (((a + imm) & M32) & ~1) >> 2
            res = alu(eop, a, b, imm, q)
        elif aid == A05 and op == OP_SLTU and anom[1] == 0:
            res = 1 if a <= b else 0
        elif aid == A05 and op == OP_SLTU:
            res = 1 if _signed(a) < _signed(b) else 0
        else:
            res = alu(eop, a, b, imm, q)
        a_val = a
        b_val = b
    # commit EX/MEM
    for f in range(NF):
        lat[2, f] = lat[1, f]
    if ex_valid:
        lat[2, A] = a_val
        lat[2, B] = b_val
        lat[2, RES] = res

    squash = redirect and aid != A15

    # ---------------- ID  (IF/ID -> ID/EX)
    stall = False
    if squash:
        _squash(lat, 0, ctl, trace, tr_on)
        lat[1, V] = 0
        lat[0, V] = 0
    else:
        if lat[0, V] == 1:
            q = lat[0, Q]
            op = lat[0, OP]
            rd = lat[0, RD]
            rs1 = lat[0, RS1]
            rs2 = lat[0, RS2]
            imm = lat[0, IMM]
            za = 0
            zb = 0
            trig = ctl[FIRST_MUL] >= 0 and q == ctl[FIRST_MUL] + 1
            if aid == A13 and trig:
                op = OP_ADDI
                rd = 0
                rs1 = 0
                rs2 = 0
                imm = 0
            if aid == A12 and ctl[PREV_MUL] == 1 and reads_rs2(op):
                rs2 ^= 1
            if aid == A03 and writes_rd(op) and rd == anom[1]:
                rd = anom[2]
            if aid == A04:
                if reads_rs1(op) and rs1 == anom[1]:
                    rs1 = anom[2]
                if reads_rs2(op) and rs2 == anom[1]:
                    rs2 = anom[2]
            if aid == A14 and trig and reads_rs1(op):
                za = 1
            if aid == A17 and ctl[PREV_RD_HI] == 1 and reads_rs2(op) and rs2 >= 16:
                zb = 1
            # load-use hazard against the instruction now in EX/MEM
            if lat[2, V] == 1 and lat[2, OP] == OP_LW and lat[2, WR] == 1 and (
                    lat[2, RD] != 0 or aid == A06):
                ld = lat[2, RD]
                if (reads_rs1(op) and rs1 == ld and za == 0) or (
                        reads_rs2(op) and rs2 == ld and zb == 0):
                    stall = True
            if stall:
                lat[1, V] = 0
            else:
                lat[1, V] = 1
                lat[1, Q] = q
                lat[1, OP] = op
                lat[1, RD] = rd
                lat[1, RS1] = rs1
                lat[1, RS2] = rs2
                lat[1, IMM] = imm
                lat[1, A] = 0 if za == 1 else (regs[rs1] if (rs1 != 0 or aid == A06) else 0)
                lat[1, B] = 0 if zb == 1 else (regs[rs2] if (rs2 != 0 or aid == A06) else 0)
                lat[1, RES] = 0
                lat[1, WR] = 1 if writes_rd(op) else 0
                lat[1, ZA] = za
                lat[1, ZB] = zb
                ctl[PREV_MUL] = 1 if is_mul(op) else 0
                ctl[PREV_RD_HI] = 1 if (writes_rd(op) and rd >= 16) else 0
        else:
            lat[1, V] = 0

    # ---------------- IF
    if squash:
        # the instruction fetched this cycle is discarded as well
        if tr_on and _serve(prog, nprog, ctl[PC], ctl, mode, fetched):
            _record(trace, ctl, K_SQUASHED, fetched[0], fetched[1], fetched[2],
                    fetched[3], fetched[4], fetched[5], 0, 0)
        ctl[PC] = target
    elif not stall:
        if _serve(prog, nprog, ctl[PC], ctl, mode, fetched):
            if fetched[0] == Q_EPI0 or fetched[0] == Q_EPI1:
                ctl[EPI] += 1
            lat[0, V] = 1
            lat[0, Q] = fetched[0]
            lat[0, OP] = fetched[1]
            lat[0, RD] = fetched[2]
            lat[0, RS1] = fetched[3]
            lat[0, RS2] = fetched[4]
            lat[0, IMM] = fetched[5]
            ctl[PC] = ctl[PC] + 1
        else:
            lat[0, V] = 0
        if redirect:
            ctl[PC] = target

    ctl[CYCLE] += 1
    if mode == MODE_DRAIN and not (0 <= ctl[PC] < nprog):
        if lat[0, V] == 0 and lat[1, V] == 0 and lat[2, V] == 0 and lat[3, V] == 0:
            ctl[STATUS] = DRAINED


@njit(cache=True)
def _operand(lat, regs, reg, aid):
    if reg == 0 and aid != A06:
        return 0
    if lat[3, V] == 1 and lat[3, WR] == 1 and lat[3, RD] == reg:
        return lat[3, RES]
    return regs[reg]


@njit(cache=True)
def run(prog, nprog, regs, mem, lat, ctl, anom, mode, max_cycles, trace, tr_on):
    """Cycle until the status leaves RUNNING or ``max_cycles`` is reached."""
    fetched = np.zeros(6, dtype=np.int64)
    while ctl[STATUS] == RUNNING:
        if ctl[CYCLE] >= max_cycles:
            ctl[STATUS] = HANG
            break
        cycle(prog, nprog, regs, mem, lat, ctl, anom, mode, trace, tr_on, fetched)
    return ctl[STATUS]


@njit(cache=True)
def run_batch(prog, nprog, init_regs, anom, mode, max_cycles, nmem, first_mul):
    """Run one program from many initial register files.

    Returns (status[N], final regs[N, 32], retired[N], cycles[N]).
    """
    n = init_regs.shape[0]
    status = np.zeros(n, dtype=np.int64)
    final = np.zeros((n, 32), dtype=np.int64)
    retired = np.zeros(n, dtype=np.int64)
    cycles = np.zeros(n, dtype=np.int64)
    regs = np.zeros(32, dtype=np.int64)
    mem = np.zeros(nmem, dtype=np.int64)
    lat = np.zeros((4, NF), dtype=np.int64)
    ctl = np.zeros(NCTL, dtype=np.int64)
    trace = np.zeros((1, NT), dtype=np.int64)
    for i in range(n):
        for r in range(32):
            regs[r] = init_regs[i, r]
        mem[:] = 0
        lat[:, :] = 0
        ctl[:] = 0
        ctl[FIRST_MUL] = first_mul
        status[i] = run(prog, nprog, regs, mem, lat, ctl, anom, mode, max_cycles, trace, False)
        for r in range(32):
            final[i, r] = regs[r]
        retired[i] = ctl[RETIRED]
        cycles[i] = ctl[CYCLE]
    return status, final, retired, cycles
