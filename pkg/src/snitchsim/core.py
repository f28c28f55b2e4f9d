"""Single-stage, single-issue integer core with scoreboard, LSU and offload port."""
from __future__ import annotations

from collections import deque

from .frep import Offload, Sequencer
from .isa import CSR_NAMES, CSR_REGION, CSR_SSR, Instruction, IssueClass, Program, classify
from .memory import AMO, LR, READ, SC, WRITE, Request, SimulationFault
from .ssr import CFG_WINDOW_END, CFG_WINDOW_START

M32 = 0xFFFFFFFF


def _s(v: int) -> int:
    return v - (1 << 32) if v & 0x80000000 else v


ALU_OPS = {
    "add": lambda a, b: (a + b) & M32,
    "sub": lambda a, b: (a - b) & M32,
    "sll": lambda a, b: (a << (b & 31)) & M32,
    "slt": lambda a, b: int(_s(a) < _s(b)),
    "sltu": lambda a, b: int(a < b),
    "xor": lambda a, b: a ^ b,
    "srl": lambda a, b: a >> (b & 31),
    "sra": lambda a, b: (_s(a) >> (b & 31)) & M32,
    "or": lambda a, b: a | b,
    "and": lambda a, b: a & b,
}
IMM_ALU = {"addi": "add", "slti": "slt", "sltiu": "sltu", "xori": "xor", "ori": "or", "andi": "and",
           "slli": "sll", "srli": "srl", "srai": "sra"}
BRANCHES = {
    "beq": lambda a, b: a == b,
    "bne": lambda a, b: a != b,
    "blt": lambda a, b: _s(a) < _s(b),
    "bge": lambda a, b: _s(a) >= _s(b),
    "bltu": lambda a, b: a < b,
    "bgeu": lambda a, b: a >= b,
}
LOADS = {"lb": (1, True), "lh": (2, True), "lw": (4, False), "lbu": (1, False), "lhu": (2, False)}
STORES = {"sb": 1, "sh": 2, "sw": 4}


def muldiv(op: str, a: int, b: int) -> int:
    """RV32M semantics on unsigned 32-bit operands."""
    sa, sb = _s(a), _s(b)
    if op == "mul":
        return (a * b) & M32
    if op == "mulh":
        return ((sa * sb) >> 32) & M32
    if op == "mulhsu":
        return ((sa * b) >> 32) & M32
    if op == "mulhu":
        return ((a * b) >> 32) & M32
    if op == "div":
        if b == 0:
            return M32
        if sa == -(1 << 31) and sb == -1:
            return a
        q = abs(sa) // abs(sb)
        return (q if (sa < 0) == (sb < 0) else -q) & M32
    if op == "divu":
        return M32 if b == 0 else a // b
    if op == "rem":
        if b == 0:
            return a
        if sa == -(1 << 31) and sb == -1:
            return 0
        r = abs(sa) % abs(sb)
        return (-r if sa < 0 else r) & M32
    if op == "remu":
        return a if b == 0 else a % b
    raise ValueError(op)


# decoded op codes
(C_ALU_RR, C_ALU_RI, C_LUI, C_AUIPC, C_BRANCH, C_JAL, C_JALR, C_LOAD, C_STORE, C_AMO, C_CSR,
 C_MULDIV, C_FP, C_FLD, C_FSD, C_FREP, C_FENCE, C_ECALL, C_WFI, C_EBREAK) = range(20)


class Dec:
    __slots__ = ("code", "inst", "rd", "rs1", "rs2", "imm", "fn", "srcs", "dst", "mnem", "arg",
                 "seq", "to_int")

    def __init__(self, inst: Instruction):
        meta = classify(inst)
        m = inst.mnemonic
        self.inst = inst
        self.mnem = m
        self.rd = inst.rd
        self.rs1 = inst.rs1
        self.rs2 = inst.rs2
        self.imm = inst.imm
        self.fn = None
        self.arg = None
        self.srcs = meta.int_srcs
        self.dst = inst.rd if meta.writes_int_rf else 0
        self.seq = meta.is_sequenceable
        self.to_int = meta.kind == "fp_to_int"
        kind = meta.kind
        if meta.issue_class is IssueClass.FPSS:
            if kind == "frep":
                self.code = C_FREP
            elif kind == "fp_load":
                self.code = C_FLD
            elif kind == "fp_store":
                self.code = C_FSD
            else:
                self.code = C_FP
        elif kind == "muldiv":
            self.code = C_MULDIV
        elif m in ALU_OPS:
            self.code, self.fn = C_ALU_RR, ALU_OPS[m]
        elif m in IMM_ALU:
            self.code, self.fn = C_ALU_RI, ALU_OPS[IMM_ALU[m]]
            self.imm = inst.imm & M32
        elif m == "lui":
            self.code = C_LUI
        elif m == "auipc":
            self.code = C_AUIPC
        elif m in BRANCHES:
            self.code, self.fn = C_BRANCH, BRANCHES[m]
        elif m == "jal":
            self.code = C_JAL
        elif m == "jalr":
            self.code = C_JALR
        elif m in LOADS:
            self.code, self.arg = C_LOAD, LOADS[m]
        elif m in STORES:
            self.code, self.arg = C_STORE, STORES[m]
        elif kind == "amo":
            self.code = C_AMO
            if m == "lr.w":
                self.arg = (LR, None)
            elif m == "sc.w":
                self.arg = (SC, None)
            else:
                self.arg = (AMO, m[3:-2])
        elif kind == "csr":
            self.code = C_CSR
        elif m == "fence":
            self.code = C_FENCE
        elif m == "ecall":
            self.code = C_ECALL
        elif m == "wfi":
            self.code = C_WFI
        else:
            self.code = C_EBREAK


def decode_program(program: Program) -> list[Dec]:
    return [Dec(inst) for inst in program.instructions]


class Core:
    """Integer core of one core complex.

    ``step`` runs the issue stage and the integer write-back port of one
    cycle; ``prepare`` moves the LSU head request to the memory port.
    """

    def __init__(self, cid: int, decoded: list[Dec], cluster, fpss, seq: Sequencer, lanes, l0,
                 counters, max_loads: int = 4, lsu_depth: int = 2, branch_penalty: int = 0,
                 text_base: int = 0x8000_0000, line_bytes: int = 32, ssr_enabled: bool = True):
        self.id = cid
        self.dec = decoded
        self.cluster = cluster
        self.fpss = fpss
        self.seq = seq
        self.lanes = lanes
        self.l0 = l0
        self.c = counters
        self.max_loads = max_loads
        self.lsu_depth = lsu_depth
        self.branch_penalty = branch_penalty
        self.text_base = text_base
        self.line_shift = (line_bytes // 4).bit_length() - 1
        self.ssr_allowed = ssr_enabled
        self.x = [0] * 32
        self.busy = [False] * 32
        self.pc = 0
        self.halted = False
        self.halt_cycle = None
        self.wake = False
        self.fetch_ready = 0
        self.fetch_reason = "fetch_miss"
        self.cur_line = -1
        self.req_q: deque = deque()
        self.lsu_pending: Request | None = None
        self.loads: deque = deque()
        self.await_grant: deque = deque()
        self.acc: list = []
        fpss.acc_results = self.acc
        self.md_req = None
        self.stall_reason = None
        self.trace = None
        self.mnem = counters.mnemonics

    # helpers -------------------------------------------------------------------
    def quiescent(self) -> bool:
        return (not self.req_q and not self.loads and self.md_req is None and not self.acc
                and self.lsu_pending is None and self.seq.idle() and self.fpss.idle())

    def _stall(self, reason: str) -> None:
        self.stall_reason = reason
        st = self.c.stalls
        st[reason] = st.get(reason, 0) + 1

    def read_csr(self, num: int, now: int) -> int:
        if num == CSR_SSR:
            return int(self.fpss.ssr_enabled)
        if num == CSR_NAMES["mhartid"]:
            return self.id
        if num in (CSR_NAMES["mcycle"], CSR_NAMES["cycle"]):
            return now & M32
        if num in (CSR_NAMES["minstret"], CSR_NAMES["instret"]):
            return self.c.int_retired & M32
        return 0

    # per-cycle ---------------------------------------------------------------------
    def step(self, now: int) -> None:
        if self.halted:
            return
        self.stall_reason = None
        wrote = self._issue(now)
        self._writeback(now, wrote)

    def _writeback(self, now: int, alu_wrote: bool) -> None:
        loads = self.loads
        acc = self.acc
        if not loads and not acc:
            return
        head_ready = loads and loads[0][3] is not None and loads[0][4] <= now
        if alu_wrote:
            if head_ready or any(r[0] <= now for r in acc):
                st = self.c.stalls
                st["wb_contention"] = st.get("wb_contention", 0) + 1
            return
        x = self.x
        if head_ready:
            rd, _, _, val, _ = loads.popleft()
            if rd:
                x[rd] = val
                self.busy[rd] = False
            return
        for i, r in enumerate(acc):
            if r[0] <= now:
                del acc[i]
                rd = r[1]
                if rd:
                    x[rd] = r[2] & M32
                    self.busy[rd] = False
                return

    def _issue(self, now: int) -> bool:
        """Issue at most one instruction; returns True if it wrote the RF via the ALU path."""
        if self.fetch_ready > now:
            self._stall(self.fetch_reason)
            return False
        pc = self.pc
        line = pc >> self.line_shift
        if line != self.cur_line:
            t = self.l0.fetch(self.text_base + 4 * pc, now)
            self.cur_line = line
            if t > now:
                self.fetch_ready = t
                self.fetch_reason = "fetch_miss"
                self._stall("fetch_miss")
                return False
        try:
            d = self.dec[pc]
        except IndexError:
            raise SimulationFault(f"core {self.id}: pc {self.text_base + 4 * pc:#x} outside program") from None
        busy = self.busy
        for r in d.srcs:
            if busy[r]:
                self._stall("scoreboard")
                return False
        if d.dst and busy[d.dst]:
            self._stall("scoreboard")
            return False
        x = self.x
        code = d.code
        c = self.c
        if code == C_ALU_RI:
            if d.rd:
                x[d.rd] = d.fn(x[d.rs1], d.imm)
            self._retire(d, now)
            self.pc = pc + 1
            return d.rd != 0
        if code == C_ALU_RR:
            if d.rd:
                x[d.rd] = d.fn(x[d.rs1], x[d.rs2])
            self._retire(d, now)
            self.pc = pc + 1
            return d.rd != 0
        if code == C_BRANCH:
            self._retire(d, now)
            if d.fn(x[d.rs1], x[d.rs2]):
                self.pc = pc + (d.imm >> 2)
                self._taken(now)
            else:
                self.pc = pc + 1
            return False
        if code == C_FP or code == C_FLD or code == C_FSD:
            seq = self.seq
            if len(seq.inbox) >= seq.inbox_depth:
                self._stall("offload_busy")
                return False
            inst = d.inst
            op = self.fpss.decode(inst)
            if code == C_FP:
                item = Offload(inst, op, x[d.rs1], 0, None, 0, d.seq)
                if d.to_int and d.rd:
                    busy[d.rd] = True
            else:
                addr = (x[d.rs1] + inst.imm) & M32
                if addr & 7:
                    raise SimulationFault(f"core {self.id}: misaligned FP access at {addr:#010x}")
                item = Offload(inst, op, 0, addr)
            seq.inbox.append(item)
            if self.trace is not None:
                self.trace(now, self.id, "core", "offload", d.mnem)
            self.pc = pc + 1
            return False
        if code == C_LOAD or code == C_AMO:
            if len(self.loads) >= self.max_loads or len(self.req_q) >= self.lsu_depth:
                self._stall("lsu_full")
                return False
            if code == C_LOAD:
                addr = (x[d.rs1] + d.imm) & M32
                size, signed = d.arg
                req = Request(READ, addr, size, self, self.id)
            else:
                addr = x[d.rs1]
                size, signed = 4, False
                op, kind = d.arg
                req = Request(op, addr, 4, self, self.id, wdata=x[d.rs2], amo=kind)
            if addr % size:
                raise SimulationFault(f"core {self.id}: misaligned access at {addr:#010x}")
            entry = [d.rd, size, signed, None, 0]
            self.loads.append(entry)
            self.await_grant.append(entry)
            self.req_q.append(req)
            if d.rd:
                busy[d.rd] = True
            self._retire(d, now)
            self.pc = pc + 1
            return False
        if code == C_STORE:
            addr = (x[d.rs1] + d.imm) & M32
            if CFG_WINDOW_START <= addr < CFG_WINDOW_END:
                return self._ssr_cfg(d, addr, now)
            if len(self.req_q) >= self.lsu_depth:
                self._stall("lsu_full")
                return False
            size = d.arg
            if addr % size:
                raise SimulationFault(f"core {self.id}: misaligned access at {addr:#010x}")
            self.req_q.append(Request(WRITE, addr, size, self, self.id, wdata=x[d.rs2]))
            self._retire(d, now)
            self.pc = pc + 1
            return False
        if code == C_JAL:
            if d.rd:
                x[d.rd] = (self.text_base + 4 * (pc + 1)) & M32
            self._retire(d, now)
            self.pc = pc + (d.imm >> 2)
            self._taken(now)
            return d.rd != 0
        if code == C_JALR:
            target = ((x[d.rs1] + d.imm) & ~1) & M32
            if d.rd:
                x[d.rd] = (self.text_base + 4 * (pc + 1)) & M32
            off = target - self.text_base
            if off % 4:
                raise SimulationFault(f"core {self.id}: misaligned jump target {target:#010x}")
            self._retire(d, now)
            self.pc = off >> 2
            self._taken(now)
            return d.rd != 0
        if code == C_LUI:
            if d.rd:
                x[d.rd] = (d.imm << 12) & M32
            self._retire(d, now)
            self.pc = pc + 1
            return d.rd != 0
        if code == C_AUIPC:
            if d.rd:
                x[d.rd] = (self.text_base + 4 * pc + (d.imm << 12)) & M32
            self._retire(d, now)
            self.pc = pc + 1
            return d.rd != 0
        if code == C_MULDIV:
            if self.md_req is not None:
                self._stall("offload_busy")
                return False
            a, b = x[d.rs1], x[d.rs2]
            self.md_req = (d.mnem, d.rd, muldiv(d.mnem, a, b), a)
            if d.rd:
                busy[d.rd] = True
            self._retire(d, now)
            self.pc = pc + 1
            return False
        if code == C_FREP:
            seq = self.seq
            if len(seq.inbox) >= seq.inbox_depth:
                self._stall("offload_busy")
                return False
            seq.inbox.append(Offload(d.inst, None, 0, 0, d.inst.frep, x[d.rs1]))
            self._retire(d, now)
            self.pc = pc + 1
            return False
        if code == C_CSR:
            return self._csr(d, now)
        if code == C_FENCE:
            if not self.quiescent():
                self._stall("sync")
                return False
            self._retire(d, now)
            self.pc = pc + 1
            return False
        if code == C_ECALL:
            if not self.quiescent():
                self._stall("sync")
                return False
            self._retire(d, now)
            self.halted = True
            self.halt_cycle = now
            self.cluster.on_halt(self.id, now)
            return False
        if code == C_WFI:
            if not self.wake:
                self._stall("wfi")
                return False
            self.wake = False
            self._retire(d, now)
            self.pc = pc + 1
            return False
        raise SimulationFault(f"core {self.id}: ebreak at pc {self.text_base + 4 * pc:#x}")

    def _retire(self, d: Dec, now: int) -> None:
        self.c.int_retired += 1
        mn = self.mnem
        mn[d.mnem] = mn.get(d.mnem, 0) + 1
        if self.trace is not None:
            self.trace(now, self.id, "core", "retire", d.mnem)

    def _taken(self, now: int) -> None:
        if self.branch_penalty:
            self.fetch_ready = now + 1 + self.branch_penalty
            self.fetch_reason = "branch"

    def _ssr_cfg(self, d: Dec, addr: int, now: int) -> bool:
        if not self.ssr_allowed:
            raise SimulationFault(f"core {self.id}: stream configuration with SSRs disabled")
        rel = addr - CFG_WINDOW_START
        lane = self.lanes[rel >> 7]
        offset = rel & 0x7F
        if offset >= 0x40:
            # launch: earlier stores must be visible to the stream
            if self.req_q or self.lsu_pending is not None or not lane.can_launch():
                self._stall("ssr_busy")
                return False
        if not lane.write_reg(offset, self.x[d.rs2]):
            self._stall("ssr_busy")
            return False
        self._retire(d, now)
        self.pc += 1
        return False

    def _csr(self, d: Dec, now: int) -> bool:
        inst = d.inst
        m = d.mnem
        num = inst.imm
        imm_form = m.endswith("i")
        src = inst.rs1 if imm_form else self.x[inst.rs1]
        writes = m in ("csrrw", "csrrwi") or inst.rs1 != 0
        old = self.read_csr(num, now)
        if writes and num in (CSR_SSR, CSR_REGION):
            if not self.quiescent():
                self._stall("sync")
                return False
            base = m[:5]
            if base == "csrrw":
                new = src
            elif base == "csrrs":
                new = old | src
            else:
                new = old & ~src
            if num == CSR_SSR:
                if new & 1 and not self.ssr_allowed:
                    raise SimulationFault(f"core {self.id}: SSR enable with SSRs disabled")
                self.fpss.ssr_enabled = bool(new & 1)
            else:
                self.cluster.region_event(self.id, new & 1, now)
        if d.rd:
            self.x[d.rd] = old & M32
        self._retire(d, now)
        self.pc += 1
        return d.rd != 0

    # memory port side -------------------------------------------------------------
    def prepare(self) -> None:
        if self.lsu_pending is None and self.req_q:
            self.lsu_pending = self.req_q[0]

    def granted(self, req: Request, value: int, ready: int) -> None:
        self.lsu_pending = None
        self.req_q.popleft()
        if req.op != WRITE:
            entry = self.await_grant.popleft()
            if req.op == READ:
                size, signed = entry[1], entry[2]
                if signed and value & (1 << (8 * size - 1)):
                    value -= 1 << (8 * size)
                value &= M32
            entry[3] = value
            entry[4] = ready
