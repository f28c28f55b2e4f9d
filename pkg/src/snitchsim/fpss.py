"""Decoupled FPU subsystem: FP register file, scoreboard, pipelined FPU, FP LSU."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from . import fparith
from .isa import OPS, Instruction, classify
from .memory import READ, WRITE, Request, SimulationFault

NEVER = 1 << 62

# op kinds
K_ARITH, K_TO_INT, K_FROM_INT, K_LOAD, K_STORE = range(5)


@dataclass
class FpuLatencyTable:
    fma: int = 3
    cmp: int = 1
    cast: int = 2
    sgnj: int = 1
    minmax: int = 1
    move: int = 1

    def __post_init__(self):
        for name in ("fma", "cmp", "cast", "sgnj", "minmax", "move"):
            if getattr(self, name) < 1:
                raise ValueError(f"latency {name} must be >= 1")

    def of(self, fpclass: str | None) -> int:
        return getattr(self, fpclass) if fpclass else 1


class FpOp:
    """Pre-decoded FP instruction."""

    __slots__ = ("inst", "kind", "fn", "srcs", "rd", "lat", "arith", "mem", "mnemonic", "ssr_pops")

    def __init__(self, inst: Instruction, lat: FpuLatencyTable):
        meta = classify(inst)
        spec = OPS[inst.mnemonic]
        self.inst = inst
        self.mnemonic = inst.mnemonic
        self.rd = inst.rd
        self.arith = meta.is_fp_arith
        self.mem = meta.is_fp_mem
        self.lat = lat.of(spec.fpclass)
        fmt = spec.fmt
        srcs = []
        for tok, reg in (("frs1", inst.rs1), ("frs2", inst.rs2), ("frs3", inst.rs3)):
            if tok in fmt:
                srcs.append(reg)
        self.srcs = tuple(srcs)
        self.ssr_pops = (self.srcs.count(0), self.srcs.count(1))
        if meta.kind == "fp_load":
            self.kind, self.fn = K_LOAD, None
        elif meta.kind == "fp_store":
            self.kind, self.fn = K_STORE, None
        elif meta.kind == "fp_to_int":
            self.kind, self.fn = K_TO_INT, fparith.FP_TO_INT[inst.mnemonic]
        elif meta.kind == "fp_from_int":
            self.kind, self.fn = K_FROM_INT, fparith.INT_TO_FP[inst.mnemonic]
        else:
            self.kind, self.fn = K_ARITH, fparith.FP_OPS[inst.mnemonic]


class Fpss:
    def __init__(self, core_id: int, lanes, latencies: FpuLatencyTable | None = None,
                 queue_depth: int = 4, lsu_depth: int = 2, max_loads: int = 4, counters=None, trace=None):
        self.core = core_id
        self.lanes = lanes
        self.lat = latencies or FpuLatencyTable()
        self.fregs = [0.0] * 32
        self.ready = [0] * 32
        self.queue: deque = deque()
        self.queue_depth = queue_depth
        self.lsu_q: deque = deque()
        self.lsu_depth = lsu_depth
        self.max_loads = max_loads
        self.loads_out = 0
        self.load_regs: deque = deque()
        self.load_results: deque = deque()
        self.pending: dict[int, list] = {}
        self.ssr_enabled = False
        self.lsu_pending: Request | None = None
        self.acc_results = None  # core-side list receiving integer results
        self.counters = counters
        self.trace = trace
        self._ops: dict[Instruction, FpOp] = {}
        self.stall = None

    def decode(self, inst: Instruction) -> FpOp:
        op = self._ops.get(inst)
        if op is None:
            op = self._ops[inst] = FpOp(inst, self.lat)
        return op

    def idle(self) -> bool:
        return (not self.queue and not self.pending and not self.load_results and not self.lsu_q
                and self.loads_out == 0 and self.lsu_pending is None
                and all(lane.drained() for lane in self.lanes))

    # per-cycle ------------------------------------------------------------------
    def step(self, now: int) -> None:
        fregs = self.fregs
        wrote = False
        due = self.pending.pop(now, None)
        if due is not None:
            for reg, val, slot in due:
                if slot is not None:
                    slot[0] = val
                    slot[1] = True
                else:
                    fregs[reg] = val
                    wrote = True
        lr = self.load_results
        if lr and lr[0][0] <= now and not wrote:
            _, reg, val = lr.popleft()
            fregs[reg] = val
            self.ready[reg] = now
            self.loads_out -= 1
        self.stall = None
        if self.queue:
            self._issue(now)
            if self.stall is not None:
                st = self.counters.stalls
                st[self.stall] = st.get(self.stall, 0) + 1

    def _issue(self, now: int) -> None:
        item = self.queue[0]
        op = item.op
        ready = self.ready
        ssr = self.ssr_enabled
        lanes = self.lanes
        for r in op.srcs:
            if ssr and r < 2:
                continue
            if ready[r] > now:
                self.stall = "fp_raw"
                return
        if ssr:
            p0, p1 = op.ssr_pops
            if p0 and not lanes[0].available(p0):
                self.stall = "ssr_empty"
                return
            if p1 and not lanes[1].available(p1):
                self.stall = "ssr_empty"
                return
        kind = op.kind
        rd = op.rd
        slot_lane = None
        if kind == K_ARITH or kind == K_FROM_INT or kind == K_LOAD:
            if ssr and rd < 2:
                if kind == K_LOAD:
                    raise SimulationFault(f"core {self.core}: fld into a stream register while streams are on")
                if not lanes[rd].can_reserve():
                    self.stall = "ssr_full"
                    return
                slot_lane = lanes[rd]
            elif ready[rd] > now:
                self.stall = "fp_waw"
                return
        if kind != K_LOAD and kind != K_STORE:
            wb = now + op.lat
            if kind != K_TO_INT and wb in self.pending and slot_lane is None:
                # single FP write port: one FPU result per cycle
                if any(s is None for _, _, s in self.pending[wb]):
                    self.stall = "fp_wb"
                    return
        else:
            if len(self.lsu_q) >= self.lsu_depth or (kind == K_LOAD and self.loads_out >= self.max_loads):
                self.stall = "fp_lsu_full"
                return
        # issue
        self.queue.popleft()
        fregs = self.fregs
        vals = []
        for r in op.srcs:
            if ssr and r < 2:
                vals.append(lanes[r].pop())
            else:
                vals.append(fregs[r])
        c = self.counters
        c.fpss_issued += 1
        mn = c.mnemonics
        mn[op.mnemonic] = mn.get(op.mnemonic, 0) + 1
        if op.arith:
            c.fpu_arith_issued += 1
        if self.trace is not None:
            self.trace(now, self.core, "fpss", "issue", op.mnemonic)
        if kind == K_ARITH:
            while len(vals) < 3:
                vals.append(0.0)
            res = op.fn(vals[0], vals[1], vals[2])
            wb = now + op.lat
            if slot_lane is not None:
                self.pending.setdefault(wb, []).append((rd, res, slot_lane.reserve()))
            else:
                ready[rd] = wb
                self.pending.setdefault(wb, []).append((rd, res, None))
        elif kind == K_TO_INT:
            res = op.fn(vals[0], vals[1] if len(vals) > 1 else 0.0)
            self.acc_results.append([now + op.lat, op.inst.rd, res])
        elif kind == K_FROM_INT:
            res = op.fn(item.ival)
            wb = now + op.lat
            if slot_lane is not None:
                self.pending.setdefault(wb, []).append((rd, res, slot_lane.reserve()))
            else:
                ready[rd] = wb
                self.pending.setdefault(wb, []).append((rd, res, None))
        elif kind == K_LOAD:
            c.fp_mem_issued += 1
            ready[rd] = NEVER
            self.loads_out += 1
            self.load_regs.append(rd)
            self.lsu_q.append(Request(READ, item.addr, 8, self, self.core))
        else:
            c.fp_mem_issued += 1
            self.lsu_q.append(Request(WRITE, item.addr, 8, self, self.core, wdata=fparith.to_bits(vals[0])))

    def prepare(self) -> None:
        if self.lsu_pending is None and self.lsu_q:
            self.lsu_pending = self.lsu_q[0]

    def granted(self, req: Request, value: int, ready: int) -> None:
        self.lsu_pending = None
        self.lsu_q.popleft()
        if req.op == READ:
            # data arrives next cycle and is written the cycle after
            self.load_results.append((ready + 1, self.load_regs.popleft(), fparith.from_bits(value)))
