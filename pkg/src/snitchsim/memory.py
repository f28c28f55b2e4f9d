"""Banked TCDM, crossbar arbitration, atomics, external memory and I-caches."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from ._accel import arbitrate


class SimulationFault(RuntimeError):
    """An architectural error in the simulated program (not a simulator bug)."""


@dataclass
class TcdmConfig:
    num_banks: int = 32
    bank_size: int = 4096
    interleave: int = 8
    base: int = 0x1000_0000

    def __post_init__(self):
        if self.num_banks <= 0 or self.num_banks & (self.num_banks - 1):
            raise ValueError("num_banks must be a power of two")
        if self.interleave not in (4, 8):
            raise ValueError("interleave must be 4 or 8 bytes")

    @property
    def size(self) -> int:
        return self.num_banks * self.bank_size


@dataclass
class MemoryMap:
    periph_base: int = 0x2000_0000
    periph_size: int = 0x1000
    ext_base: int = 0x8000_0000
    ext_size: int = 0x0040_0000
    ext_latency: int = 20
    ext_amo_latency: int = 10


# request ops
READ, WRITE, AMO, LR, SC = range(5)
OP_NAMES = ("read", "write", "amo", "lr", "sc")
AMO_KINDS = ("swap", "add", "and", "or", "xor", "min", "max", "minu", "maxu")


class Request:
    __slots__ = ("op", "addr", "size", "wdata", "amo", "owner", "core")

    def __init__(self, op, addr, size, owner, core, wdata=0, amo=None):
        self.op = op
        self.addr = addr
        self.size = size
        self.wdata = wdata
        self.amo = amo
        self.owner = owner
        self.core = core


def _s32(v: int) -> int:
    return v - (1 << 32) if v & 0x80000000 else v


def amo_apply(kind: str, old: int, operand: int) -> int:
    """New memory value of a 32-bit AMO."""
    if kind == "swap":
        r = operand
    elif kind == "add":
        r = old + operand
    elif kind == "and":
        r = old & operand
    elif kind == "or":
        r = old | operand
    elif kind == "xor":
        r = old ^ operand
    elif kind == "min":
        r = old if _s32(old) <= _s32(operand) else operand
    elif kind == "max":
        r = old if _s32(old) >= _s32(operand) else operand
    elif kind == "minu":
        r = min(old, operand)
    elif kind == "maxu":
        r = max(old, operand)
    else:
        raise ValueError(f"unknown AMO {kind}")
    return r & 0xFFFFFFFF


class Memory:
    """Address decoding plus the backing stores and the crossbar."""

    def __init__(self, tcdm: TcdmConfig, mmap: MemoryMap, n_initiators: int, periph=None):
        self.cfg = tcdm
        self.map = mmap
        self.tcdm = bytearray(tcdm.size)
        self.ext = bytearray(mmap.ext_size)
        self.periph = periph
        self.n_init = n_initiators
        self.rr = [0] * tcdm.num_banks
        self.bank_busy = [-1] * tcdm.num_banks   # cycle in which an AMO blocks the bank
        self.reservations: dict[int, set[int]] = {}
        self.conflicts = 0
        self.requests = 0
        self.grants = 0
        self._shift = tcdm.interleave.bit_length() - 1
        self._bank_mask = tcdm.num_banks - 1
        self._tbase = tcdm.base
        self._tend = tcdm.base + tcdm.size
        self.conflict_hook = None
        self.trace = None

    # decoding -----------------------------------------------------------------
    def region(self, addr: int) -> str:
        if self._tbase <= addr < self._tend:
            return "tcdm"
        m = self.map
        if m.periph_base <= addr < m.periph_base + m.periph_size:
            return "periph"
        if m.ext_base <= addr < m.ext_base + m.ext_size:
            return "ext"
        raise SimulationFault(f"access to unmapped address {addr:#010x}")

    def route(self, addr: int):
        """``("tcdm", bank, offset)`` or ``("ext", None, offset)``."""
        reg = self.region(addr)
        if reg == "tcdm":
            off = addr - self._tbase
            return "tcdm", (off >> self._shift) & self._bank_mask, off
        if reg == "ext":
            return "ext", None, addr - self.map.ext_base
        return "periph", None, addr - self.map.periph_base

    def bank_of(self, addr: int) -> int:
        return ((addr - self._tbase) >> self._shift) & self._bank_mask

    # functional access (no timing) --------------------------------------------
    def _store(self, addr: int, size: int):
        if addr % size:
            raise SimulationFault(f"misaligned {size}-byte access at {addr:#010x}")
        if self._tbase <= addr and addr + size <= self._tend:
            return self.tcdm, addr - self._tbase
        m = self.map
        if m.ext_base <= addr and addr + size <= m.ext_base + m.ext_size:
            return self.ext, addr - m.ext_base
        return None, 0

    def read(self, addr: int, size: int, core: int = 0) -> int:
        buf, off = self._store(addr, size)
        if buf is None:
            if self.periph is not None and self.region(addr) == "periph":
                return self.periph.read(addr - self.map.periph_base, core)
            raise SimulationFault(f"read from unmapped address {addr:#010x}")
        return int.from_bytes(buf[off:off + size], "little")

    def write(self, addr: int, size: int, value: int, core: int = 0) -> None:
        buf, off = self._store(addr, size)
        if buf is None:
            if self.periph is not None and self.region(addr) == "periph":
                self.periph.write(addr - self.map.periph_base, value & 0xFFFFFFFF, core)
                return
            raise SimulationFault(f"write to unmapped address {addr:#010x}")
        buf[off:off + size] = (value & ((1 << (8 * size)) - 1)).to_bytes(size, "little")
        if self.reservations:
            for word in range(addr & ~3, addr + size, 4):
                self.reservations.pop(word, None)

    def load_bytes(self, addr: int, data: bytes) -> None:
        for i in range(0, len(data), 8):
            chunk = data[i:i + 8]
            buf, off = self._store(addr + i, 1)
            if buf is None:
                raise SimulationFault(f"data segment at unmapped address {addr + i:#010x}")
            buf[off:off + len(chunk)] = chunk

    def execute(self, req: Request) -> int:
        """Perform ``req`` functionally; returns the response value."""
        op = req.op
        if op == READ:
            return self.read(req.addr, req.size, req.core)
        if op == WRITE:
            self.write(req.addr, req.size, req.wdata, req.core)
            return 0
        addr = req.addr
        if addr % 4:
            raise SimulationFault(f"misaligned atomic at {addr:#010x}")
        if op == AMO:
            old = self.read(addr, 4, req.core)
            self.write(addr, 4, amo_apply(req.amo, old, req.wdata), req.core)
            return old
        if op == LR:
            self.reservations.setdefault(addr, set()).add(req.core)
            return self.read(addr, 4, req.core)
        if op == SC:
            holders = self.reservations.get(addr)
            ok = holders is not None and req.core in holders
            for s in self.reservations.values():
                s.discard(req.core)
            if ok:
                self.write(addr, 4, req.wdata, req.core)
                return 0
            return 1
        raise ValueError(op)

    # timing ---------------------------------------------------------------------
    def cycle(self, now: int, posted: list) -> None:
        """Arbitrate one cycle of requests.

        ``posted`` holds ``(initiator, request)`` pairs, at most one per
        initiator. Granted requests execute now and their owner is notified
        through ``owner.granted(req, value, ready_cycle)``; losers stay with
        their owner and are re-posted next cycle.
        """
        if not posted:
            return
        self.requests += len(posted)
        banks = None
        tcdm_reqs = []
        for init, req in posted:
            addr = req.addr
            if self._tbase <= addr < self._tend:
                b = ((addr - self._tbase) >> self._shift) & self._bank_mask
                if self.bank_busy[b] == now:
                    self._conflict(req, now, b)
                    continue
                if banks is None:
                    banks = [-1] * self.n_init
                banks[init] = b
                tcdm_reqs.append((init, req, b))
            else:
                self._grant_untimed(req, now)
        if banks is None:
            return
        if len(tcdm_reqs) == 1:
            init, req, b = tcdm_reqs[0]
            self.rr[b] = (init + 1) % self.n_init
            self._grant(req, now, b)
            return
        winners = set(arbitrate(banks, self.rr, self.n_init))
        for init, req, b in tcdm_reqs:
            if init in winners:
                self._grant(req, now, b)
            else:
                self._conflict(req, now, b)

    def _conflict(self, req, now, bank):
        self.conflicts += 1
        if self.conflict_hook is not None:
            self.conflict_hook(req.core)
        if self.trace is not None:
            self.trace(now, req.core, "tcdm", "conflict", f"bank={bank} addr={req.addr:#x}")

    def _grant(self, req, now, bank):
        self.grants += 1
        val = self.execute(req)
        if self.trace is not None:
            self._trace_grant(req, now, bank, val)
        ready = now + 1
        if req.op == AMO:
            self.bank_busy[bank] = now + 1
            ready = now + 2
        req.owner.granted(req, val, ready)

    def _trace_grant(self, req, now, bank, val):
        op = OP_NAMES[req.op]
        detail = f"bank={bank} addr={req.addr:#x} size={req.size}"
        if req.op == AMO:
            detail += f" amo={req.amo} operand={req.wdata & 0xFFFFFFFF:#x} old={val:#x}"
        elif req.op in (LR, SC):
            detail += f" value={val:#x}"
        self.trace(now, req.core, "tcdm", op, detail)

    def _grant_untimed(self, req, now):
        self.grants += 1
        reg = self.region(req.addr)
        val = self.execute(req)
        if reg == "ext":
            ready = now + (self.map.ext_amo_latency if req.op in (AMO, LR, SC) else self.map.ext_latency)
        else:
            ready = now + 1
        req.owner.granted(req, val, ready)


# Instruction caches --------------------------------------------------------------

@dataclass
class ICacheConfig:
    line_bytes: int = 32
    l0_lines: int = 4
    l1_bytes: int = 8192
    l1_ways: int = 2
    l1_latency: int = 2
    refill_latency: int = 10
    l0_prefetch: bool = True


class L1ICache:
    """Shared per-Hive instruction cache; concurrent misses to one line coalesce."""

    def __init__(self, cfg: ICacheConfig):
        self.cfg = cfg
        self.sets = cfg.l1_bytes // (cfg.line_bytes * cfg.l1_ways)
        self.ways: list[list[int]] = [[] for _ in range(self.sets)]   # LRU order, MRU last
        self.valid_at: dict[int, int] = {}
        self.hits = 0
        self.misses = 0
        self.refills = 0

    def lookup(self, line: int, now: int) -> int:
        """Cycle at which ``line`` can be delivered to an L0."""
        cfg = self.cfg
        s = self.ways[line % self.sets]
        if line in s:
            s.remove(line)
            s.append(line)
            self.hits += 1
            return max(now, self.valid_at[line]) + cfg.l1_latency
        self.misses += 1
        self.refills += 1
        if len(s) >= cfg.l1_ways:
            victim = s.pop(0)
            self.valid_at.pop(victim, None)
        s.append(line)
        self.valid_at[line] = now + cfg.refill_latency
        return now + cfg.refill_latency + cfg.l1_latency


class L0ICache:
    """Per-core fully associative line buffer with FIFO replacement."""

    def __init__(self, cfg: ICacheConfig, l1: L1ICache):
        self.cfg = cfg
        self.l1 = l1
        self.lines: deque[int] = deque()
        self.ready: dict[int, int] = {}
        self.untouched: set[int] = set()
        self.hits = 0
        self.misses = 0
        self._shift = cfg.line_bytes.bit_length() - 1

    def _fill(self, line: int, now: int) -> int:
        if len(self.lines) >= self.cfg.l0_lines:
            old = self.lines.popleft()
            self.ready.pop(old, None)
            self.untouched.discard(old)
        self.lines.append(line)
        t = self.l1.lookup(line, now)
        self.ready[line] = t
        return t

    def fetch(self, pc: int, now: int) -> int:
        """Cycle at which the instruction at ``pc`` is available (``now`` on a hit)."""
        line = pc >> self._shift
        t = self.ready.get(line)
        if t is None:
            self.misses += 1
            t = self._fill(line, now)
            trigger = True
        else:
            self.hits += 1
            trigger = line in self.untouched
            self.untouched.discard(line)
        if trigger and self.cfg.l0_prefetch and (line + 1) not in self.ready:
            self._fill(line + 1, now)
            self.untouched.add(line + 1)
        return max(t, now)
