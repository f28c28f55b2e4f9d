"""Stream semantic register lanes.

Each core owns two lanes; lane 0 maps to ``ft0`` and lane 1 to ``ft1``. A
lane is configured by the core through stores to a private window reached
from ``x0`` (register map, byte offsets from ``SSR_CFG_BASE + 0x80 * lane``):

    0x00-0x0c  BOUND_0..3   iteration count per dimension (>= 1)
    0x10-0x1c  STRIDE_0..3  signed byte stride per dimension
    0x40-0x4c  RPTR_1..4    write base address: launch a read stream of 1..4 dims
    0x50-0x5c  WPTR_1..4    write base address: launch a write stream of 1..4 dims

A launch copies the staged bounds/strides into the active slot, or into the
one-deep shadow slot while a stream is active. The core stalls on a launch
while the shadow slot is occupied.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from ._accel import affine_addresses
from .asm import SSR_CFG_BASE, SSR_LANE_STRIDE, SSR_REG_BOUND, SSR_REG_RPTR, SSR_REG_STRIDE, SSR_REG_WPTR
from .fparith import from_bits, to_bits
from .memory import READ, WRITE, Request, SimulationFault

MAX_DIMS = 4
CFG_WINDOW_START = SSR_CFG_BASE & 0xFFFFFFFF
CFG_WINDOW_END = CFG_WINDOW_START + 2 * SSR_LANE_STRIDE


@dataclass(frozen=True)
class SsrConfig:
    base: int
    bounds: tuple[int, ...]
    strides: tuple[int, ...]
    write: bool = False

    def __post_init__(self):
        if not 1 <= len(self.bounds) <= MAX_DIMS or len(self.bounds) != len(self.strides):
            raise ValueError("stream needs 1..4 dimensions with one stride per bound")
        if any(b < 1 for b in self.bounds):
            raise ValueError("stream bounds must be >= 1")

    @property
    def dims(self) -> int:
        return len(self.bounds)

    @property
    def total(self) -> int:
        n = 1
        for b in self.bounds:
            n *= b
        return n

    def addresses(self) -> list[int]:
        return affine_addresses(self.base, self.strides, self.bounds)


def next_address(cfg: SsrConfig, idx) -> int:
    """Address of element ``idx`` (one index per dimension, dimension 0 innermost)."""
    return cfg.base + sum(i * s for i, s in zip(idx, cfg.strides))


class _Stream:
    """Address generator walking one configuration."""

    __slots__ = ("cfg", "idx", "addr", "remaining", "write")

    def __init__(self, cfg: SsrConfig):
        self.cfg = cfg
        self.idx = [0] * cfg.dims
        self.addr = cfg.base
        self.remaining = cfg.total
        self.write = cfg.write

    def advance(self) -> None:
        self.remaining -= 1
        cfg = self.cfg
        idx = self.idx
        for d in range(cfg.dims):
            idx[d] += 1
            self.addr += cfg.strides[d]
            if idx[d] < cfg.bounds[d]:
                return
            self.addr -= cfg.strides[d] * cfg.bounds[d]
            idx[d] = 0


class SsrLane:
    def __init__(self, lane: int, core: int = 0, depth: int = 4):
        if depth < 1:
            raise ValueError("queue depth must be >= 1")
        self.lane = lane
        self.core = core
        self.depth = depth
        self.bounds = [1] * MAX_DIMS
        self.strides = [0] * MAX_DIMS
        self.active: _Stream | None = None
        self.shadow: SsrConfig | None = None
        self.queue: deque = deque()
        self.arrivals: deque = deque()
        self.pending: Request | None = None
        self.wslots: deque = deque()
        self.read_budget = 0     # launched read elements not yet popped
        self.write_budget = 0    # launched write elements not yet reserved
        self.streamed = 0
        self.issued_addresses: list[int] | None = None

    # configuration ------------------------------------------------------------
    def write_reg(self, offset: int, value: int) -> bool:
        """Apply a config store; returns False if a launch must be retried."""
        if SSR_REG_BOUND <= offset < SSR_REG_BOUND + 4 * MAX_DIMS:
            self.bounds[(offset - SSR_REG_BOUND) >> 2] = value
            return True
        if SSR_REG_STRIDE <= offset < SSR_REG_STRIDE + 4 * MAX_DIMS:
            v = value & 0xFFFFFFFF
            self.strides[(offset - SSR_REG_STRIDE) >> 2] = v - (1 << 32) if v & 0x80000000 else v
            return True
        for reg, is_write in ((SSR_REG_RPTR, False), (SSR_REG_WPTR, True)):
            if reg <= offset < reg + 4 * MAX_DIMS:
                dims = ((offset - reg) >> 2) + 1
                try:
                    cfg = SsrConfig(value & 0xFFFFFFFF, tuple(self.bounds[:dims]), tuple(self.strides[:dims]),
                                    is_write)
                except ValueError as exc:
                    raise SimulationFault(f"ssr lane {self.lane}: {exc}") from None
                return self.launch(cfg)
        raise SimulationFault(f"ssr lane {self.lane}: no config register at offset {offset:#x}")

    def launch(self, cfg: SsrConfig) -> bool:
        if self.active is None:
            self.active = _Stream(cfg)
        elif self.shadow is None:
            self.shadow = cfg
        else:
            return False
        if cfg.write:
            self.write_budget += cfg.total
        else:
            self.read_budget += cfg.total
        return True

    def can_launch(self) -> bool:
        return self.active is None or self.shadow is None

    def _promote(self) -> None:
        if self.shadow is not None:
            self.active = _Stream(self.shadow)
            self.shadow = None
        else:
            self.active = None

    # consumer side --------------------------------------------------------------
    def available(self, k: int) -> bool:
        """True if ``k`` elements can be popped now; faults on stream overrun."""
        if len(self.queue) >= k:
            return True
        if self.read_budget < k:
            raise SimulationFault(f"stream overrun on ssr lane {self.lane} (core {self.core})")
        return False

    def pop(self) -> float:
        self.read_budget -= 1
        return self.queue.popleft()

    def can_reserve(self) -> bool:
        if self.write_budget <= 0:
            raise SimulationFault(f"stream overrun on ssr write lane {self.lane} (core {self.core})")
        return len(self.wslots) < self.depth

    def reserve(self) -> list:
        self.write_budget -= 1
        slot = [None, False]
        self.wslots.append(slot)
        return slot

    # memory side ----------------------------------------------------------------
    def deliver(self, now: int) -> None:
        arr = self.arrivals
        while arr and arr[0][0] <= now:
            self.queue.append(arr.popleft()[1])

    def prepare(self) -> None:
        """Create the next memory request if credits and elements allow."""
        if self.pending is not None:
            return
        act = self.active
        if act is None:
            return
        if not act.write:
            if len(self.queue) + len(self.arrivals) < self.depth:
                self.pending = Request(READ, act.addr, 8, self, self.core)
        else:
            slots = self.wslots
            if slots and slots[0][1]:
                self.pending = Request(WRITE, act.addr, 8, self, self.core, wdata=to_bits(slots[0][0]))

    def granted(self, req: Request, value: int, ready: int) -> None:
        self.pending = None
        act = self.active
        if self.issued_addresses is not None:
            self.issued_addresses.append(req.addr)
        self.streamed += 1
        if req.op == READ:
            self.arrivals.append((ready, from_bits(value)))
        else:
            self.wslots.popleft()
        act.advance()
        if act.remaining == 0:
            self._promote()

    def drained(self) -> bool:
        """No write data left to store."""
        return not self.wslots and (self.pending is None or self.pending.op == READ)

    def idle(self) -> bool:
        return self.active is None and self.shadow is None and not self.wslots and self.pending is None
