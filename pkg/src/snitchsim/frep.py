"""FPU sequence buffer driven by ``frep``.

The sequencer sits on the offload path between the integer core and the
FPSS issue queue. With no configuration pending it forwards offloads
unchanged (bypass). A ``frep`` item opens a capture window for the next
``max_inst`` offloads, which are stored once and then re-issued
``max_inst * rep`` times with operand staggering.
"""
from __future__ import annotations

from collections import deque

from .isa import FrepFields, Instruction, frep_order, stagger
from .memory import SimulationFault


class Offload:
    """One item on the offload path."""

    __slots__ = ("inst", "op", "ival", "addr", "frep", "rep", "sequenceable")

    def __init__(self, inst: Instruction, op=None, ival: int = 0, addr: int = 0,
                 frep: FrepFields | None = None, rep: int = 0, sequenceable: bool = False):
        self.inst = inst
        self.op = op
        self.ival = ival
        self.addr = addr
        self.frep = frep
        self.rep = rep
        self.sequenceable = sequenceable


class FrepConfig:
    __slots__ = ("fields", "rep", "buffer", "variants", "total", "pos", "period", "m")

    def __init__(self, fields: FrepFields, rep: int, buffer: list[Offload], make_item):
        self.fields = fields
        self.rep = rep
        self.buffer = buffer
        self.m = len(buffer)
        self.period = fields.stagger_count + 1
        self.variants = [
            [make_item(stagger(item.inst, fields, k)) for k in range(self.period)] for item in buffer
        ]
        self.total = self.m * rep
        self.pos = 0

    def next(self) -> Offload:
        pos = self.pos
        self.pos = pos + 1
        if self.fields.is_outer:
            i, j = divmod(pos, self.m)
        else:
            j, i = divmod(pos, self.rep)
        return self.variants[j][i % self.period]


def expand(block: list[Instruction], fields: FrepFields, rep: int) -> list[Instruction]:
    """Reference expansion of a captured block into the issued sequence."""
    return [stagger(block[j], fields, i) for j, i in frep_order(len(block), rep, fields.is_outer)]


class Sequencer:
    def __init__(self, core: int = 0, inbox_depth: int = 8, config_depth: int = 2, enabled: bool = True):
        self.core = core
        self.inbox: deque[Offload] = deque()
        self.inbox_depth = inbox_depth
        self.config_depth = config_depth
        self.enabled = enabled
        self._cap_fields: FrepFields | None = None
        self._cap_rep = 0
        self._cap_buf: list[Offload] = []
        self.capturing = False
        self.cfg_queue: deque[FrepConfig] = deque()
        self.active: FrepConfig | None = None
        self.sequenced = 0
        self.configs = 0
        self.make_item = None   # set by the owner: Instruction -> Offload

    def can_accept(self) -> bool:
        return len(self.inbox) < self.inbox_depth

    def push(self, item: Offload) -> None:
        self.inbox.append(item)

    def idle(self) -> bool:
        return not self.inbox and not self.capturing and self.active is None and not self.cfg_queue

    def busy_sequencing(self) -> bool:
        return self.capturing or self.active is not None or bool(self.cfg_queue)

    def step(self, out: deque, out_cap: int) -> None:
        used = False
        act = self.active
        if act is None and self.cfg_queue:
            act = self.active = self.cfg_queue.popleft()
        if act is not None and len(out) < out_cap:
            out.append(act.next())
            used = True
            self.sequenced += 1
            if act.pos == act.total:
                self.active = None
        inbox = self.inbox
        if not inbox:
            return
        item = inbox[0]
        if self.capturing:
            if item.frep is not None:
                raise SimulationFault(f"core {self.core}: frep inside a capture window")
            if not item.sequenceable:
                raise SimulationFault(
                    f"core {self.core}: frep capture violation: {item.inst.mnemonic} is not sequenceable")
            inbox.popleft()
            self._cap_buf.append(item)
            if len(self._cap_buf) == self._cap_fields.max_inst:
                self.capturing = False
                if self._cap_rep > 0:
                    self.cfg_queue.append(FrepConfig(self._cap_fields, self._cap_rep, self._cap_buf,
                                                     self.make_item))
                    self.configs += 1
            return
        if item.frep is not None:
            if not self.enabled:
                raise SimulationFault(f"core {self.core}: frep executed with the sequencer disabled")
            pending = len(self.cfg_queue)
            if pending >= self.config_depth:
                return
            inbox.popleft()
            if item.frep.max_inst == 0:
                return
            self.capturing = True
            self._cap_fields = item.frep
            self._cap_rep = item.rep
            self._cap_buf = []
            return
        if not used and self.active is None and not self.cfg_queue and len(out) < out_cap:
            out.append(inbox.popleft())
