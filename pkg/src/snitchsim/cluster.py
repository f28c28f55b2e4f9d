"""Cluster composition: core complexes, Hives (shared mul/div and L1 I-cache),
peripherals and the lockstep simulation driver."""
from __future__ import annotations

from dataclasses import dataclass, field

from .core import Core, decode_program
from .fpss import Fpss, FpuLatencyTable
from .frep import Offload, Sequencer
from .isa import Program
from .memory import ICacheConfig, L0ICache, L1ICache, Memory, MemoryMap, SimulationFault, TcdmConfig
from .perf import PerfCounters
from .ssr import SsrLane

# Peripheral register offsets.
PERIPH_CORE_COUNT = 0x00
PERIPH_TCDM_START = 0x04
PERIPH_TCDM_END = 0x08
PERIPH_CYCLE = 0x0C
PERIPH_CONFLICTS = 0x10
PERIPH_WAKEUP = 0x14
PERIPH_SCRATCH = 0x20
N_SCRATCH = 8


@dataclass
class ClusterConfig:
    cores_per_hive: int = 4
    hives: int = 2
    tcdm: TcdmConfig = field(default_factory=TcdmConfig)
    memory_map: MemoryMap = field(default_factory=MemoryMap)
    icache: ICacheConfig = field(default_factory=ICacheConfig)
    fpu: FpuLatencyTable = field(default_factory=FpuLatencyTable)
    ssr_depth: int = 4
    frep_config_depth: int = 2
    offload_depth: int = 8
    fpss_queue_depth: int = 4
    max_loads: int = 4
    lsu_depth: int = 2
    fp_lsu_depth: int = 2
    branch_penalty: int = 0
    mul_latency: int = 2
    ssr_enabled: bool = True
    frep_enabled: bool = True

    def __post_init__(self):
        if self.cores_per_hive < 1 or self.hives < 1:
            raise ValueError("need at least one core")
        for name in ("ssr_depth", "offload_depth", "fpss_queue_depth", "max_loads", "lsu_depth",
                     "fp_lsu_depth", "frep_config_depth", "mul_latency"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.branch_penalty < 0:
            raise ValueError("branch_penalty must be >= 0")

    @property
    def cores(self) -> int:
        return self.cores_per_hive * self.hives

    @classmethod
    def with_cores(cls, n: int, **kw) -> "ClusterConfig":
        """Fill Hives of four cores; ``n`` must be 1..4 or a multiple of 4."""
        if n <= 4:
            return cls(cores_per_hive=n, hives=1, **kw)
        if n % 4:
            raise ValueError("core counts above 4 must be a multiple of 4")
        return cls(cores_per_hive=4, hives=n // 4, **kw)


class Watchdog(RuntimeError):
    def __init__(self, msg: str, histogram: dict[int, dict[str, int]]):
        super().__init__(msg)
        self.histogram = histogram


def div_latency(op: str, dividend: int) -> int:
    """Bit-serial divider with early-out on the dividend's significant bits."""
    v = dividend & 0xFFFFFFFF
    if op in ("div", "rem") and v & 0x80000000:
        v = (-(v - (1 << 32))) & 0xFFFFFFFF
    bits = v.bit_length()
    return min(34, 2 + max(1, bits))


class MulDiv:
    """Shared multiply/divide unit of one Hive."""

    def __init__(self, cores: list[Core], mul_latency: int = 2):
        self.cores = cores
        self.mul_latency = mul_latency
        self.rr = 0
        self.div_busy_until = -1
        self.accepted = 0

    def step(self, now: int) -> None:
        cores = self.cores
        n = len(cores)
        for k in range(n):
            idx = (self.rr + k) % n
            core = cores[idx]
            req = core.md_req
            if req is None:
                continue
            op, rd, val, a = req
            if op[0] in "dr":
                if self.div_busy_until > now:
                    continue
                lat = div_latency(op, a)
                self.div_busy_until = now + lat
            else:
                lat = self.mul_latency
            core.md_req = None
            core.acc.append([now + lat - 1, rd, val])
            self.accepted += 1
            self.rr = (idx + 1) % n
            if core.trace is not None:
                core.trace(now, core.id, "muldiv", "accept", f"{op} lat={lat}")
            return


class Peripherals:
    def __init__(self, cluster: "Cluster"):
        self.cluster = cluster
        self.scratch = [0] * N_SCRATCH

    def read(self, off: int, core: int) -> int:
        cl = self.cluster
        if off == PERIPH_CORE_COUNT:
            return len(cl.cores)
        if off == PERIPH_TCDM_START:
            return cl.cfg.tcdm.base
        if off == PERIPH_TCDM_END:
            return cl.cfg.tcdm.base + cl.cfg.tcdm.size
        if off == PERIPH_CYCLE:
            return cl.now & 0xFFFFFFFF
        if off == PERIPH_CONFLICTS:
            return cl.memory.conflicts & 0xFFFFFFFF
        if PERIPH_SCRATCH <= off < PERIPH_SCRATCH + 4 * N_SCRATCH and off % 4 == 0:
            return self.scratch[(off - PERIPH_SCRATCH) >> 2]
        return 0

    def write(self, off: int, value: int, core: int) -> None:
        cl = self.cluster
        if off == PERIPH_WAKEUP:
            for i, c in enumerate(cl.cores):
                if value >> i & 1:
                    c.wake = True
        elif PERIPH_SCRATCH <= off < PERIPH_SCRATCH + 4 * N_SCRATCH and off % 4 == 0:
            self.scratch[(off - PERIPH_SCRATCH) >> 2] = value


class CoreComplex:
    """Integer core + sequencer + FPSS + two SSR lanes, with two memory ports.

    Port 0 is shared round-robin by the core LSU, the FP LSU and SSR lane 0;
    port 1 serves SSR lane 1.
    """

    def __init__(self, cid: int, cluster: "Cluster", decoded, l1: L1ICache):
        cfg = cluster.cfg
        self.id = cid
        self.counters = PerfCounters()
        self.lanes = [SsrLane(0, cid, cfg.ssr_depth), SsrLane(1, cid, cfg.ssr_depth)]
        self.fpss = Fpss(cid, self.lanes, cfg.fpu, cfg.fpss_queue_depth, cfg.fp_lsu_depth, cfg.max_loads,
                         self.counters)
        self.seq = Sequencer(cid, cfg.offload_depth, cfg.frep_config_depth, cfg.frep_enabled)
        fp = self.fpss
        self.seq.make_item = lambda inst: Offload(inst, fp.decode(inst), 0, 0, None, 0, True)
        self.l0 = L0ICache(cfg.icache, l1)
        self.core = Core(cid, decoded, cluster, self.fpss, self.seq, self.lanes, self.l0, self.counters,
                         cfg.max_loads, cfg.lsu_depth, cfg.branch_penalty, cfg.memory_map.ext_base,
                         cfg.icache.line_bytes, cfg.ssr_enabled)
        self.port0 = [self.core, self.fpss, self.lanes[0]]
        self.rr0 = 0
        self.init0 = 2 * cid
        self.init1 = 2 * cid + 1

    def sync_counters(self, now: int) -> None:
        c = self.counters
        c.cycles = now
        c.ssr_elements = self.lanes[0].streamed + self.lanes[1].streamed
        c.frep_sequenced = self.seq.sequenced
        c.icache_hits = self.l0.hits
        c.icache_misses = self.l0.misses

    def step(self, now: int) -> None:
        l0, l1 = self.lanes
        if l0.arrivals:
            l0.deliver(now)
        if l1.arrivals:
            l1.deliver(now)
        fpss = self.fpss
        if fpss.queue or fpss.pending or fpss.load_results:
            fpss.step(now)
        seq = self.seq
        if seq.inbox or seq.active is not None or seq.cfg_queue:
            seq.step(fpss.queue, fpss.queue_depth)
        self.core.step(now)

    def post(self, posted: list) -> None:
        core, fpss, lane0 = self.port0
        core.prepare()
        fpss.prepare()
        lane0.prepare()
        lane1 = self.lanes[1]
        lane1.prepare()
        cands = (core.lsu_pending, fpss.lsu_pending, lane0.pending)
        if cands[0] is not None or cands[1] is not None or cands[2] is not None:
            rr = self.rr0
            for k in range(3):
                i = (rr + k) % 3
                if cands[i] is not None:
                    posted.append((self.init0, cands[i]))
                    self._port0_pick = i
                    break
        if lane1.pending is not None:
            posted.append((self.init1, lane1.pending))

    def port0_granted(self) -> None:
        self.rr0 = (self._port0_pick + 1) % 3


@dataclass
class RegionWindow:
    start: int
    end: int
    counters: list[PerfCounters]

    @property
    def cycles(self) -> int:
        return self.end - self.start


@dataclass
class RunResult:
    cycles: int
    counters: list[PerfCounters]
    window: RegionWindow | None
    core_windows: list[RegionWindow | None]
    conflicts: int
    trace: list[str] | None = None


class Cluster:
    def __init__(self, cfg: ClusterConfig, program: Program, trace: bool = False,
                 trace_cores: set[int] | None = None, trace_units: set[str] | None = None):
        self.cfg = cfg
        self.program = program
        self.now = 0
        n = cfg.cores
        self.periph = Peripherals(self)
        self.memory = Memory(cfg.tcdm, cfg.memory_map, 2 * n, self.periph)
        decoded = decode_program(program)
        self.hives = []
        self.complexes: list[CoreComplex] = []
        for h in range(cfg.hives):
            l1 = L1ICache(cfg.icache)
            members = []
            for k in range(cfg.cores_per_hive):
                cx = CoreComplex(h * cfg.cores_per_hive + k, self, decoded, l1)
                self.complexes.append(cx)
                members.append(cx.core)
            self.hives.append((l1, MulDiv(members, cfg.mul_latency)))
        self.cores = [cx.core for cx in self.complexes]
        tend = cfg.tcdm.base + cfg.tcdm.size
        for cx in self.complexes:
            x = cx.core.x
            x[2] = (tend - 512 * cx.id) & 0xFFFFFFFF   # sp
            x[10] = cx.id                               # a0 = hart id
            x[11] = n                                   # a1 = core count
        if program.data:
            self.memory.load_bytes(program.data_base, program.data)
        self.memory.conflict_hook = self._on_conflict
        self.region_starts: dict[int, tuple[int, list[PerfCounters]]] = {}
        self.region_ends: dict[int, tuple[int, list[PerfCounters]]] = {}
        self.first_start: tuple[int, list[PerfCounters]] | None = None
        self.last_end: tuple[int, list[PerfCounters]] | None = None
        self.halted = 0
        self.trace_lines: list[str] | None = None
        if trace:
            self.trace_lines = []
            self._tc = trace_cores
            self._tu = trace_units
            tr = self._trace
            self.memory.trace = tr
            for cx in self.complexes:
                cx.core.trace = tr
                cx.fpss.trace = tr

    # hooks -----------------------------------------------------------------------
    def _trace(self, cycle: int, core: int, unit: str, event: str, detail: str) -> None:
        if self._tc is not None and core not in self._tc:
            return
        if self._tu is not None and unit not in self._tu:
            return
        self.trace_lines.append(f"{cycle} {core} {unit} {event} {detail}")

    def _on_conflict(self, core: int) -> None:
        self.complexes[core].counters.tcdm_conflicts += 1

    def _snapshot(self, now: int) -> list[PerfCounters]:
        out = []
        for cx in self.complexes:
            cx.sync_counters(now)
            out.append(cx.counters.snapshot())
        return out

    def region_event(self, core: int, start: int, now: int) -> None:
        snap = self._snapshot(now)
        if start:
            if self.first_start is None:
                self.first_start = (now, snap)
            self.region_starts.setdefault(core, (now, snap))
        else:
            self.last_end = (now, snap)
            self.region_ends[core] = (now, snap)
        if self.trace_lines is not None:
            self._trace(now, core, "core", "region", "start" if start else "end")

    def on_halt(self, core: int, now: int) -> None:
        self.halted += 1

    # driver ----------------------------------------------------------------------
    def step(self) -> None:
        now = self.now
        posted: list = []
        for cx in self.complexes:
            if cx.core.halted:
                continue
            cx.step(now)
            cx.post(posted)
        for _, md in self.hives:
            md.step(now)
        if posted:
            self.memory.cycle(now, posted)
            for init, req in posted:
                if init & 1 == 0:
                    cx = self.complexes[init >> 1]
                    pend = (cx.core.lsu_pending, cx.fpss.lsu_pending, cx.lanes[0].pending)
                    if req not in pend:
                        cx.port0_granted()
        self.now = now + 1

    def run(self, max_cycles: int = 10_000_000) -> RunResult:
        if max_cycles <= 0:
            raise ValueError("watchdog must be > 0")
        n = len(self.cores)
        step = self.step
        while self.halted < n:
            if self.now >= max_cycles:
                hist = {c.id: dict(c.c.stalls) for c in self.cores}
                last = {c.id: c.stall_reason for c in self.cores if not c.halted}
                raise Watchdog(f"watchdog expired after {max_cycles} cycles; stalled cores: {last}", hist)
            step()
        return self.result()

    def result(self) -> RunResult:
        final = self._snapshot(self.now)
        window = None
        if self.first_start is not None and self.last_end is not None:
            s, ssnap = self.first_start
            e, esnap = self.last_end
            window = RegionWindow(s, e, [b - a for a, b in zip(ssnap, esnap)])
        core_windows = []
        for cx in self.complexes:
            st = self.region_starts.get(cx.id)
            en = self.region_ends.get(cx.id)
            if st and en:
                core_windows.append(RegionWindow(st[0], en[0], [en[1][cx.id] - st[1][cx.id]]))
            else:
                core_windows.append(None)
        return RunResult(self.now, final, window, core_windows, self.memory.conflicts, self.trace_lines)

    # inspection helpers -------------------------------------------------------------
    def read_double(self, addr: int) -> float:
        from .fparith import from_bits
        return from_bits(self.memory.read(addr, 8))

    def read_word(self, addr: int) -> int:
        return self.memory.read(addr, 4)


def simulate(program: Program, cfg: ClusterConfig | None = None, max_cycles: int = 10_000_000,
             **kw) -> tuple[Cluster, RunResult]:
    cl = Cluster(cfg or ClusterConfig.with_cores(1), program, **kw)
    res = cl.run(max_cycles)
    return cl, res
