"""Shared pieces of the kernel generators: data layout, assembly builder,
barrier, region markers and per-core parameter tables."""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from ..asm import TCDM_BASE, assemble
from ..cluster import PERIPH_WAKEUP
from ..isa import Program
from ..memory import MemoryMap, TcdmConfig

PERIPH_BASE = MemoryMap().periph_base


class CapacityError(ValueError):
    """Kernel data does not fit into the TCDM."""


class Layout:
    """Bump allocator producing the TCDM data image."""

    def __init__(self, base: int = TCDM_BASE, capacity: int | None = None):
        self.base = base
        self.capacity = TcdmConfig().size if capacity is None else capacity
        self.data = bytearray()
        self.symbols: dict[str, int] = {}

    def alloc(self, name: str, nbytes: int, align: int = 8, bank_offset: int | None = None) -> int:
        """Reserve ``nbytes``; ``bank_offset`` pads so the start lands on that 8-byte bank."""
        while (self.base + len(self.data)) % align:
            self.data.append(0)
        if bank_offset is not None:
            while ((len(self.data) >> 3) % 32) != bank_offset % 32:
                self.data.extend(bytes(8))
        addr = self.base + len(self.data)
        self.data.extend(bytes(nbytes))
        if len(self.data) > self.capacity:
            raise CapacityError(f"kernel data needs {len(self.data)} bytes, TCDM holds {self.capacity}")
        self.symbols[name] = addr
        return addr

    def doubles(self, name: str, values, **kw) -> int:
        arr = np.asarray(values, dtype="<f8").ravel()
        addr = self.alloc(name, 8 * arr.size, **kw)
        off = addr - self.base
        self.data[off:off + 8 * arr.size] = arr.tobytes()
        return addr

    def words(self, name: str, values, **kw) -> int:
        vals = [int(v) & 0xFFFFFFFF for v in values]
        addr = self.alloc(name, 4 * len(vals), align=kw.pop("align", 8), **kw)
        off = addr - self.base
        self.data[off:off + 4 * len(vals)] = struct.pack(f"<{len(vals)}I", *vals)
        return addr


class Asm:
    def __init__(self):
        self.lines: list[str] = []
        self._n = 0

    def __call__(self, *lines: str) -> None:
        for ln in lines:
            self.lines.append(ln if ln.endswith(":") else "    " + ln)

    def label(self, name: str) -> None:
        self.lines.append(f"{name}:")

    def fresh(self, prefix: str) -> str:
        self._n += 1
        return f".{prefix}{self._n}"

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def barrier(a: Asm, cores: int) -> None:
    """Software barrier: atomic arrival counter, last arriver wakes the others."""
    a("fence")
    if cores == 1:
        return
    wait, done = a.fresh("bwait"), a.fresh("bdone")
    a("la t5, _barrier",
      "li t6, 1",
      "amoadd.w t6, t6, (t5)",
      f"li t4, {cores - 1}",
      f"bne t6, t4, {wait}",
      "sw zero, 0(t5)",
      f"li t4, {(1 << cores) - 1}",
      "li t3, 1",
      "sll t3, t3, s0",
      "xor t4, t4, t3",
      f"li t3, {PERIPH_BASE + PERIPH_WAKEUP}",
      "sw t4, 0(t3)",
      f"j {done}")
    a.label(wait)
    a("wfi")
    a.label(done)


def prologue(a: Asm, layout: Layout, table: list[list[int]] | None = None) -> None:
    """Hart id into s0; s1 points at this core's row of ``table``."""
    layout.alloc("_barrier", 8)
    a("csrr s0, mhartid")
    if table:
        width = max(len(r) for r in table)
        stride = 1
        while stride < width:
            stride *= 2
        flat = []
        for row in table:
            flat.extend(list(row) + [0] * (stride - len(row)))
        layout.words("_params", flat)
        a("la s1, _params",
          f"slli t0, s0, {(stride * 4).bit_length() - 1}",
          "add s1, s1, t0")


def region_start(a: Asm, cores: int) -> None:
    barrier(a, cores)
    a("csrwi region, 1")


def region_end(a: Asm) -> None:
    a("csrwi region, 0")


def chunks(n: int, parts: int) -> list[tuple[int, int]]:
    """Split ``range(n)`` into ``parts`` contiguous (start, count) pieces."""
    base, extra = divmod(n, parts)
    out, start = [], 0
    for p in range(parts):
        cnt = base + (1 if p < extra else 0)
        out.append((start, cnt))
        start += cnt
    return out


def rng_doubles(seed: int, n: int, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
    return np.random.default_rng(seed).uniform(lo, hi, n)


@dataclass
class KernelBuild:
    program: Program
    source: str
    layout: Layout
    check: object                 # Callable[[Cluster], tuple[bool, str]]
    info: dict = field(default_factory=dict)


def finish(a: Asm, layout: Layout) -> tuple[Program, str]:
    src = a.text()
    prog = assemble(src, symbols=dict(layout.symbols))
    prog.data = bytes(layout.data)
    prog.data_base = layout.base
    prog.symbols = dict(layout.symbols)
    return prog, src


def read_doubles(cluster, addr: int, n: int) -> np.ndarray:
    mem = cluster.memory
    off = addr - mem.cfg.base
    return np.frombuffer(bytes(mem.tcdm[off:off + 8 * n]), dtype="<f8").copy()


def read_words(cluster, addr: int, n: int) -> list[int]:
    mem = cluster.memory
    off = addr - mem.cfg.base
    return list(struct.unpack(f"<{n}I", bytes(mem.tcdm[off:off + 4 * n])))


def close(got: np.ndarray, want: np.ndarray, rtol: float) -> tuple[bool, str]:
    got = np.asarray(got, dtype=float)
    want = np.asarray(want, dtype=float)
    if got.shape != want.shape:
        return False, f"shape {got.shape} != {want.shape}"
    got, want = got.ravel(), want.ravel()
    if rtol == 0.0:
        bad = np.flatnonzero(got.view(np.uint64) != want.view(np.uint64))
        if bad.size:
            i = bad[0]
            return False, f"{bad.size} mismatches (bit-exact); first at {i}: {float(got[i])!r} != {float(want[i])!r}"
        return True, "bit-exact"
    scale = max(1.0, float(np.max(np.abs(want))) if want.size else 1.0)
    err = float(np.max(np.abs(got - want))) / scale if want.size else 0.0
    if not err <= rtol:
        return False, f"max relative error {err:.3e} > {rtol:g}"
    return True, f"max relative error {err:.3e}"


def unrolled(lines: list[str], mask: int, p: int) -> list[str]:
    """Inner-mode expansion of a staggered block, for the core to issue itself."""
    out = []
    for ln in lines:
        mn, ops = ln.split(None, 1)
        regs = [r.strip() for r in ops.split(",")]
        for i in range(p):
            rr = list(regs)
            for bit, idx in ((8, 0), (1, 1), (2, 2), (4, 3)):
                if mask & bit and idx < len(rr) and rr[idx].startswith("f") and rr[idx][1:].isdigit():
                    rr[idx] = f"f{int(rr[idx][1:]) + i}"
            out.append(f"{mn} {', '.join(rr)}")
    return out
