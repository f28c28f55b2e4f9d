"""Monte Carlo estimate of pi from xoshiro128+ samples.

Each core draws pairs (x, y) of 32-bit integers and counts the points with
x^2 + y^2 <= 2^64, computed in double precision. The random numbers come from
the integer core in every variant.

In the FREP variant the integer core writes each draw into the low word of a
double whose high word holds the exponent of 2^52, so the double is 2^52 + r
and one subtraction recovers r exactly. The ssr variant issues the
same FP code from the core. Batches of 8 samples go through a
triple-buffered scratch area read by ft0, and the FPU turns each sample into
+-1/2 added to eight staggered accumulators:

    x = v - 2^52   y = w - 2^52   s = x*x   s = y*y + s
    d = 2^64 - s   d = sign(d)    acc += d/2

hits = sum(acc) + samples/2.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .runtime import (Asm, KernelBuild, Layout, barrier, chunks, finish, prologue, read_words,
                      region_end, region_start, unrolled)

M32 = 0xFFFFFFFF
BATCH = 8
TWO52, TWO64 = 2.0 ** 52, 2.0 ** 64
# FREP register map: X, Y, ACC span BATCH registers each
X, Y, ACC, C52, K64, ONE, HALF = 2, 10, 18, 26, 27, 28, 29


def xoshiro128plus(state):
    """One step of xoshiro128+: returns (value, next state)."""
    s0, s1, s2, s3 = (int(v) & M32 for v in state)
    if not (s0 | s1 | s2 | s3):
        raise ValueError("xoshiro128+: state must not be all zero")
    result = (s0 + s3) & M32
    t = (s1 << 9) & M32
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = ((s3 << 11) | (s3 >> 21)) & M32
    return result, (s0, s1, s2, s3)


def xoshiro_stream(state, count: int) -> list[int]:
    out = []
    for _ in range(count):
        v, state = xoshiro128plus(state)
        out.append(v)
    return out


def seed_states(seed: int, cores: int) -> list[tuple[int, int, int, int]]:
    """Independent non-zero per-core generator states."""
    rng = np.random.default_rng(seed)
    states = []
    while len(states) < cores:
        st = tuple(int(v) for v in rng.integers(0, 1 << 32, size=4, dtype=np.uint64))
        if any(st):
            states.append(st)
    return states


def inside(rx: int, ry: int) -> bool:
    """The in-circle test exactly as the kernels round it."""
    xx = float(rx) * float(rx)
    s = float(Fraction(ry) * ry + Fraction(xx))      # fused multiply-add
    return s <= TWO64


def _draw(a: Asm, dst: str = "t0") -> None:
    # state in s2..s5
    a(f"add {dst}, s2, s5", "slli t1, s3, 9",
      "xor s4, s4, s2", "xor s5, s5, s3", "xor s3, s3, s4", "xor s2, s2, s5", "xor s4, s4, t1",
      "slli t1, s5, 11", "srli s5, s5, 21", "or s5, s5, t1")


def build(n: int = 4096, variant: str = "baseline", cores: int = 1, seed: int = 0,
          capacity: int | None = None) -> KernelBuild:
    if variant not in ("baseline", "ssr", "ssr_frep"):
        raise ValueError(f"montecarlo_pi: unknown variant {variant!r}")
    parts = chunks(n, cores)
    if any(c == 0 or c % BATCH for _, c in parts):
        raise ValueError(f"montecarlo_pi: each core's share of n={n} must be a non-zero multiple of {BATCH}")
    states = seed_states(seed, cores)
    lay = Layout(capacity=capacity)
    lay.doubles("consts", [TWO52, TWO64, 1.0, 0.5])
    hits = lay.alloc("hits", 4 * cores)
    # three 16-double buffers per core, preset to 2^52
    abuf = lay.doubles("mcbuf", [TWO52] * (3 * 2 * BATCH * cores))
    table = [[*st, c, abuf + 8 * 3 * 2 * BATCH * k] for k, (st, (_, c)) in enumerate(zip(states, parts))]
    a = Asm()
    prologue(a, lay, table)
    a("lw s2, 0(s1)", "lw s3, 4(s1)", "lw s4, 8(s1)", "lw s5, 12(s1)", "lw a7, 16(s1)",
      "la t0, consts", f"fld f{C52}, 0(t0)", f"fld f{K64}, 8(t0)", f"fld f{ONE}, 16(t0)",
      f"fld f{HALF}, 24(t0)")
    region_start(a, cores)
    if variant == "baseline":
        _baseline(a)
    else:
        _streamed(a, variant == "ssr_frep")
    a("la t0, hits", "slli t1, s0, 2", "add t0, t0, t1", "sw a6, 0(t0)")
    barrier(a, cores)
    region_end(a)
    a("ecall")
    prog, src = finish(a, lay)
    want = []
    for st, (_, c) in zip(states, parts):
        r = xoshiro_stream(st, 2 * c)
        want.append(sum(inside(r[2 * i], r[2 * i + 1]) for i in range(c)))

    def check(cluster):
        got = read_words(cluster, hits, cores)
        if got != want:
            return False, f"hit counts {got} != expected {want}"
        return True, f"hits {sum(got)}/{n}, pi ~ {4 * sum(got) / n:.5f}"

    return KernelBuild(prog, src, lay, check, {"flops": 4 * n, "hits": want})


def _baseline(a: Asm) -> None:
    a("li a6, 0")
    a.label("loop")
    _draw(a)
    a("fcvt.d.wu fa0, t0")
    _draw(a)
    a("fcvt.d.wu fa1, t0",
      "fmul.d fa0, fa0, fa0",
      "fmadd.d fa0, fa1, fa1, fa0",
      f"fle.d t2, fa0, f{K64}",
      "add a6, a6, t2",
      "addi a7, a7, -1",
      "bnez a7, loop")


def _streamed(a: Asm, frep: bool) -> None:
    for i in range(BATCH):
        a(f"fcvt.d.w f{ACC + i}, zero")
    a("lw a2, 20(s1)", "mv a3, a2", f"addi a4, a2, {3 * 16 * BATCH}",
      f"li t0, {2 * BATCH}", "ssr.bound 0, 0, t0", "li t0, 8", "ssr.stride 0, 0, t0",
      f"li t3, {BATCH}", "srli a5, a7, 3", "ssr.enable")
    a.label("batch")
    for i in range(BATCH):
        _draw(a)
        a(f"sw t0, {8 * i}(a3)")
        _draw(a)
        a(f"sw t0, {8 * (BATCH + i)}(a3)")
    blocks = [(0b1000, [f"fsub.d f{X}, ft0, f{C52}", f"fsub.d f{Y}, ft0, f{C52}"]),
              (0b1111, [f"fmul.d f{X}, f{X}, f{X}", f"fmadd.d f{X}, f{Y}, f{Y}, f{X}"]),
              (0b1110, [f"fsub.d f{X}, f{K64}, f{X}", f"fsgnj.d f{X}, f{ONE}, f{X}",
                        f"fmadd.d f{ACC}, f{HALF}, f{X}, f{ACC}"])]
    a("ssr.read 0, 1, a3")
    for mask, body in blocks:
        if frep:
            a(f"frep.i t3, {len(body)}, {mask:#06b}, {BATCH - 1}", *body)
        else:
            a(*unrolled(body, mask, BATCH))
    a(f"addi a3, a3, {16 * BATCH}")
    skip = a.fresh("wrap")
    a(f"bne a3, a4, {skip}", "mv a3, a2")
    a.label(skip)
    a("addi a5, a5, -1", "bnez a5, batch")
    for k in (1, 2, 4):
        for i in range(0, BATCH, 2 * k):
            a(f"fadd.d f{ACC + i}, f{ACC + i}, f{ACC + i + k}")
    a("srli t0, a7, 1", "fcvt.d.w fa0, t0", f"fadd.d f{ACC}, f{ACC}, fa0", f"fcvt.w.d a6, f{ACC}",
      "ssr.disable")


def build_stream(draws: int = 1000, state=(1, 2, 3, 4)) -> KernelBuild:
    """Single-core program storing ``draws`` consecutive generator outputs."""
    st = tuple(int(v) & M32 for v in state)
    xoshiro128plus(st)           # rejects the all-zero state
    lay = Layout()
    out = lay.alloc("draws", 4 * draws)
    a = Asm()
    prologue(a, lay, [list(st)])
    a("lw s2, 0(s1)", "lw s3, 4(s1)", "lw s4, 8(s1)", "lw s5, 12(s1)", "la a2, draws", f"li a3, {draws}")
    a.label("loop")
    _draw(a)
    a("sw t0, 0(a2)", "addi a2, a2, 4", "addi a3, a3, -1", "bnez a3, loop", "ecall")
    prog, src = finish(a, lay)
    want = xoshiro_stream(st, draws)

    def check(cluster):
        got = read_words(cluster, out, draws)
        return (got == want), f"{sum(g == w for g, w in zip(got, want))}/{draws} draws match"

    return KernelBuild(prog, src, lay, check, {"draws": want})
