"""2D convolution (valid, no flip): out[r][c] = sum img[r+i][c+j] * w[i][j]
for an n x n image and a k x k filter.

Taps are accumulated in row-major filter order, first tap by multiplication.
Stream variants compute blocks of up to four neighbouring outputs in one row,
one staggered accumulator each: ft0 walks the image (output, filter column,
filter row) and ft1 repeats each weight once per output of the block. A row
of m outputs is covered by m // 4 blocks of four plus one narrower block (ssr)
or one more block of four overlapping its neighbour (ssr_frep), which keeps
the accumulator chains long enough to hide the FMA latency.
Image rows are padded and each core reads its own copy of the weights so
that cores working in lockstep spread over the banks.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .runtime import (Asm, KernelBuild, Layout, barrier, chunks, close, finish, prologue, read_doubles,
                      region_end, region_start, rng_doubles, unrolled)

W = 4
ACC = 8                     # f8..f11


def reference(img: np.ndarray, w: np.ndarray) -> np.ndarray:
    n, k = len(img), len(w)
    m = n - k + 1
    out = np.empty((m, m))
    taps = [(i, j, Fraction(float(w[i, j]))) for i in range(k) for j in range(k)]
    for r in range(m):
        for c in range(m):
            acc = None
            for i, j, wf in taps:
                prod = Fraction(float(img[r + i, c + j])) * wf
                acc = float(prod) if acc is None else float(prod + Fraction(acc))
            out[r, c] = acc
    return out


def build(n: int = 32, variant: str = "baseline", cores: int = 1, seed: int = 0, k: int = 7,
          pad: int = 1, capacity: int | None = None) -> KernelBuild:
    if variant not in ("baseline", "ssr", "ssr_frep"):
        raise ValueError(f"conv2d: unknown variant {variant!r}")
    if k < 2 or n < k:
        raise ValueError("conv2d: need 2 <= k <= n")
    m = n - k + 1
    rows = chunks(m, cores)
    if any(c == 0 for _, c in rows):
        raise ValueError(f"conv2d: {m} output rows cannot feed {cores} cores")
    ld = n + pad
    if 8 * ld > 2047:
        raise ValueError("conv2d: image too wide for immediate row offsets")
    img = rng_doubles(seed, n * n).reshape(n, n)
    wts = rng_doubles(seed + 1, k * k).reshape(k, k)
    lay = Layout(capacity=capacity)
    padded = np.zeros((n, ld))
    padded[:, :n] = img
    ai = lay.doubles("img", padded)
    # one weight copy per core; consecutive copies start on different banks
    aw = lay.doubles("weights", np.tile(wts.ravel(), cores), bank_offset=16)
    ao = lay.alloc("out", 8 * m * m)
    table = [[ai + 8 * ld * r0, ao + 8 * m * r0, cnt, aw + 8 * k * k * c] for c, (r0, cnt) in enumerate(rows)]
    a = Asm()
    prologue(a, lay, table)
    a("lw a2, 0(s1)", "lw a3, 4(s1)", "lw a4, 8(s1)", "lw a7, 12(s1)")
    region_start(a, cores)
    if variant == "baseline":
        _baseline(a, ld, k, m)
    else:
        _streamed(a, ld, k, m, variant == "ssr_frep")
    barrier(a, cores)
    region_end(a)
    a("ecall")
    prog, src = finish(a, lay)
    want = reference(img, wts)

    def check(cluster):
        return close(read_doubles(cluster, ao, m * m).reshape(m, m), want, 0.0)

    return KernelBuild(prog, src, lay, check, {"flops": 2 * k * k * m * m})


def _baseline(a: Asm, ld: int, k: int, m: int) -> None:
    # one output at a time, one tap per loop iteration
    a.label("row")
    a("mv a5, a2", "mv a6, a3", f"li t2, {m}")
    a.label("out")
    a("mv t0, a5", "mv t1, a7", "fld ft2, 0(t0)", "fld ft3, 0(t1)", "fmul.d fa0, ft2, ft3",
      f"li t3, {k}", f"li t4, {k}", "j .tapnext")
    a.label("frow")
    a(f"li t4, {k}")
    a.label("tap")
    a("fld ft2, 0(t0)", "fld ft3, 0(t1)", "fmadd.d fa0, ft2, ft3, fa0")
    a.label(".tapnext")
    a("addi t0, t0, 8", "addi t1, t1, 8", "addi t4, t4, -1", "bnez t4, tap")
    a(f"addi t0, t0, {8 * (ld - k)}", "addi t3, t3, -1", "bnez t3, frow")
    a("fsd fa0, 0(a6)", "addi a5, a5, 8", "addi a6, a6, 8", "addi t2, t2, -1", "bnez t2, out")
    a(f"addi a2, a2, {8 * ld}", f"addi a3, a3, {8 * m}", "addi a4, a4, -1", "bnez a4, row")


def _config(a: Asm, w: int, k: int) -> None:
    a(f"li t0, {w}", "ssr.bound 0, 0, t0", "ssr.bound 1, 0, t0", f"li t4, {w}", f"li t5, {w * (k * k - 1)}")


def _block(a: Asm, w: int, k: int, frep: bool) -> None:
    a("ssr.read 0, 3, a5", "ssr.read 1, 2, a7")
    if frep:
        a(f"frep.o t4, 1, 0b1000, {w - 1}", f"fmul.d f{ACC}, ft0, ft1",
          f"frep.o t5, 1, 0b1100, {w - 1}", f"fmadd.d f{ACC}, ft0, ft1, f{ACC}")
    else:
        a(*unrolled([f"fmul.d f{ACC}, ft0, ft1"], 0b1000, w), f"li t3, {k * k - 1}")
        lp = a.fresh("tap")
        a.label(lp)
        a(*unrolled([f"fmadd.d f{ACC}, ft0, ft1, f{ACC}"], 0b1100, w), "addi t3, t3, -1", f"bnez t3, {lp}")
    for i in range(w):
        a(f"fsd f{ACC + i}, {8 * i}(a6)")
    a(f"addi a5, a5, {8 * w}", f"addi a6, a6, {8 * w}")


def _streamed(a: Asm, ld: int, k: int, m: int, frep: bool) -> None:
    full, rem = divmod(m, W)
    a("li t0, 8", "ssr.stride 0, 0, t0", "ssr.stride 0, 1, t0", "ssr.stride 1, 1, t0",
      "ssr.stride 1, 0, zero", f"li t0, {8 * ld}", "ssr.stride 0, 2, t0",
      f"li t0, {k}", "ssr.bound 0, 1, t0", "ssr.bound 0, 2, t0", f"li t0, {k * k}", "ssr.bound 1, 1, t0",
      "ssr.enable")
    a.label("row")
    a("mv a5, a2", "mv a6, a3")
    if full:
        _config(a, W, k)
        a(f"li t2, {full}")
        a.label("blk")
        _block(a, W, k, frep)
        a("addi t2, t2, -1", "bnez t2, blk")
    if rem and frep and full:
        # overlap the last full block with its neighbour instead of narrowing it
        a(f"addi a5, a2, {8 * (m - W)}", f"addi a6, a3, {8 * (m - W)}")
        _block(a, W, k, frep)
    elif rem:
        _config(a, rem, k)
        _block(a, rem, k, frep)
    a(f"addi a2, a2, {8 * ld}", f"addi a3, a3, {8 * m}", "addi a4, a4, -1", "bnez a4, row")
    a("ssr.disable")
