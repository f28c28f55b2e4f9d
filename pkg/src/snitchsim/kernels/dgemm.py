"""Matrix multiplication C = A @ B (n x n, row-major), dot-product method.

Rows of C are chunked across cores. Each core walks its columns starting at
a per-core offset so that concurrent column streams of B hit different
banks. In the stream variants ft0 replays the current row of A once per
output column and ft1 walks the columns of B.
"""
from __future__ import annotations

import numpy as np

from .runtime import (Asm, KernelBuild, Layout, barrier, chunks, close, finish, prologue, read_doubles,
                      region_end, region_start, rng_doubles)

ACC = ("f8", "f9", "f10", "f11")


def build(n: int = 32, variant: str = "baseline", cores: int = 1, seed: int = 0, pad: int = 1,
          identity: bool = False, capacity: int | None = None) -> KernelBuild:
    if n < 4 or n % 4:
        raise ValueError("dgemm: n must be a multiple of 4")
    if variant not in ("baseline", "ssr", "ssr_frep"):
        raise ValueError(f"dgemm: unknown variant {variant!r}")
    ld = n + pad
    rows = chunks(n, cores)
    if any(c == 0 for _, c in rows):
        raise ValueError(f"dgemm: n={n} too small for {cores} cores")
    A = np.eye(n) if identity else rng_doubles(seed, n * n).reshape(n, n)
    B = rng_doubles(seed + 1, n * n).reshape(n, n)

    def padded(m):
        out = np.zeros((n, ld))
        out[:, :n] = m
        return out

    lay = Layout(capacity=capacity)
    aA = lay.doubles("A", padded(A))
    aB = lay.doubles("B", padded(B), bank_offset=16)
    aC = lay.alloc("C", 8 * n * ld)
    lay.alloc("_sink", 8 * cores)
    table = []
    for c, (r0, cnt) in enumerate(rows):
        j0 = (c * n // cores) % n
        table.append([aA + 8 * ld * r0, aC + 8 * ld * r0, cnt, j0])
    a = Asm()
    prologue(a, lay, table)
    a("lw a2, 0(s1)", "lw a5, 4(s1)", "lw a6, 8(s1)", "lw a7, 12(s1)", "la a3, B")
    region_start(a, cores)
    if variant == "baseline":
        _baseline(a, n, ld)
    else:
        _streams(a, n, ld, variant)
    barrier(a, cores)
    region_end(a)
    a("ecall")
    prog, src = finish(a, lay)
    want = B.copy() if identity else A @ B
    tol = 0.0 if identity else 1e-9

    def check(cluster):
        got = read_doubles(cluster, aC, n * ld).reshape(n, ld)[:, :n]
        return close(got, want, tol)

    return KernelBuild(prog, src, lay, check, {"flops": 2 * n ** 3})


def _segments(a: Asm, body) -> None:
    """Emit the two column segments of a row: [j0, n) then [0, j0)."""
    a.label("row")
    body(first=True)
    a("beqz a7, .rownext")
    body(first=False)
    a.label(".rownext")


def _baseline(a: Asm, n: int, ld: int) -> None:
    step = 8 * ld
    big = 3 * step > 2047
    a(f"li s2, {4 * step}", f"li s3, {step}")

    def body(first: bool) -> None:
        tag = "a" if first else "b"
        if first:
            a(f"li t2, {n}", "sub t2, t2, a7", "slli t3, a7, 3", "add a4, a5, t3", "add t6, a3, t3")
        else:
            a("mv t2, a7", "mv a4, a5", "mv t6, a3")
        a.label(f".out{tag}")
        for r in ACC:
            a(f"fcvt.d.w {r}, zero")
        a("mv t0, a2", "mv t1, t6", f"addi t5, a2, {8 * n}")
        a.label(f".k{tag}")
        for u in range(4):
            a(f"fld ft{2 * u}, {8 * u}(t0)")
            if big:
                a(f"fld ft{2 * u + 1}, 0(t1)", "add t1, t1, s3")
            else:
                a(f"fld ft{2 * u + 1}, {u * step}(t1)")
        for u in range(4):
            a(f"fmadd.d {ACC[u]}, ft{2 * u}, ft{2 * u + 1}, {ACC[u]}")
        a("addi t0, t0, 32")
        if not big:
            a("add t1, t1, s2")
        a(f"bne t0, t5, .k{tag}")
        a("fadd.d f8, f8, f9", "fadd.d f10, f10, f11", "fadd.d f8, f8, f10", "fsd f8, 0(a4)",
          "addi a4, a4, 8", "addi t6, t6, 8", "addi t2, t2, -1", f"bnez t2, .out{tag}")

    _segments(a, body)
    a(f"addi a2, a2, {8 * ld}", f"addi a5, a5, {8 * ld}", "addi a6, a6, -1", "bnez a6, row")


def _streams(a: Asm, n: int, ld: int, variant: str) -> None:
    a("li t0, 8", f"li t1, {8 * ld}", f"li t3, {n}",
      "ssr.bound 0, 0, t3", "ssr.stride 0, 0, t0", "ssr.stride 0, 1, zero",
      "ssr.bound 1, 0, t3", "ssr.stride 1, 0, t1", "ssr.stride 1, 1, t0",
      "li t4, 3", f"li t5, {n - 3}", f"li s2, {n // 4}",
      "ssr.enable")

    def body(first: bool) -> None:
        tag = "a" if first else "b"
        if first:
            a(f"li t2, {n}", "sub t2, t2, a7", "slli t3, a7, 3", "add a4, a5, t3", "add t6, a3, t3")
        else:
            a("mv t2, a7", "mv a4, a5", "mv t6, a3")
        a("ssr.bound 0, 1, t2", "ssr.read 0, 2, a2",
          "ssr.bound 1, 1, t2", "ssr.read 1, 2, t6")
        a.label(f".out{tag}")
        if variant == "ssr_frep":
            # the reduction of the previous output is folded into this one:
            # f12/f13 hold its partial sums, s4 its address
            a("frep.o t4, 1, 0b1000, 2", "fmul.d f8, ft0, ft1",
              "fsd f14, 0(s4)",
              "frep.o t5, 1, 0b1100, 2", "fmadd.d f8, ft0, ft1, f8",
              "fadd.d f12, f8, f9", "fadd.d f14, f12, f10",
              "mv s4, a4")
        else:
            a("fmul.d f8, ft0, ft1", "fmul.d f9, ft0, ft1", "fmul.d f10, ft0, ft1", "fmul.d f11, ft0, ft1",
              "addi t0, s2, -1")
            lp = a.fresh("k")
            a(f"beqz t0, {lp}e")
            a.label(lp)
            for r in ACC:
                a(f"fmadd.d {r}, ft0, ft1, {r}")
            a("addi t0, t0, -1", f"bnez t0, {lp}")
            a.label(f"{lp}e")
            a("fadd.d f8, f8, f9", "fadd.d f10, f10, f11", "fadd.d f8, f8, f10", "fsd f8, 0(a4)")
        a("addi a4, a4, 8", "addi t2, t2, -1", f"bnez t2, .out{tag}")

    if variant == "ssr_frep":
        # the first folded store goes to a scratch slot
        a("la s4, _sink", "fcvt.d.w f14, zero")
    _segments(a, body)
    a(f"addi a2, a2, {8 * ld}", f"addi a5, a5, {8 * ld}", "addi a6, a6, -1", "bnez a6, row")
    if variant == "ssr_frep":
        a("fsd f14, 0(s4)")
    a("ssr.disable")
