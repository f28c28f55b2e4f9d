"""Dot product of two length-n vectors."""
from __future__ import annotations

import numpy as np

from .runtime import (Asm, KernelBuild, Layout, barrier, chunks, close, finish, prologue, read_doubles,
                      region_end, region_start, rng_doubles)

ACC = ("f8", "f9", "f10", "f11")   # contiguous for staggering


def _reduce(a: Asm, k: int) -> None:
    if k >= 2:
        a("fadd.d f8, f8, f9")
    if k == 4:
        a("fadd.d f10, f10, f11",
          "fadd.d f8, f8, f10")


def build(n: int = 4096, variant: str = "baseline", cores: int = 1, seed: int = 0,
          unroll: int = 4, capacity: int | None = None) -> KernelBuild:
    if unroll not in (1, 2, 4):
        raise ValueError("unroll must be 1, 2 or 4")
    parts = chunks(n, cores)
    if any(c % unroll or c == 0 for _, c in parts):
        raise ValueError(f"dot: each core's share of n={n} must be a non-zero multiple of {unroll}")
    x = rng_doubles(seed, n)
    y = rng_doubles(seed + 1, n)
    lay = Layout(capacity=capacity)
    ax = lay.doubles("x", x)
    ay = lay.doubles("y", y, bank_offset=16)
    lay.alloc("partial", 8 * cores)
    ares = lay.alloc("result", 8)
    table = [[ax + 8 * s, ay + 8 * s, c] for s, c in parts]
    a = Asm()
    prologue(a, lay, table)
    a("lw a2, 0(s1)", "lw a3, 4(s1)", "lw a4, 8(s1)")
    k = 4 if variant == "ssr_frep" else unroll
    for r in ACC[:k]:
        a(f"fcvt.d.w {r}, zero")
    region_start(a, cores)
    if variant == "baseline":
        a("slli t0, a4, 3", "add t2, a2, t0")      # end pointer
        a.label("loop")
        for u in range(unroll):
            a(f"fld ft{2 * u}, {8 * u}(a2)", f"fld ft{2 * u + 1}, {8 * u}(a3)")
        for u in range(unroll):
            a(f"fmadd.d {ACC[u]}, ft{2 * u}, ft{2 * u + 1}, {ACC[u]}")
        a(f"addi a2, a2, {8 * unroll}", f"addi a3, a3, {8 * unroll}", "bne a2, t2, loop")
    else:
        a("li t0, 8",
          "ssr.bound 0, 0, a4", "ssr.stride 0, 0, t0", "ssr.read 0, 1, a2",
          "ssr.bound 1, 0, a4", "ssr.stride 1, 0, t0", "ssr.read 1, 1, a3",
          "ssr.enable")
        if variant == "ssr":
            a("srli t1, a4, %d" % (unroll.bit_length() - 1))
            a.label("loop")
            for u in range(unroll):
                a(f"fmadd.d {ACC[u]}, ft0, ft1, {ACC[u]}")
            a("addi t1, t1, -1", "bnez t1, loop")
        elif variant == "ssr_frep":
            a("frep.o a4, 1, 0b1100, 3",
              "fmadd.d f8, ft0, ft1, f8")
        else:
            raise ValueError(f"dot: unknown variant {variant!r}")
    _reduce(a, k)
    if variant != "baseline":
        a("ssr.disable")
    a("la t0, partial", "slli t1, s0, 3", "add t0, t0, t1", "fsd f8, 0(t0)")
    if cores > 1:
        barrier(a, cores)
        done = a.fresh("done")
        a(f"bnez s0, {done}", "la t0, partial", "fld f8, 0(t0)")
        for c in range(1, cores):
            a(f"fld f9, {8 * c}(t0)", "fadd.d f8, f8, f9")
        a("la t0, result", "fsd f8, 0(t0)", "fence")
        a.label(done)
    else:
        a("la t0, result", "fsd f8, 0(t0)", "fence")
    region_end(a)
    a("ecall")
    prog, src = finish(a, lay)
    want = float(np.dot(x, y))

    def check(cluster):
        got = read_doubles(cluster, ares, 1)
        return close(got, np.array([want]), 1e-9)

    return KernelBuild(prog, src, lay, check, {"flops": 2 * n})
