"""AXPY: y = a * x + y. Three memory accesses per two flops leave no room for
a third stream, so there is no FREP variant."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .runtime import (Asm, KernelBuild, Layout, barrier, chunks, close, finish, prologue, read_doubles,
                      region_end, region_start, rng_doubles)


def build(n: int = 1024, variant: str = "baseline", cores: int = 1, seed: int = 0,
          capacity: int | None = None) -> KernelBuild:
    if variant not in ("baseline", "ssr"):
        raise ValueError(f"axpy has no {variant!r} variant (only baseline and ssr)")
    parts = chunks(n, cores)
    if any(c == 0 for _, c in parts):
        raise ValueError(f"axpy: n={n} too small for {cores} cores")
    x = rng_doubles(seed, n)
    y = rng_doubles(seed + 1, n)
    alpha = float(rng_doubles(seed + 2, 1)[0])
    lay = Layout(capacity=capacity)
    aa = lay.doubles("alpha", [alpha])
    ax = lay.doubles("x", x)
    ay = lay.doubles("y", y, bank_offset=16)
    table = [[ax + 8 * s, ay + 8 * s, c] for s, c in parts]
    a = Asm()
    prologue(a, lay, table)
    a("lw a2, 0(s1)", "lw a3, 4(s1)", "lw a4, 8(s1)", "la t0, alpha", "fld fs0, 0(t0)")
    region_start(a, cores)
    if variant == "baseline":
        a.label("loop")
        a("fld ft2, 0(a2)",
          "fld ft3, 0(a3)",
          "fmadd.d ft4, fs0, ft2, ft3",
          "fsd ft4, 0(a3)",
          "addi a2, a2, 8",
          "addi a3, a3, 8",
          "addi a4, a4, -1",
          "bnez a4, loop")
    else:
        # x streams through ft0, y is loaded by ft1; the result goes back with fsd
        a("li t0, 8",
          "ssr.bound 0, 0, a4", "ssr.stride 0, 0, t0", "ssr.read 0, 1, a2",
          "ssr.bound 1, 0, a4", "ssr.stride 1, 0, t0", "ssr.read 1, 1, a3",
          "ssr.enable")
        a.label("loop")
        a("fmadd.d ft4, fs0, ft0, ft1",
          "fsd ft4, 0(a3)",
          "addi a3, a3, 8",
          "addi a4, a4, -1",
          "bnez a4, loop")
        a("ssr.disable")
    barrier(a, cores)
    region_end(a)
    a("ecall")
    prog, src = finish(a, lay)
    # fused multiply-add, rounded once
    fa = Fraction(alpha)
    want = np.array([float(fa * Fraction(xi) + Fraction(yi)) for xi, yi in zip(x, y)])

    def check(cluster):
        return close(read_doubles(cluster, ay, n), want, 0.0)

    return KernelBuild(prog, src, lay, check, {"flops": 2 * n})

