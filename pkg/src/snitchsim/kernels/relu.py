"""Element-wise ReLU: y = max(x, 0)."""
from __future__ import annotations

import numpy as np

from .runtime import (Asm, KernelBuild, Layout, barrier, chunks, close, finish, prologue, read_doubles,
                      region_end, region_start, rng_doubles)


def build(n: int = 1024, variant: str = "baseline", cores: int = 1, seed: int = 0,
          x=None, capacity: int | None = None) -> KernelBuild:
    """``x`` overrides the generated input (its length must equal ``n``)."""
    parts = chunks(n, cores)
    if any(c == 0 for _, c in parts):
        raise ValueError(f"relu: n={n} too small for {cores} cores")
    if x is None:
        x = rng_doubles(seed, n)
    else:
        x = np.asarray(x, dtype=float)
        if x.shape != (n,):
            raise ValueError("relu: input length must equal n")
    lay = Layout(capacity=capacity)
    ax = lay.doubles("x", x)
    ay = lay.alloc("y", 8 * n, bank_offset=16)
    table = [[ax + 8 * s, ay + 8 * s, c] for s, c in parts]
    a = Asm()
    prologue(a, lay, table)
    a("lw a2, 0(s1)", "lw a3, 4(s1)", "lw a4, 8(s1)", "fcvt.d.w fs0, zero")
    region_start(a, cores)
    if variant == "baseline":
        a.label("loop")
        a("fld ft2, 0(a2)",
          "fmax.d ft3, ft2, fs0",
          "fsd ft3, 0(a3)",
          "addi a2, a2, 8",
          "addi a3, a3, 8",
          "addi a4, a4, -1",
          "bnez a4, loop")
    else:
        a("li t0, 8",
          "ssr.bound 0, 0, a4", "ssr.stride 0, 0, t0", "ssr.read 0, 1, a2",
          "ssr.bound 1, 0, a4", "ssr.stride 1, 0, t0", "ssr.write 1, 1, a3",
          "ssr.enable")
        if variant == "ssr":
            a.label("loop")
            a("fmax.d ft1, ft0, fs0", "addi a4, a4, -1", "bnez a4, loop")
        elif variant == "ssr_frep":
            a("frep.o a4, 1, 0, 0", "fmax.d ft1, ft0, fs0")
        else:
            raise ValueError(f"relu: unknown variant {variant!r}")
        a("ssr.disable")
    barrier(a, cores)
    region_end(a)
    a("ecall")
    prog, src = finish(a, lay)
    want = np.maximum(x, 0.0)

    def check(cluster):
        return close(read_doubles(cluster, ay, n), want, 0.0)

    return KernelBuild(prog, src, lay, check, {"flops": n})
