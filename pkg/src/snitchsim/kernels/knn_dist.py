"""Distance phase of k-nearest-neighbours: squared Euclidean distance from one
query to each of n points (row-major, ``dim`` coordinates).

Stream variants read the points through ft0 in batches of four points,
coordinate-major within a batch, and write distances through ft1:

    d_k = p_k - q_k          (one block, staggered destinations)
    a = d_0^2 + ... + d_{dim-2}^2
    ft1 = d_{dim-1}^2 + a
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .runtime import (Asm, KernelBuild, Layout, barrier, chunks, close, finish, prologue, read_doubles,
                      region_end, region_start, rng_doubles, unrolled)

P = 4
Q = 2                       # query coordinates f2..f5
D = 6                       # differences: D + P*k .. for coordinate k
ACC = 22                    # partial sums f22..f25


def _fma(a: float, b: float, c: float) -> float:
    return float(Fraction(a) * Fraction(b) + Fraction(c))


def reference(points: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Squared distances rounded exactly as the kernels compute them."""
    out = np.empty(len(points))
    for i, p in enumerate(points):
        d = [float(p[k] - q[k]) for k in range(len(q))]
        acc = d[0] * d[0]
        for k in range(1, len(d)):
            acc = _fma(d[k], d[k], acc)
        out[i] = acc
    return out


def build(n: int = 256, variant: str = "baseline", cores: int = 1, seed: int = 0, dim: int = 4,
          capacity: int | None = None) -> KernelBuild:
    if variant not in ("baseline", "ssr", "ssr_frep"):
        raise ValueError(f"knn_dist: unknown variant {variant!r}")
    if not 1 <= dim <= 4:
        raise ValueError("knn_dist: dim must be between 1 and 4")
    parts = chunks(n, cores)
    if any(c == 0 or c % P for _, c in parts):
        raise ValueError(f"knn_dist: each core's share of n={n} must be a non-zero multiple of {P}")
    pts = rng_doubles(seed, n * dim).reshape(n, dim)
    q = rng_doubles(seed + 1, dim)
    lay = Layout(capacity=capacity)
    aq = lay.doubles("query", q)
    ap = lay.doubles("points", pts)
    ad = lay.alloc("dist", 8 * n, bank_offset=16)
    table = [[ap + 8 * dim * s, ad + 8 * s, c] for s, c in parts]
    a = Asm()
    prologue(a, lay, table)
    a("lw a2, 0(s1)", "lw a3, 4(s1)", "lw a4, 8(s1)", "la t0, query")
    for k in range(dim):
        a(f"fld f{Q + k}, {8 * k}(t0)")
    region_start(a, cores)
    if variant == "baseline":
        _baseline(a, dim)
    else:
        _streamed(a, dim, variant == "ssr_frep")
    barrier(a, cores)
    region_end(a)
    a("ecall")
    prog, src = finish(a, lay)
    want = reference(pts, q)

    def check(cluster):
        return close(read_doubles(cluster, ad, n), want, 0.0)

    return KernelBuild(prog, src, lay, check, {"flops": 3 * dim * n})


def _baseline(a: Asm, dim: int) -> None:
    a.label("loop")
    for k in range(dim):
        a(f"fld fa{k}, {8 * k}(a2)")
    for k in range(dim):
        a(f"fsub.d fa{k}, fa{k}, f{Q + k}")
    a("fmul.d ft8, fa0, fa0")
    for k in range(1, dim):
        a(f"fmadd.d ft8, fa{k}, fa{k}, ft8")
    a("fsd ft8, 0(a3)", f"addi a2, a2, {8 * dim}", "addi a3, a3, 8", "addi a4, a4, -1", "bnez a4, loop")


def _blocks(dim: int):
    """The instruction blocks of one batch as (mask, lines)."""
    diff = (0b1000, [f"fsub.d f{D + P * k}, ft0, f{Q + k}" for k in range(dim)])
    last = D + P * (dim - 1)
    if dim == 1:
        return [diff, (0b0011, [f"fmul.d ft1, f{last}, f{last}"])]
    mid = [f"fmul.d f{ACC}, f{D}, f{D}"]
    mid += [f"fmadd.d f{ACC}, f{D + P * k}, f{D + P * k}, f{ACC}" for k in range(1, dim - 1)]
    return [diff, (0b1111, mid), (0b0111, [f"fmadd.d ft1, f{last}, f{last}, f{ACC}"])]


def _streamed(a: Asm, dim: int, frep: bool) -> None:
    # ft0: point x coordinate x batch; ft1: one distance per point
    a(f"li t0, {P}", "ssr.bound 0, 0, t0", f"li t0, {8 * dim}", "ssr.stride 0, 0, t0",
      f"li t0, {dim}", "ssr.bound 0, 1, t0", "li t0, 8", "ssr.stride 0, 1, t0",
      "srli t1, a4, 2", "ssr.bound 0, 2, t1", f"li t0, {8 * dim * P}", "ssr.stride 0, 2, t0",
      "ssr.bound 1, 0, a4", "li t0, 8", "ssr.stride 1, 0, t0",
      "ssr.read 0, 3, a2", "ssr.write 1, 1, a3", f"li t3, {P}", "ssr.enable")
    a.label("batch")
    for mask, body in _blocks(dim):
        if frep:
            a(f"frep.i t3, {len(body)}, {mask:#06b}, {P - 1}", *body)
        else:
            a(*unrolled(body, mask, P))
    a("addi t1, t1, -1", "bnez t1, batch", "ssr.disable")
