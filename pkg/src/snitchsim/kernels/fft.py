"""Radix-2 decimation-in-time FFT on n complex doubles (interleaved re/im).

The input is first permuted into bit-reversed order by the integer core.
Each of the log2(n) stages then reads one buffer and writes the other, with a
barrier between stages. Butterflies of a stage are split evenly across cores.

Stream variants process butterflies in batches of up to four that share a
stride: consecutive butterflies of one group (distinct twiddles, staggered
twiddle registers) or the same butterfly position in consecutive groups (one
shared twiddle). Per batch the sequencer runs two inner-mode blocks, each
instruction popping exactly one operand from ft0:

    p1 = wr*br      p2 = wr*bi      t2 = p2 + wi*br   t1 = p1 - wi*bi
    a'r = ar + t1   a'i = ai + t2   b'r = ar - t1     b'i = ai - t2

ft0 walks b then a (re, im, twice each); ft1 writes a' then b'.
"""
from __future__ import annotations

import numpy as np

from .runtime import (Asm, KernelBuild, Layout, barrier, close, finish, prologue, read_doubles, region_end,
                      region_start, rng_doubles, unrolled)

BATCH = 4
# register bases (each spans BATCH registers when staggered)
WR, WI, P1, P2, T1, T2 = 2, 6, 10, 14, 18, 22


def bitrev(k: int, bits: int) -> int:
    return int(format(k, f"0{bits}b")[::-1], 2) if bits else 0


def _stage_plan(n: int, s: int, count: int) -> dict:
    span = 1 << s
    half = span >> 1
    p = min(BATCH, count)
    tws = (n // span) * 16          # byte distance between consecutive twiddles
    if half >= p:
        groups = max(1, count // half)
        return dict(mode="j", p=p, sets=min(half, count) // p, batches=groups, set_step=16 * p,
                    batch_step=16 * span, istr=16, tw_step=p * tws, tws=tws, half=half, span=span)
    p = min(p, count // half)
    groups = count // half
    return dict(mode="g", p=p, sets=half, batches=groups // p, set_step=16, batch_step=16 * span * p,
                istr=16 * span, tw_step=tws, tws=tws, half=half, span=span)


def build(n: int = 256, variant: str = "baseline", cores: int = 1, seed: int = 0,
          signal=None, bitrev_in_region: bool = False, capacity: int | None = None) -> KernelBuild:
    if n < 4 or n & (n - 1):
        raise ValueError("fft: n must be a power of two >= 4")
    if variant not in ("baseline", "ssr", "ssr_frep"):
        raise ValueError(f"fft: unknown variant {variant!r}")
    if cores & (cores - 1) or n // 2 < cores:
        raise ValueError(f"fft: need a power-of-two core count <= n/2, got {cores}")
    bits = n.bit_length() - 1
    if signal is None:
        sig = rng_doubles(seed, n) + 1j * rng_doubles(seed + 1, n)
    else:
        sig = np.asarray(signal, dtype=complex)
        if sig.shape != (n,):
            raise ValueError("fft: signal length must equal n")
    inter = np.empty(2 * n)
    inter[0::2], inter[1::2] = sig.real, sig.imag
    k = np.arange(n // 2)
    tw = np.exp(-2j * np.pi * k / n)
    twi = np.empty(n)
    twi[0::2], twi[1::2] = tw.real, tw.imag

    lay = Layout(capacity=capacity)
    axin = lay.doubles("xin", inter)
    bufs = [lay.alloc("X0", 16 * n), lay.alloc("X1", 16 * n, bank_offset=16)]
    atw = lay.doubles("W", twi)
    lay.words("brev", [bitrev(i, bits) * 16 for i in range(n)])
    count = n // 2 // cores
    per = n // cores
    table = []
    for c in range(cores):
        row = [4 * c * per, 16 * c * per, per]
        b0 = c * count
        for s in range(1, bits + 1):
            half = 1 << (s - 1)
            g0, j0 = divmod(b0, half)
            row += [(g0 * 2 * half + j0) * 16, j0 * (n >> s) * 16]
        table.append(row)

    a = Asm()
    prologue(a, lay, table)
    if not bitrev_in_region:
        _bitrev(a)
        region_start(a, cores)
    else:
        region_start(a, cores)
        _bitrev(a)
    barrier(a, cores)
    if variant != "baseline":
        a("ssr.enable")
    for s in range(1, bits + 1):
        src, dst = bufs[(s - 1) % 2], bufs[s % 2]
        off = 12 + 8 * (s - 1)
        if variant == "baseline":
            _stage_baseline(a, n, s, count, src, dst, atw, off)
        else:
            _stage_stream(a, _stage_plan(n, s, count), src, dst, atw, off, variant == "ssr_frep")
        if s < bits:
            barrier(a, cores)
    if variant != "baseline":
        a("ssr.disable")
    barrier(a, cores)
    region_end(a)
    a("ecall")
    prog, src_text = finish(a, lay)
    out = bufs[bits % 2]
    want = np.fft.fft(sig)
    want_i = np.empty(2 * n)
    want_i[0::2], want_i[1::2] = want.real, want.imag

    def check(cluster):
        return close(read_doubles(cluster, out, 2 * n), want_i, 1e-9)

    return KernelBuild(prog, src_text, lay, check, {"flops": 5 * n * bits, "out": out})


def _bitrev(a: Asm) -> None:
    a("lw a2, 0(s1)", "lw a3, 4(s1)", "lw a4, 8(s1)",
      "la t0, brev", "add a2, a2, t0", "la t0, X0", "add a3, a3, t0", "la a5, xin")
    lp = a.fresh("brev")
    a.label(lp)
    a("lw t0, 0(a2)", "add t0, t0, a5",
      "lw t1, 0(t0)", "lw t2, 4(t0)", "lw t3, 8(t0)", "lw t4, 12(t0)",
      "sw t1, 0(a3)", "sw t2, 4(a3)", "sw t3, 8(a3)", "sw t4, 12(a3)",
      "addi a2, a2, 4", "addi a3, a3, 16", "addi a4, a4, -1", f"bnez a4, {lp}")


def _stage_baseline(a: Asm, n: int, s: int, count: int, src: int, dst: int, atw: int, off: int) -> None:
    span = 1 << s
    half = span >> 1
    H = 16 * half
    tws = (n // span) * 16
    groups, inner = max(1, count // half), min(half, count)
    far = H + 8 > 2047
    a(f"lw a2, {off}(s1)", f"lw a4, {off + 4}(s1)",
      f"li t0, {atw}", "add a4, a4, t0",
      f"li t0, {dst}", "add a3, a2, t0", f"li t0, {src}", "add a2, a2, t0",
      f"li s3, {H}", f"li s4, {tws}", f"li s5, {16 * span}", f"li t2, {groups}")
    g_lp, j_lp = a.fresh("g"), a.fresh("j")
    a.label(g_lp)
    a("mv a5, a2", "mv a6, a3", "mv a7, a4", f"li t3, {inner}")
    a.label(j_lp)
    if far:
        a("add t4, a5, s3", "add t5, a6, s3")
        bl, bo, so = "t4", 0, "t5"
    else:
        bl, bo, so = "a5", H, "a6"
    a("fld fa0, 0(a5)", "fld fa1, 8(a5)", f"fld fa2, {bo}({bl})", f"fld fa3, {bo + 8}({bl})",
      "fld fa4, 0(a7)", "fld fa5, 8(a7)",
      "fmul.d fa6, fa5, fa3",
      "fmsub.d fa6, fa4, fa2, fa6",
      "fmul.d fa7, fa5, fa2",
      "fmadd.d fa7, fa4, fa3, fa7",
      "fadd.d ft2, fa0, fa6", "fadd.d ft3, fa1, fa7", "fsub.d ft4, fa0, fa6", "fsub.d ft5, fa1, fa7",
      "fsd ft2, 0(a6)", "fsd ft3, 8(a6)", f"fsd ft4, {bo}({so})", f"fsd ft5, {bo + 8}({so})",
      "addi a5, a5, 16", "addi a6, a6, 16", "add a7, a7, s4", "addi t3, t3, -1", f"bnez t3, {j_lp}")
    a("add a2, a2, s5", "add a3, a3, s5", "addi t2, t2, -1", f"bnez t2, {g_lp}")


def _blocks(distinct_tw: bool):
    """The two instruction blocks of a batch, as (mask, lines)."""
    tw = 0b0001 if distinct_tw else 0
    b1 = [f"fmul.d f{P1}, f{WR}, ft0",
          f"fmul.d f{P2}, f{WR}, ft0",
          f"fmadd.d f{T2}, f{WI}, ft0, f{P2}",
          f"fnmsub.d f{T1}, f{WI}, ft0, f{P1}"]
    b2 = [f"fadd.d ft1, ft0, f{T1}",
          f"fadd.d ft1, ft0, f{T2}",
          f"fsub.d ft1, ft0, f{T1}",
          f"fsub.d ft1, ft0, f{T2}"]
    return (0b1100 | tw, b1), (0b0010, b2)


def _stage_stream(a: Asm, pl: dict, src: int, dst: int, atw: int, off: int, frep: bool) -> None:
    p, H, istr = pl["p"], 16 * pl["half"], pl["istr"]
    distinct = pl["mode"] == "j"
    # lane 0: batch x (re, im) x pass x (b, a); lane 1: batch x (re, im) x (a, b)
    a(f"li t0, {istr}", "ssr.stride 0, 0, t0", "ssr.stride 1, 0, t0",
      "li t0, 8", "ssr.stride 0, 1, t0", "ssr.stride 1, 1, t0",
      "ssr.stride 0, 2, zero",
      f"li t0, {-H}", "ssr.stride 0, 3, t0",
      f"li t0, {H}", "ssr.stride 1, 2, t0",
      f"li s2, {p}", "ssr.bound 0, 0, s2", "ssr.bound 1, 0, s2",
      "li t0, 2", "ssr.bound 0, 1, t0", "ssr.bound 0, 2, t0", "ssr.bound 0, 3, t0",
      "ssr.bound 1, 1, t0", "ssr.bound 1, 2, t0")
    a(f"lw a2, {off}(s1)", f"lw a4, {off + 4}(s1)",
      f"li t0, {atw}", "add a4, a4, t0",
      f"li t0, {dst}", "add a3, a2, t0", f"li t0, {src + H}", "add a2, a2, t0",
      f"li s3, {pl['batch_step']}", f"li s4, {pl['set_step']}", f"li s5, {pl['tw_step']}",
      f"li t2, {pl['sets']}")
    (m1, b1), (m2, b2) = _blocks(distinct)
    set_lp, b_lp = a.fresh("set"), a.fresh("bat")
    a.label(set_lp)
    ntw = p if distinct else 1
    tws = pl["tws"]
    if distinct and (ntw - 1) * tws + 8 > 2047:
        a("mv t1, a4")
        for i in range(ntw):
            a(f"fld f{WR + i}, 0(t1)", f"fld f{WI + i}, 8(t1)", f"li t0, {tws}", "add t1, t1, t0")
    else:
        for i in range(ntw):
            a(f"fld f{WR + i}, {i * tws}(a4)", f"fld f{WI + i}, {i * tws + 8}(a4)")
    a("mv a5, a2", "mv a6, a3", f"li t3, {pl['batches']}")
    a.label(b_lp)
    a("ssr.read 0, 4, a5", "ssr.write 1, 3, a6")
    if frep:
        a(f"frep.i s2, 4, {m1}, {p - 1}", *b1,
          f"frep.i s2, 4, {m2}, {p - 1}", *b2)
    else:
        a(*unrolled(b1, m1, p), *unrolled(b2, m2, p))
    a("add a5, a5, s3", "add a6, a6, s3", "addi t3, t3, -1", f"bnez t3, {b_lp}")
    a("add a2, a2, s4", "add a3, a3, s4", "add a4, a4, s5", "addi t2, t2, -1", f"bnez t2, {set_lp}")
