"""IEEE-754 double semantics for the FPU model (round-to-nearest-even only).

Registers hold Python floats; bit-level operations go through ``struct``.
Arithmetic NaN results are canonicalised as RISC-V requires.
"""
from __future__ import annotations

import math
import struct

from ._accel import fma as _fma

CANONICAL_NAN_BITS = 0x7FF8000000000000
_PACK = struct.Struct("<d")
_PACKQ = struct.Struct("<Q")


def to_bits(x: float) -> int:
    return _PACKQ.unpack(_PACK.pack(x))[0]


def from_bits(b: int) -> float:
    return _PACK.unpack(_PACKQ.pack(b & 0xFFFFFFFFFFFFFFFF))[0]


CANONICAL_NAN = from_bits(CANONICAL_NAN_BITS)


def _canon(x: float) -> float:
    return CANONICAL_NAN if x != x else x


def fadd(a, b, c=0.0):
    return _canon(a + b)


def fsub(a, b, c=0.0):
    return _canon(a - b)


def fmul(a, b, c=0.0):
    return _canon(a * b)


def fmadd(a, b, c):
    return _canon(_fma(a, b, c))


def fmsub(a, b, c):
    return _canon(_fma(a, b, -c))


def fnmsub(a, b, c):
    return _canon(_fma(-a, b, c))


def fnmadd(a, b, c):
    return _canon(_fma(-a, b, -c))


def _sign(x: float) -> int:
    return to_bits(x) >> 63


def fsgnj(a, b, c=0.0):
    return from_bits((to_bits(a) & ~(1 << 63)) | (_sign(b) << 63))


def fsgnjn(a, b, c=0.0):
    return from_bits((to_bits(a) & ~(1 << 63)) | ((_sign(b) ^ 1) << 63))


def fsgnjx(a, b, c=0.0):
    return from_bits(to_bits(a) ^ (_sign(b) << 63))


def fmin(a, b, c=0.0):
    if a != a and b != b:
        return CANONICAL_NAN
    if a != a:
        return b
    if b != b:
        return a
    if a == b == 0.0:
        return a if _sign(a) else b
    return a if a < b else b


def fmax(a, b, c=0.0):
    if a != a and b != b:
        return CANONICAL_NAN
    if a != a:
        return b
    if b != b:
        return a
    if a == b == 0.0:
        return b if _sign(a) else a
    return a if a > b else b


def feq(a, b):
    return int(a == b)


def flt(a, b):
    return int(a < b)


def fle(a, b):
    return int(a <= b)


def _round_rne(x: float) -> int:
    return int(round(x))  # Python round() is half-to-even


def fcvt_w_d(a) -> int:
    """Signed 32-bit conversion, saturating; result as unsigned 32-bit."""
    if a != a:
        v = 2**31 - 1
    elif math.isinf(a):
        v = 2**31 - 1 if a > 0 else -(2**31)
    else:
        v = max(-(2**31), min(2**31 - 1, _round_rne(a)))
    return v & 0xFFFFFFFF


def fcvt_wu_d(a) -> int:
    if a != a or a == math.inf:
        return 0xFFFFFFFF
    if a == -math.inf:
        return 0
    return max(0, min(2**32 - 1, _round_rne(a)))


def fcvt_d_w(x: int) -> float:
    x &= 0xFFFFFFFF
    return float(x - (1 << 32) if x & 0x80000000 else x)


def fcvt_d_wu(x: int) -> float:
    return float(x & 0xFFFFFFFF)


def fmv_x_d(a) -> int:
    return to_bits(a) & 0xFFFFFFFF


def fmv_d_x(x: int) -> float:
    return from_bits(x & 0xFFFFFFFF)


def fclass(a) -> int:
    b = to_bits(a)
    neg = b >> 63
    exp = (b >> 52) & 0x7FF
    frac = b & 0xFFFFFFFFFFFFF
    if exp == 0x7FF:
        if frac == 0:
            return 1 << 0 if neg else 1 << 7
        return 1 << 8 if not frac & (1 << 51) else 1 << 9
    if exp == 0:
        if frac == 0:
            return 1 << 3 if neg else 1 << 4
        return 1 << 2 if neg else 1 << 5
    return 1 << 1 if neg else 1 << 6


# Three-operand FP->FP ops by mnemonic.
FP_OPS = {
    "fadd.d": fadd,
    "fsub.d": fsub,
    "fmul.d": fmul,
    "fmadd.d": fmadd,
    "fmsub.d": fmsub,
    "fnmsub.d": fnmsub,
    "fnmadd.d": fnmadd,
    "fsgnj.d": fsgnj,
    "fsgnjn.d": fsgnjn,
    "fsgnjx.d": fsgnjx,
    "fmin.d": fmin,
    "fmax.d": fmax,
}

# FP sources -> integer result.
FP_TO_INT = {
    "feq.d": lambda a, b: feq(a, b),
    "flt.d": lambda a, b: flt(a, b),
    "fle.d": lambda a, b: fle(a, b),
    "fclass.d": lambda a, b: fclass(a),
    "fcvt.w.d": lambda a, b: fcvt_w_d(a),
    "fcvt.wu.d": lambda a, b: fcvt_wu_d(a),
    "fmv.x.d": lambda a, b: fmv_x_d(a),
}

# Integer source -> FP result.
INT_TO_FP = {
    "fcvt.d.w": fcvt_d_w,
    "fcvt.d.wu": fcvt_d_wu,
    "fmv.d.x": fmv_d_x,
}
