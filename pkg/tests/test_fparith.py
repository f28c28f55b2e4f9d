"""Double-precision semantics and the native/pure FMA kernels."""
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from snitchsim import _native, _pure, fparith as fp

finite = st.floats(allow_nan=False, allow_infinity=False)
anyf = st.floats(allow_nan=True, allow_infinity=True)


def fma_oracle(a, b, c):
    exact = Fraction(a) * Fraction(b) + Fraction(c)
    if exact == 0:
        return a * b + c          # sign of zero follows IEEE rules
    return float(exact)


@settings(max_examples=2000)
@given(finite, finite, finite)
def test_fma_single_rounding(a, b, c):
    try:
        want = fma_oracle(a, b, c)
    except OverflowError:
        assume(False)
    assert fp.to_bits(_pure.fma(a, b, c)) == fp.to_bits(want)
    assert fp.to_bits(_native.fma(a, b, c)) == fp.to_bits(want)


@settings(max_examples=1000)
@given(anyf, anyf, anyf)
def test_native_pure_fma_agree(a, b, c):
    x, y = _pure.fma(a, b, c), _native.fma(a, b, c)
    assert (math.isnan(x) and math.isnan(y)) or fp.to_bits(x) == fp.to_bits(y)


def test_fma_differs_from_two_roundings():
    a = 1.0 + 2.0 ** -30
    c = -(1.0 + 2.0 ** -29)
    assert fp.fmadd(a, a, c) == 2.0 ** -60
    assert a * a + c == 0.0


@given(finite, finite)
def test_add_mul_match_numpy(a, b):
    with np.errstate(all="ignore"):
        assert fp.to_bits(fp.fadd(a, b)) == fp.to_bits(fp._canon(float(np.float64(a) + np.float64(b))))
        assert fp.to_bits(fp.fmul(a, b)) == fp.to_bits(fp._canon(float(np.float64(a) * np.float64(b))))


def test_nan_results_are_canonical():
    assert fp.to_bits(fp.fadd(math.inf, -math.inf)) == fp.CANONICAL_NAN_BITS
    assert fp.to_bits(fp.fmul(0.0, math.inf)) == fp.CANONICAL_NAN_BITS
    assert fp.to_bits(fp.fmadd(fp.from_bits(0xFFF0000000000001), 1.0, 1.0)) == fp.CANONICAL_NAN_BITS


def test_min_max_nan_and_signed_zero():
    nan = fp.CANONICAL_NAN
    assert fp.fmin(nan, 2.0) == 2.0 and fp.fmax(3.0, nan) == 3.0
    assert fp.to_bits(fp.fmin(nan, nan)) == fp.CANONICAL_NAN_BITS
    assert fp.to_bits(fp.fmin(0.0, -0.0)) == fp.to_bits(-0.0)
    assert fp.to_bits(fp.fmax(-0.0, 0.0)) == fp.to_bits(0.0)


def test_sign_injection():
    assert fp.fsgnj(3.0, -1.0) == -3.0
    assert fp.fsgnjn(3.0, -1.0) == 3.0
    assert fp.fsgnjx(-3.0, -1.0) == 3.0


@pytest.mark.parametrize("x,w,wu", [
    (2.5, 2, 2), (3.5, 4, 4), (-2.5, (-2) & 0xFFFFFFFF, 0), (1e20, 2**31 - 1, 2**32 - 1),
    (-1e20, 2**31, 0), (math.inf, 2**31 - 1, 2**32 - 1), (-math.inf, 2**31, 0),
    (math.nan, 2**31 - 1, 2**32 - 1),
])
def test_conversions_saturate_and_round_to_even(x, w, wu):
    assert fp.fcvt_w_d(x) == w
    assert fp.fcvt_wu_d(x) == wu


def test_int_to_fp_and_moves():
    assert fp.fcvt_d_w(0xFFFFFFFF) == -1.0
    assert fp.fcvt_d_wu(0xFFFFFFFF) == 4294967295.0
    assert fp.fmv_x_d(fp.from_bits(0x1234_5678_9ABC_DEF0)) == 0x9ABCDEF0
    assert fp.to_bits(fp.fmv_d_x(0x9ABCDEF0)) == 0x9ABCDEF0


@pytest.mark.parametrize("x,bit", [
    (-math.inf, 0), (-1.0, 1), (-5e-324, 2), (-0.0, 3), (0.0, 4), (5e-324, 5), (1.0, 6), (math.inf, 7),
    (fp.from_bits(0x7FF0000000000001), 8), (fp.CANONICAL_NAN, 9),
])
def test_fclass(x, bit):
    assert fp.fclass(x) == 1 << bit


def test_compares():
    assert (fp.feq(1.0, 1.0), fp.flt(1.0, 2.0), fp.fle(2.0, 2.0)) == (1, 1, 1)
    assert (fp.feq(math.nan, math.nan), fp.flt(math.nan, 1.0), fp.fle(1.0, math.nan)) == (0, 0, 0)


@given(st.integers(0, 2**64 - 1))
def test_bits_roundtrip(b):
    x = fp.from_bits(b)
    if not math.isnan(x):
        assert fp.to_bits(x) == b
