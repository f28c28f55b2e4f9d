"""Pure-Python implementations of the hot kernels.

Same API as the compiled ``_native`` module; selected by :mod:`snitchsim._accel`
when the extension is missing or ``SNITCHSIM_PURE=1``.
"""
from __future__ import annotations

import math
from fractions import Fraction


def fma(a: float, b: float, c: float) -> float:
    """a*b + c with a single rounding (round-to-nearest-even)."""
    if not (math.isfinite(a) and math.isfinite(b) and math.isfinite(c)):
        return a * b + c
    if a == 0.0 or b == 0.0:
        # product is an exact (signed) zero
        return a * b + c
    exact = Fraction(a) * Fraction(b) + Fraction(c)
    if exact == 0:
        return 0.0
    try:
        return float(exact)
    except OverflowError:
        return math.inf if exact > 0 else -math.inf


def affine_addresses(base: int, strides, bounds) -> list[int]:
    """All addresses of an affine stream, dimension 0 innermost."""
    addrs = [base]
    for stride, bound in zip(strides, bounds):
        addrs = [a + i * stride for i in range(bound) for a in addrs]
    return addrs


def arbitrate(banks: list[int], pointers: list[int], n_init: int) -> list[int]:
    """Round-robin bank arbitration.

    ``banks[i]`` is the bank requested by initiator ``i`` or -1. Returns the
    list of granted initiators; ``pointers`` (one per bank) is updated in place.
    """
    best: dict[int, int] = {}
    best_key: dict[int, int] = {}
    for i, b in enumerate(banks):
        if b < 0:
            continue
        key = (i - pointers[b]) % n_init
        if b not in best or key < best_key[b]:
            best[b] = i
            best_key[b] = key
    for b, i in best.items():
        pointers[b] = (i + 1) % n_init
    return sorted(best.values())
