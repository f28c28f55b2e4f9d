"""FREP: issued sequence and end-to-end equivalence with the unrolled program."""
import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import fp_state, int_state, run_asm
from snitchsim.asm import assemble, format_instruction
from snitchsim.frep import expand
from snitchsim.isa import FrepFields, Instruction, frep_order, stagger

# Register file seeded with distinct small values; staggering rotates operands
# by at most 3, so blocks use f2..f12 and still read initialised registers.
INIT = [0.0, 0.0] + [1.0 + 0.125 * i for i in range(2, 32)]

# Dependent chain: accumulation plus consumers of the accumulator.
CHAIN = [
    Instruction("fmadd.d", rd=2, rs1=3, rs2=4, rs3=2),
    Instruction("fadd.d", rd=5, rs1=2, rs2=6),
    Instruction("fmul.d", rd=7, rs1=5, rs2=3),
    Instruction("fsub.d", rd=8, rs1=7, rs2=2),
]
POOL = ("fmadd.d", "fmsub.d", "fnmadd.d", "fadd.d", "fsub.d", "fmul.d", "fsgnj.d", "fsgnjn.d", "fmin.d",
        "fmax.d")


def _prologue() -> list[str]:
    lines = [".data", "init:"] + [f"    .double {v!r}" for v in INIT] + [".text", "la t1, init"]
    lines += [f"fld f{i}, {8 * i}(t1)" for i in range(2, 32)]
    return lines


def _run(body: list[str]):
    cl, _ = run_asm("\n".join(_prologue() + body + ["ecall"]))
    return fp_state(cl), int_state(cl)


def _frep_program(block, fields, rep):
    op = "frep.o" if fields.is_outer else "frep.i"
    return [f"li t0, {rep}", f"{op} t0, {fields.max_inst}, {fields.stagger_mask}, {fields.stagger_count}"] + \
        [format_instruction(i) for i in block]


def _unrolled_program(block, fields, rep):
    return [f"li t0, {rep}"] + [format_instruction(i) for i in expand(block, fields, rep)]


def check_equivalent(block, fields, rep):
    got = _run(_frep_program(block, fields, rep))
    want = _run(_unrolled_program(block, fields, rep))
    assert got == want, (fields, rep, block)


def test_frep_order_outer_inner():
    assert frep_order(2, 3, True) == [(0, 0), (1, 0), (0, 1), (1, 1), (0, 2), (1, 2)]
    assert frep_order(2, 3, False) == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]


def test_stagger_renames_masked_operands_only():
    f = FrepFields(True, 1, 5, 0b1001, 2)
    i = Instruction("fmadd.d", rd=8, rs1=2, rs2=3, rs3=8)
    assert stagger(i, f, 0) == i
    assert stagger(i, f, 1) == Instruction("fmadd.d", rd=9, rs1=3, rs2=3, rs3=8)
    assert stagger(i, f, 2) == Instruction("fmadd.d", rd=10, rs1=4, rs2=3, rs3=8)
    assert stagger(i, f, 3) == i   # wraps after stagger_count + 1


def test_stagger_skips_operands_absent_from_format():
    f = FrepFields(True, 1, 5, 0b1111, 1)
    i = Instruction("fmul.d", rd=4, rs1=2, rs2=3)
    assert stagger(i, f, 1) == Instruction("fmul.d", rd=5, rs1=3, rs2=4, rs3=0)


def test_expand_length_and_content():
    f = FrepFields(False, 2, 5, 0b1000, 1)
    out = expand(CHAIN[:2], f, 3)
    assert [x.mnemonic for x in out] == ["fmadd.d"] * 3 + ["fadd.d"] * 3
    assert [x.rd for x in out] == [2, 3, 2, 5, 6, 5]


def test_fields_validation():
    with pytest.raises(ValueError):
        FrepFields(True, 16, 5)
    with pytest.raises(ValueError):
        FrepFields(True, 1, 5, 0b10000)
    with pytest.raises(ValueError):
        FrepFields(True, 1, 5, 0, 8)


EXHAUSTIVE = list(itertools.product((True, False), range(1, 5), range(1, 5), range(16), range(4)))


@pytest.mark.parametrize("outer", (True, False), ids=("outer", "inner"))
@pytest.mark.parametrize("n_inst", range(1, 5))
def test_exhaustive_equivalence(outer, n_inst):
    """All masks, stagger counts <= 3 and repetitions <= 4 for blocks of up to 4 instructions."""
    block = CHAIN[:n_inst]
    for rep, mask, count in itertools.product(range(1, 5), range(16), range(4)):
        check_equivalent(block, FrepFields(outer, n_inst, 5, mask, count), rep)


@st.composite
def frep_case(draw):
    n = draw(st.integers(1, 15))
    block = []
    for _ in range(n):
        m = draw(st.sampled_from(POOL))
        regs = [draw(st.integers(2, 24)) for _ in range(4)]
        block.append(Instruction(m, rd=regs[0], rs1=regs[1], rs2=regs[2],
                                 rs3=regs[3] if m.startswith(("fmadd", "fmsub", "fnm")) else 0))
    fields = FrepFields(draw(st.booleans()), n, 5, draw(st.integers(0, 15)), draw(st.integers(0, 7)))
    return block, fields, draw(st.integers(1, 12))


@settings(max_examples=150, deadline=None)
@given(frep_case())
def test_randomized_equivalence(case):
    check_equivalent(*case)
