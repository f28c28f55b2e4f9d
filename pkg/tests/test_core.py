"""Integer core semantics, pipeline timing and the event trace."""
import re

import pytest
from hypothesis import given, settings, strategies as st

from conftest import run_asm
from snitchsim import ClusterConfig
from snitchsim.cluster import Watchdog
from snitchsim.memory import SimulationFault

M = 0xFFFFFFFF


def sx(v):
    return v - (1 << 32) if v & 0x80000000 else v


def tdiv(a, b):
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


# Independent reference semantics (RV32IM, operands as unsigned 32-bit).
REF = {
    "add": lambda a, b: a + b, "sub": lambda a, b: a - b, "xor": lambda a, b: a ^ b,
    "or": lambda a, b: a | b, "and": lambda a, b: a & b,
    "sll": lambda a, b: a << (b % 32), "srl": lambda a, b: a >> (b % 32), "sra": lambda a, b: sx(a) >> (b % 32),
    "slt": lambda a, b: int(sx(a) < sx(b)), "sltu": lambda a, b: int(a < b),
    "mul": lambda a, b: a * b, "mulh": lambda a, b: (sx(a) * sx(b)) >> 32,
    "mulhu": lambda a, b: (a * b) >> 32, "mulhsu": lambda a, b: (sx(a) * b) >> 32,
    "div": lambda a, b: -1 if b == 0 else (a if (sx(a), sx(b)) == (-2**31, -1) else tdiv(sx(a), sx(b))),
    "divu": lambda a, b: M if b == 0 else a // b,
    "rem": lambda a, b: a if b == 0 else (0 if (sx(a), sx(b)) == (-2**31, -1) else
                                          sx(a) - tdiv(sx(a), sx(b)) * sx(b)),
    "remu": lambda a, b: a if b == 0 else a % b,
}
REGS = ["a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7"]
RIDX = {r: 10 + i for i, r in enumerate(REGS)}
interesting = st.sampled_from([0, 1, 2, 31, 0x7FFFFFFF, 0x80000000, 0xFFFFFFFF, 12345, 0xDEADBEEF])
word = st.one_of(interesting, st.integers(0, M))


@settings(max_examples=80, deadline=None)
@given(st.lists(word, min_size=8, max_size=8),
       st.lists(st.tuples(st.sampled_from(sorted(REF)), st.sampled_from(REGS), st.sampled_from(REGS),
                          st.sampled_from(REGS)), min_size=1, max_size=25))
def test_alu_and_muldiv_match_reference(init, ops):
    regs = dict(zip(REGS, init))
    lines = [f"li {r}, {sx(v)}" for r, v in regs.items()]
    for op, rd, r1, r2 in ops:
        lines.append(f"{op} {rd}, {r1}, {r2}")
        regs[rd] = REF[op](regs[r1], regs[r2]) & M
    cl, _ = run_asm("\n".join(lines + ["ecall"]))
    assert [cl.cores[0].x[RIDX[r]] for r in REGS] == [regs[r] for r in REGS]


def test_loads_stores_sign_extension():
    src = """
.data
w: .word 0x80FF7F01
.text
    la a0, w
    lb a1, 0(a0)
    lb a2, 2(a0)
    lbu a3, 2(a0)
    lh a4, 2(a0)
    lhu a5, 2(a0)
    li t0, -2
    sh t0, 0(a0)
    lw a6, 0(a0)
    ecall
"""
    cl, _ = run_asm(src)
    x = cl.cores[0].x
    assert x[11:17] == [0x01, 0xFFFFFFFF, 0xFF, 0xFFFF80FF, 0x80FF, 0x80FFFFFE]


def test_branches_and_calls():
    src = """
    li a0, 0
    li t0, 10
loop:
    call inc
    addi t0, t0, -1
    bgtz t0, loop
    ecall
inc:
    addi a0, a0, 3
    ret
"""
    cl, _ = run_asm(src)
    assert cl.cores[0].x[10] == 30


def test_x0_is_hardwired():
    cl, _ = run_asm("li t0, 5\nadd zero, t0, t0\necall")
    assert cl.cores[0].x[0] == 0


def _fp_cycles(body: str) -> int:
    _, res = run_asm(f"csrwi region, 1\n{body}\nfence\ncsrwi region, 0\necall")
    return res.window.cycles


def test_fma_latency_exposed_by_dependent_chain():
    # sequenced from the FREP buffer so that instruction fetch does not interfere
    n = 64
    dep = _fp_cycles(f"li t0, {n}\nfrep.o t0, 1, 0, 0\nfmadd.d fa0, fa1, fa2, fa0")
    ind = _fp_cycles(f"li t0, {n}\nfrep.o t0, 1, 0b1100, 3\nfmadd.d fa0, fa5, fa6, fa0")
    assert 3 * n - 2 <= dep <= 3 * n + 10
    assert n <= ind <= n + 10


def test_baseline_loop_ipc_close_to_one():
    src = "li t0, 200\nloop:\naddi t1, t1, 1\naddi t2, t2, 1\naddi t0, t0, -1\nbnez t0, loop"
    _, res = run_asm(f"csrwi region, 1\n{src}\ncsrwi region, 0\necall")
    c = res.window.counters[0]
    assert c.int_retired / res.window.cycles > 0.97


def test_watchdog_reports_stall_histogram():
    with pytest.raises(Watchdog) as ei:
        run_asm("wfi\necall", max_cycles=500)
    assert ei.value.histogram[0].get("wfi", 0) > 0


def test_unmapped_access_faults():
    with pytest.raises(SimulationFault, match="unmapped"):
        run_asm("li a0, 0x100\nlw a1, 0(a0)\necall")


def test_mhartid_and_core_count():
    cl, _ = run_asm("csrr a2, mhartid\necall", cores=8)
    assert [c.x[12] for c in cl.cores] == list(range(8))
    assert [c.x[11] for c in cl.cores] == [8] * 8


def test_core_count_validation():
    with pytest.raises(ValueError):
        ClusterConfig.with_cores(6)
    with pytest.raises(ValueError):
        ClusterConfig(branch_penalty=-1)


TRACE_LINE = re.compile(r"^\d+ \d+ (core|fpss|tcdm|muldiv) [a-z_]+ \S.*$")


def test_trace_format_and_filters():
    src = ".data\nv: .double 2.0\n.text\nla a0, v\nfld fa0, 0(a0)\nfmul.d fa1, fa0, fa0\nmul t0, a0, a0\n" \
          "fsd fa1, 0(a0)\nfence\necall"
    cl, res = run_asm(src, cores=2, trace=True)
    assert res.trace and all(TRACE_LINE.match(ln) for ln in res.trace)
    assert {ln.split()[2] for ln in res.trace} == {"core", "fpss", "tcdm", "muldiv"}
    cycles = [int(ln.split()[0]) for ln in res.trace]
    assert cycles == sorted(cycles)
    _, res1 = run_asm(src, cores=2, trace=True, trace_cores={1}, trace_units={"fpss"})
    assert res1.trace and all(ln.split()[1] == "1" and ln.split()[2] == "fpss" for ln in res1.trace)
    _, off = run_asm(src, cores=2)
    assert off.trace is None
