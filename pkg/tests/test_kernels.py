"""Kernel generators: golden validation, oracles and stream/baseline equivalence."""
import re
import shutil
import subprocess

import numpy as np
import pytest

from snitchsim import kernels
from snitchsim.kernels import conv2d, fft, knn_dist, montecarlo_pi as mc
from snitchsim.kernels.runtime import CapacityError, read_doubles

# Small sizes keep the full matrix fast; the acceptance suite runs the defaults.
SMALL = {"dot": 256, "relu": 64, "dgemm": 8, "fft": 32, "axpy": 64, "knn_dist": 32, "montecarlo_pi": 128,
         "conv2d": 14}
CASES = [(k, v, c) for k, info in kernels.KERNELS.items() for v in info.variants for c in (1, 4, 8)]


@pytest.mark.parametrize("name,variant,cores", CASES, ids=[f"{k}-{v}-c{c}" for k, v, c in CASES])
def test_golden_validation(name, variant, cores):
    r = kernels.run(name, variant, SMALL[name], cores)
    assert r.valid, r.message
    assert r.cycles > 0


@pytest.mark.parametrize("variant", kernels.VARIANTS)
def test_relu_small_vector(variant):
    r = kernels.run("relu", variant, 3, x=[-1.0, 2.0, -3.0])
    assert r.valid
    assert list(read_doubles(r.cluster, r.build.layout.symbols["y"], 3)) == [0.0, 2.0, 0.0]


@pytest.mark.parametrize("variant", kernels.VARIANTS)
def test_dgemm_identity_bit_exact(variant):
    b = kernels.build("dgemm", variant, 8, identity=True)
    r = kernels.run("dgemm", variant, 8, identity=True)
    assert r.valid
    n, ld = 8, 9
    C = read_doubles(r.cluster, b.layout.symbols["C"], n * ld).reshape(n, ld)[:, :n]
    B = read_doubles(r.cluster, b.layout.symbols["B"], n * ld).reshape(n, ld)[:, :n]
    assert np.array_equal(C, B)


def dft(x):
    n = len(x)
    return np.array([sum(x[t] * np.exp(-2j * np.pi * k * t / n) for t in range(n)) for k in range(n)])


@pytest.mark.parametrize("variant", kernels.VARIANTS)
def test_fft_impulse_flat_spectrum(variant):
    sig = np.zeros(8, dtype=complex)
    sig[0] = 1.0
    b = fft.build(8, variant, signal=sig)
    r = kernels.run("fft", variant, 8, signal=sig)
    assert r.valid
    got = read_doubles(r.cluster, b.info["out"], 16)
    want = dft(sig)
    assert np.allclose(got[0::2] + 1j * got[1::2], want, rtol=0, atol=1e-12)
    assert np.allclose(want, np.ones(8))


@pytest.mark.parametrize("variant", kernels.VARIANTS)
def test_fft_random_matches_direct_dft(variant):
    rng = np.random.default_rng(3)
    sig = rng.uniform(-1, 1, 16) + 1j * rng.uniform(-1, 1, 16)
    b = fft.build(16, variant, signal=sig)
    r = kernels.run("fft", variant, 16, signal=sig)
    got = read_doubles(r.cluster, b.info["out"], 32)
    assert np.allclose(got[0::2] + 1j * got[1::2], dft(sig), rtol=0, atol=1e-12)


def test_results_independent_of_core_count():
    outs = []
    for cores in (1, 2, 4, 8):
        r = kernels.run("knn_dist", "ssr_frep", 64, cores)
        outs.append(read_doubles(r.cluster, r.build.layout.symbols["dist"], 64).tobytes())
    assert len(set(outs)) == 1


def test_conv_reference_matches_numpy():
    rng = np.random.default_rng(0)
    img, w = rng.uniform(-1, 1, (10, 10)), rng.uniform(-1, 1, (3, 3))
    want = np.array([[np.sum(img[r:r + 3, c:c + 3] * w) for c in range(8)] for r in range(8)])
    assert np.allclose(conv2d.reference(img, w), want, rtol=1e-12)


def test_knn_reference_matches_numpy():
    rng = np.random.default_rng(0)
    p, q = rng.uniform(-1, 1, (20, 4)), rng.uniform(-1, 1, 4)
    assert np.allclose(knn_dist.reference(p, q), ((p - q) ** 2).sum(axis=1), rtol=1e-12)


# xoshiro128+ -------------------------------------------------------------------------

C_REFERENCE = r"""
#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>
static uint32_t s[4];
static inline uint32_t rotl(const uint32_t x, int k) { return (x << k) | (x >> (32 - k)); }
static uint32_t next(void) {
    const uint32_t result = s[0] + s[3];
    const uint32_t t = s[1] << 9;
    s[2] ^= s[0]; s[3] ^= s[1]; s[1] ^= s[2]; s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 11);
    return result;
}
int main(int argc, char **argv) {
    for (int i = 0; i < 4; i++) s[i] = (uint32_t)strtoul(argv[i + 1], 0, 0);
    int n = atoi(argv[5]);
    for (int i = 0; i < n; i++) printf("%u\n", next());
    return 0;
}
"""


@pytest.fixture(scope="module")
def c_xoshiro(tmp_path_factory):
    cc = shutil.which("cc") or shutil.which("gcc") or shutil.which("clang")
    if cc is None:
        pytest.skip("no C compiler")
    d = tmp_path_factory.mktemp("xoshiro")
    (d / "x.c").write_text(C_REFERENCE)
    subprocess.run([cc, "-O2", "-o", str(d / "x"), str(d / "x.c")], check=True)

    def draws(state, n):
        out = subprocess.run([str(d / "x"), *map(str, state), str(n)], check=True, capture_output=True, text=True)
        return [int(v) for v in out.stdout.split()]

    return draws


STATES = [(1, 2, 3, 4), (0xDEADBEEF, 0, 0, 0), (0xFFFFFFFF,) * 4, (0x9E3779B9, 0x7F4A7C15, 0x85EBCA6B, 0xC2B2AE35)]


@pytest.mark.parametrize("state", STATES)
def test_host_xoshiro_matches_c_reference(state, c_xoshiro):
    assert mc.xoshiro_stream(state, 1000) == c_xoshiro(state, 1000)


@pytest.mark.parametrize("state", STATES[:2])
def test_simulated_xoshiro_stream(state):
    from snitchsim import simulate
    b = mc.build_stream(1000, state)
    cl, _ = simulate(b.program)
    ok, msg = b.check(cl)
    assert ok, msg


def test_xoshiro_rejects_zero_state_and_seeds_differ():
    with pytest.raises(ValueError):
        mc.xoshiro128plus((0, 0, 0, 0))
    a, b = mc.seed_states(1, 1)[0], mc.seed_states(2, 1)[0]
    assert mc.xoshiro128plus(a)[0] != mc.xoshiro128plus(b)[0]
    assert mc.xoshiro_stream(a, 20) == mc.xoshiro_stream(a, 20)


def test_montecarlo_estimate_is_sane():
    r = kernels.run("montecarlo_pi", "ssr_frep", 2048, 8)
    assert r.valid
    hits = sum(r.cluster.read_word(r.build.layout.symbols["hits"] + 4 * c) for c in range(8))
    assert abs(4 * hits / 2048 - np.pi) < 0.15


# stream variants touch the same data -------------------------------------------------

_ACCESS = re.compile(r"^\d+ \d+ tcdm (read|write) bank=\d+ addr=(0x[0-9a-f]+) size=(\d+)")


def _data_accesses(name, variant, n, ranges_of):
    r = kernels.run(name, variant, n, 1, trace=True, trace_units={"tcdm"})
    ranges = ranges_of(r.build.layout.symbols)
    out = []
    for line in r.result.trace:
        m = _ACCESS.match(line)
        if m:
            a = int(m.group(2), 16)
            if any(lo <= a < hi for lo, hi in ranges):
                out.append((m.group(1), a, int(m.group(3))))
    return sorted(out)


def _vec_ranges(n, *names):
    return lambda s: [(s[k], s[k] + 8 * n) for k in names]


MULTISET = [
    ("dot", 64, _vec_ranges(64, "x", "y"), ("ssr", "ssr_frep")),
    ("relu", 64, _vec_ranges(64, "x", "y"), ("ssr", "ssr_frep")),
    ("axpy", 64, _vec_ranges(64, "x", "y"), ("ssr",)),
    ("conv2d", 14, lambda s: [(s["img"], s["weights"]), (s["weights"], s["weights"] + 8 * 49),
                              (s["out"], s["out"] + 8 * 64)], ("ssr",)),
]


@pytest.mark.parametrize("name,n,ranges,variants", MULTISET, ids=[m[0] for m in MULTISET])
def test_stream_variants_touch_same_addresses(name, n, ranges, variants):
    base = _data_accesses(name, "baseline", n, ranges)
    assert base
    for v in variants:
        assert _data_accesses(name, v, n, ranges) == base, v


# generated code shape ----------------------------------------------------------------

def _loop_body(source, label="loop"):
    lines = source.splitlines()
    start = lines.index(f"{label}:") + 1
    body = []
    for ln in lines[start:]:
        body.append(ln.strip())
        if ln.strip().startswith(("bnez", "bne ")) and label in ln:
            break
    return body


def test_dot_inner_loops():
    base = _loop_body(kernels.build("dot", "baseline", 64, unroll=1).source)
    assert len(base) == 6 and sum(i.startswith("fld") for i in base) == 2
    ssr = _loop_body(kernels.build("dot", "ssr", 64, unroll=1).source)
    assert [i.split()[0] for i in ssr] == ["fmadd.d", "addi", "bnez"]
    src = kernels.build("dot", "ssr_frep", 64).source.splitlines()
    i = next(k for k, ln in enumerate(src) if ln.strip().startswith("frep"))
    assert src[i].split()[2] == "1," and src[i + 1].strip().startswith("fmadd.d")


def test_axpy_has_no_frep_variant():
    with pytest.raises(ValueError, match="no 'ssr_frep'"):
        kernels.build("axpy", "ssr_frep")


def test_capacity_checked_before_simulation():
    with pytest.raises(CapacityError):
        kernels.build("dgemm", "baseline", 128)
    with pytest.raises(CapacityError):
        kernels.build("dot", "baseline", 1 << 16)


def test_unknown_kernel_lists_names():
    with pytest.raises(kernels.UnknownKernel) as ei:
        kernels.info("gemv")
    assert "dgemm" in str(ei.value) and "conv2d" in str(ei.value)
