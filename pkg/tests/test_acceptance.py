"""Acceptance criteria, one printed PASS/FAIL line each.

``pytest tests/test_acceptance.py`` lists the lines in the terminal summary;
``python tests/test_acceptance.py`` runs the same checks. Tolerances are fixed here and must not be loosened.
"""
import functools
import os
import subprocess
import sys
import time
from pathlib import Path

import pytest

from snitchsim import kernels
from snitchsim.suites import Cell

ROOT = Path(__file__).resolve().parent.parent
FREP_KERNELS = [k for k, info in kernels.KERNELS.items() if "ssr_frep" in info.variants]
PROPERTY_SUITES = {
    "a": ["tests/test_ssr.py::test_addresses_match_oracle"],
    "b": ["tests/test_frep.py::test_exhaustive_equivalence", "tests/test_frep.py::test_randomized_equivalence"],
    "c": ["tests/test_memory.py::test_amo_linearizable_8_cores", "tests/test_memory.py::test_amoadd_returns_form_a_chain",
          "tests/test_memory.py::test_lr_sc_counter_8_cores"],
    "d": ["tests/test_cli.py::test_two_runs_identical_bytes"],
    "e": ["tests/test_kernels.py::test_golden_validation", "tests/test_kernels.py::test_relu_small_vector",
          "tests/test_kernels.py::test_dgemm_identity_bit_exact", "tests/test_kernels.py::test_fft_impulse_flat_spectrum"],
    "f": ["tests/test_kernels.py::test_host_xoshiro_matches_c_reference",
          "tests/test_kernels.py::test_simulated_xoshiro_stream"],
}


@functools.lru_cache(maxsize=None)
def run(kernel, variant, size, cores=1, unroll=None):
    kw = {} if unroll is None else {"unroll": unroll}
    cfg = Cell(kernel, variant, size, cores, 16384 if kernel == "dgemm" and size >= 128 else None).cluster()
    r = kernels.run(kernel, variant, size, cores, cfg=cfg, **kw)
    assert r.valid, f"{kernel}/{variant} n={size} cores={cores} failed validation: {r.message}"
    return r.metrics


LINES: list[str] = []     # printed in the terminal summary by conftest.py


def report(n, ok, detail):
    line = f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES.append(line)
    print(line)
    assert ok, line


def within(x, centre, tol):
    return abs(x - centre) <= tol + 1e-12


def test_1_baseline_ipc():
    ipc = {k: run(k, "baseline", n).ipc for k, n in (("dot", 4096), ("relu", 1024), ("conv2d", 32))}
    report(1, all(within(v, 1.00, 0.03) for v in ipc.values()),
           "baseline IPC " + ", ".join(f"{k}={v:.3f}" for k, v in ipc.items()) + " (1.00 +- 0.03)")


def test_2_dot_utilization():
    u = {v: run("dot", v, 4096).fpu_util for v in kernels.VARIANTS}
    ok = within(u["baseline"], 0.25, 0.05) and within(u["ssr"], 0.66, 0.08) and u["ssr_frep"] >= 0.90
    report(2, ok, f"dot 4096 FPU util baseline={u['baseline']:.3f} (0.25+-0.05) ssr={u['ssr']:.3f} (0.66+-0.08) "
                  f"ssr_frep={u['ssr_frep']:.3f} (>=0.90)")


def test_3_dot_speedups():
    # the six-instruction baseline loop (one element per iteration)
    c = {v: run("dot", v, 4096, unroll=1).cycles for v in kernels.VARIANTS}
    s_ssr, s_frep = c["baseline"] / c["ssr"], c["baseline"] / c["ssr_frep"]
    report(3, within(s_ssr, 2.0, 0.3) and within(s_frep, 6.0, 1.0),
           f"dot 4096 speedup ssr={s_ssr:.2f}x (2.0+-0.3) ssr_frep={s_frep:.2f}x (6.0+-1.0)")


def test_4_pseudo_dual_issue():
    ipc = {k: run(k, "ssr_frep", n).ipc for k, n in (("dgemm", 32), ("conv2d", 32), ("knn_dist", 256),
                                                     ("montecarlo_pi", 4096))}
    report(4, all(v > 1.00 for v in ipc.values()),
           "ssr_frep IPC " + ", ".join(f"{k}={v:.3f}" for k, v in ipc.items()) + " (> 1.00)")


def test_5_dgemm_scaling():
    one, eight = run("dgemm", "ssr_frep", 32, 1), run("dgemm", "ssr_frep", 32, 8)
    s = one.cycles / eight.cycles
    report(5, s >= 7.0 and eight.fpu_util >= 0.80,
           f"dgemm 32 8-core speedup={s:.2f} (>=7.0) FPU util={eight.fpu_util:.3f} (>=0.80)")


def test_6_utilization_vs_size():
    ref = {16: 63.2, 32: 84.8, 64: 91.7, 128: 94.7}
    u = {n: 100 * run("dgemm", "ssr_frep", n, 8).fpu_util for n in ref}
    seq = [u[n] for n in sorted(u)]
    mono = all(a < b for a, b in zip(seq, seq[1:]))
    close = all(abs(u[n] - ref[n]) <= 8.0 for n in ref)
    report(6, mono and close, "dgemm 8-core util% " + ", ".join(f"n={n}: {u[n]:.1f} (ref {ref[n]})" for n in ref)
           + f", monotonic={mono}")


def test_7_multicore_speedups():
    s = {}
    for k in FREP_KERNELS:
        n = kernels.KERNELS[k].default_size
        s[k] = run(k, "baseline", n, 8).cycles / run(k, "ssr_frep", n, 8).cycles
    in_range = all(1.2 <= v <= 7.0 for v in s.values())
    fft_ok = within(s["fft"], 2.8, 0.3 * 2.8)
    report(7, in_range and fft_ok, "8-core ssr_frep/baseline " + ", ".join(f"{k}={v:.2f}" for k, v in s.items())
           + " (all in [1.2, 7.0]; fft 2.8 +- 30%)")


def test_8_property_suites():
    t0 = time.time()
    results = {}
    for key, ids in PROPERTY_SUITES.items():
        p = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *ids], cwd=ROOT,
                           capture_output=True, text=True, env={**os.environ, "PYTHONHASHSEED": "0"})
        tail = p.stdout.strip().splitlines()[-1] if p.stdout.strip() else p.stderr.strip()[-200:]
        results[key] = (p.returncode == 0, tail)
    elapsed = time.time() - t0
    ok = all(r[0] for r in results.values()) and elapsed < 600
    report(8, ok, "; ".join(f"({k}) {'ok' if r[0] else 'FAILED: ' + r[1]}" for k, r in results.items())
           + f"; {elapsed:.0f}s (< 600s)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
