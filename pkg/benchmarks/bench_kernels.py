"""Compare the compiled hot kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--skip-sim]

Micro-benchmarks call both modules directly; the end-to-end numbers run a
whole simulation once per backend in a subprocess (the backend is chosen at
import, so ``SNITCHSIM_PURE=1`` has to be set before ``snitchsim`` loads).
"""
from __future__ import annotations

import argparse
import os
import random
import subprocess
import sys
import timeit

from snitchsim import _pure

try:
    from snitchsim import _native
except ImportError:
    _native = None

SIM_SNIPPET = """
import time
from snitchsim import BACKEND, kernels
t = time.perf_counter()
r = kernels.run({kernel!r}, {variant!r}, {size}, {cores})
print(BACKEND, r.cycles, time.perf_counter() - t)
"""
SIM_CASES = [("dgemm", "ssr_frep", 32, 8), ("conv2d", "baseline", 32, 1), ("fft", "ssr_frep", 256, 8)]


def micro(repeat: int) -> list[tuple[str, float, float | None]]:
    rng = random.Random(0)
    trip = [(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(2000)]
    banks = [[rng.randrange(-1, 32) for _ in range(16)] for _ in range(2000)]
    cases = {
        "fma x2000": lambda m: [m.fma(a, b, c) for a, b, c in trip],
        "affine_addresses 4D (4096 elems)": lambda m: m.affine_addresses(0x1000, (8, 64, -16, 512), (8, 8, 8, 8)),
        "arbitrate x2000 (16 initiators)": lambda m: [m.arbitrate(b, [0] * 32, 16) for b in banks],
    }
    out = []
    for name, fn in cases.items():
        tp = min(timeit.repeat(lambda: fn(_pure), number=5, repeat=repeat)) / 5
        tn = min(timeit.repeat(lambda: fn(_native), number=5, repeat=repeat)) / 5 if _native else None
        out.append((name, tp, tn))
    return out


def simulation(kernel: str, variant: str, size: int, cores: int, pure: bool) -> tuple[str, int, float]:
    env = {**os.environ, "SNITCHSIM_PURE": "1" if pure else "0"}
    code = SIM_SNIPPET.format(kernel=kernel, variant=variant, size=size, cores=cores)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, cycles, secs = out.stdout.split()
    return backend, int(cycles), float(secs)


def main(argv: list[str] | None = None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--skip-sim", action="store_true", help="only run the micro-benchmarks")
    args = p.parse_args(argv)

    print(f"{'kernel':<36}{'pure [ms]':>12}{'native [ms]':>13}{'speedup':>9}")
    for name, tp, tn in micro(args.repeat):
        if tn is None:
            print(f"{name:<36}{1e3 * tp:>12.3f}{'n/a':>13}")
        else:
            print(f"{name:<36}{1e3 * tp:>12.3f}{1e3 * tn:>13.3f}{tp / tn:>8.1f}x")
    if args.skip_sim:
        return 0
    print()
    print(f"{'simulation':<36}{'pure [s]':>12}{'native [s]':>13}{'speedup':>9}")
    for case in SIM_CASES:
        bp, cp, tp = simulation(*case, pure=True)
        bn, cn, tn = simulation(*case, pure=False)
        if cp != cn:
            print(f"cycle mismatch between backends for {case}: {cp} vs {cn}", file=sys.stderr)
            return 1
        label = f"{case[0]} {case[1]} n={case[2]} c={case[3]}"
        print(f"{label:<36}{tp:>12.2f}{tn:>13.2f}{tp / tn:>8.2f}x   ({bn} vs {bp}, {cn} cycles)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
