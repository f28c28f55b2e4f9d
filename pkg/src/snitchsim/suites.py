"""Named run suites and side-by-side rendering against reference values.

``table1``: utilization and IPC of every kernel variant on 1 and 8 cores.
``table2``: DGEMM 32x32 SSR+FREP scaling over 1, 2, 4 and 8 cores.
``table3``: DGEMM SSR+FREP utilization versus problem size on 4, 8 and 16 cores.
``smoke``: one small configuration per kernel.

The reference numbers are the published measurements the simulator is
compared against; they are data, not model inputs.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .cluster import ClusterConfig
from .memory import TcdmConfig


@dataclass(frozen=True)
class Cell:
    kernel: str
    variant: str
    size: int
    cores: int
    bank_size: int | None = None        # TCDM bank size override for large problems

    def cluster(self) -> ClusterConfig:
        if self.bank_size:
            return ClusterConfig.with_cores(self.cores, tcdm=TcdmConfig(bank_size=self.bank_size))
        return ClusterConfig.with_cores(self.cores)

    @property
    def key(self) -> tuple:
        return (self.kernel, self.variant, self.size, self.cores)


# (kernel, size) rows of the utilization table, with variants
T1_ROWS = [("dot", 256), ("dot", 4096), ("relu", 1024), ("dgemm", 16), ("dgemm", 32), ("fft", 256),
           ("axpy", 1024), ("conv2d", 32), ("knn_dist", 256), ("montecarlo_pi", 4096)]
V3 = ("baseline", "ssr", "ssr_frep")

# (kernel, size, variant) -> (single-core FPU, FPSS, Snitch, IPC), (8-core FPU, FPSS, Snitch, IPC)
REF_T1 = {
    ("dot", 256, "baseline"): ((0.17, 0.50, 0.50, 1.00), (0.20, 0.58, 0.22, 0.80)),
    ("dot", 256, "ssr"): ((0.61, 0.63, 0.35, 0.98), (0.35, 0.38, 0.32, 0.69)),
    ("dot", 256, "ssr_frep"): ((0.87, 0.89, 0.06, 0.96), (0.35, 0.41, 0.18, 0.59)),
    ("dot", 4096, "baseline"): ((0.25, 0.75, 0.25, 1.00), (0.24, 0.70, 0.24, 0.94)),
    ("dot", 4096, "ssr"): ((0.66, 0.66, 0.34, 1.00), (0.57, 0.58, 0.32, 0.90)),
    ("dot", 4096, "ssr_frep"): ((0.98, 0.99, 0.01, 0.99), (0.72, 0.74, 0.05, 0.79)),
    ("relu", 1024, "baseline"): ((0.14, 0.42, 0.57, 1.00), (0.13, 0.37, 0.53, 0.90)),
    ("relu", 1024, "ssr"): ((0.32, 0.32, 0.67, 0.99), (0.23, 0.23, 0.56, 0.79)),
    ("relu", 1024, "ssr_frep"): ((0.88, 0.89, 0.07, 0.96), (0.36, 0.36, 0.23, 0.62)),
    ("dgemm", 16, "baseline"): ((0.19, 0.58, 0.17, 0.75), (0.17, 0.51, 0.15, 0.66)),
    ("dgemm", 16, "ssr"): ((0.23, 0.26, 0.53, 0.80), (0.20, 0.23, 0.49, 0.72)),
    ("dgemm", 16, "ssr_frep"): ((0.86, 0.97, 0.07, 1.04), (0.63, 0.71, 0.13, 0.84)),
    ("dgemm", 32, "baseline"): ((0.24, 0.26, 0.52, 0.77), (0.24, 0.26, 0.51, 0.77)),
    ("dgemm", 32, "ssr"): ((0.24, 0.26, 0.52, 0.77), (0.24, 0.26, 0.51, 0.77)),
    ("dgemm", 32, "ssr_frep"): ((0.93, 0.99, 0.03, 1.02), (0.85, 0.90, 0.04, 0.94)),
    ("fft", 256, "baseline"): ((0.36, 0.49, 0.23, 0.72), (0.26, 0.35, 0.23, 0.58)),
    ("fft", 256, "ssr"): ((0.54, 0.58, 0.32, 0.90), (0.21, 0.23, 0.41, 0.65)),
    ("fft", 256, "ssr_frep"): ((0.57, 0.62, 0.19, 0.81), (0.24, 0.27, 0.42, 0.69)),
    ("axpy", 1024, "baseline"): ((0.19, 0.77, 0.20, 0.97), (0.14, 0.63, 0.19, 0.82)),
    ("axpy", 1024, "ssr"): ((0.34, 0.67, 0.27, 0.95), (0.23, 0.47, 0.30, 0.77)),
    ("conv2d", 32, "baseline"): ((0.14, 0.43, 0.57, 1.00), (0.14, 0.42, 0.58, 1.00)),
    ("conv2d", 32, "ssr"): ((0.60, 0.60, 0.39, 0.99), (0.60, 0.61, 0.39, 0.99)),
    ("conv2d", 32, "ssr_frep"): ((0.97, 0.99, 0.04, 1.03), (0.91, 0.93, 0.04, 0.97)),
    ("knn_dist", 256, "baseline"): ((0.15, 0.31, 0.40, 0.70), (0.14, 0.31, 0.40, 0.70)),
    ("knn_dist", 256, "ssr"): ((0.30, 0.30, 0.64, 0.95), (0.30, 0.31, 0.66, 0.97)),
    ("knn_dist", 256, "ssr_frep"): ((0.35, 0.36, 0.76, 1.13), (0.35, 0.37, 0.79, 1.16)),
    ("montecarlo_pi", 4096, "baseline"): ((0.14, 0.18, 0.59, 0.77), (0.13, 0.16, 0.54, 0.70)),
    ("montecarlo_pi", 4096, "ssr"): ((0.15, 0.21, 0.61, 0.82), (0.14, 0.20, 0.57, 0.77)),
    ("montecarlo_pi", 4096, "ssr_frep"): ((0.22, 0.22, 0.90, 1.12), (0.20, 0.20, 0.82, 1.02)),
}
# cores -> (FPU utilization, speedup over half the cores, speedup over one core)
REF_T2 = {1: (0.89, 1.00, 1.00), 2: (0.90, 1.98, 1.98), 4: (0.87, 1.97, 3.91), 8: (0.87, 2.00, 7.80)}
# cores (= FPUs) -> {n: utilization in percent}
REF_T3 = {4: {16: 68.2, 32: 87.1, 64: 93.4, 128: 96.0},
          8: {16: 63.2, 32: 84.8, 64: 91.7, 128: 94.7},
          16: {16: 58.3, 32: 81.4, 64: 89.0, 128: 94.1}}

TOL_UTIL = 0.10         # absolute, table 1 and table 2 utilizations
TOL_SPEEDUP = 0.15      # relative, table 2 speedups
TOL_PP = 8.0            # percentage points, table 3

BIG_BANK = 16384        # bank size that fits three 128x129 double matrices


def _t3_cell(n: int, cores: int) -> Cell:
    return Cell("dgemm", "ssr_frep", n, cores, BIG_BANK if n >= 128 else None)


SUITES: dict[str, list[Cell]] = {
    "table1": [Cell(k, v, n, c) for k, n in T1_ROWS for v in V3 if (k, n, v) in REF_T1 for c in (1, 8)],
    "table2": [Cell("dgemm", "ssr_frep", 32, c) for c in REF_T2],
    "table3": [_t3_cell(n, c) for c in REF_T3 for n in REF_T3[c]],
    "smoke": [Cell("dot", "ssr_frep", 256, 1), Cell("relu", "ssr_frep", 256, 2), Cell("dgemm", "ssr_frep", 16, 4),
              Cell("fft", "ssr_frep", 64, 2), Cell("axpy", "ssr", 256, 2), Cell("knn_dist", "ssr_frep", 64, 2),
              Cell("montecarlo_pi", "ssr_frep", 256, 2), Cell("conv2d", "ssr_frep", 12, 2)],
}


def suite(name: str) -> list[Cell]:
    """Cells of a suite; ``<prefix>-tableN`` names the same suite as ``tableN``."""
    m = re.fullmatch(r"(?:[\w.]+-)?(table\d)", name)
    key = m.group(1) if m else name
    if key not in SUITES:
        raise KeyError(f"unknown suite {name!r}; valid suites: {', '.join(SUITES)}")
    return SUITES[key]


# ---- rendering -------------------------------------------------------------------------

class ReportError(ValueError):
    pass


def _index(rows: list[dict]) -> dict[tuple, dict]:
    idx = {}
    for r in rows:
        try:
            key = (r["kernel"], r["variant"], int(r["size"]), int(r["cores"]))
        except (KeyError, ValueError) as e:
            raise ReportError(f"malformed CSV row {r}: {e}") from None
        idx[key] = r
    return idx


def _f(x) -> float:
    return float(x)


def _delta(ref: float, sim: float, tol: float, rel: bool = False) -> str:
    d = sim - ref
    bad = abs(d) > (tol * abs(ref) if rel else tol)
    return f"{d:+.2f}{' !' if bad else '  '}"


def render(rows: list[dict]) -> tuple[str, list[str], int]:
    """Render every table with at least one available cell.

    Returns (text, warnings about missing cells, number of flagged cells).
    """
    if not rows:
        raise ReportError("empty CSV: no result rows")
    idx = _index(rows)
    out: list[str] = []
    warnings: list[str] = []
    flagged = 0

    # table 1
    t1 = []
    for k, n in T1_ROWS:
        for v in V3:
            if (k, n, v) not in REF_T1:
                continue
            ref = REF_T1[(k, n, v)]
            for j, cores in enumerate((1, 8)):
                r = idx.get((k, v, n, cores))
                if r is None:
                    warnings.append(f"table1: missing {k} n={n} {v} on {cores} core(s)")
                    continue
                sim = (_f(r["fpu_util"]), _f(r["fpss_util"]), _f(r["snitch_util"]), _f(r["ipc"]))
                cells = []
                for a, b in zip(ref[j], sim):
                    d = _delta(a, b, TOL_UTIL)
                    flagged += d.endswith("!")
                    cells.append(f"{a:5.2f} {b:5.2f} {d}")
                t1.append(f"{k + ' ' + str(n):<19}{v:<10}{cores:>3}  " + " | ".join(cells))
    if t1:
        out.append("Utilization (ref sim delta): FPU | FPSS | Snitch | IPC")
        out.append(f"{'kernel':<19}{'variant':<10}{'cores':>3}")
        out += t1
        out.append("")

    # table 2
    t2 = []
    cyc = {c: _f(idx[("dgemm", "ssr_frep", 32, c)]["cycles"]) for c in REF_T2 if ("dgemm", "ssr_frep", 32, c) in idx}
    for c, (eta, small, big) in REF_T2.items():
        if c not in cyc:
            warnings.append(f"table2: missing dgemm n=32 ssr_frep on {c} core(s)")
            continue
        r = idx[("dgemm", "ssr_frep", 32, c)]
        s_eta = _f(r["fpu_util"])
        s_small = cyc[c // 2] / cyc[c] if c > 1 and c // 2 in cyc else (1.0 if c == 1 else float("nan"))
        s_big = cyc[1] / cyc[c] if 1 in cyc else float("nan")
        cells = []
        for a, b, tol, rel in ((eta, s_eta, TOL_UTIL, False), (small, s_small, TOL_SPEEDUP, True),
                               (big, s_big, TOL_SPEEDUP, True)):
            d = _delta(a, b, tol, rel) if b == b else "  n/a "
            flagged += d.endswith("!")
            cells.append(f"{a:5.2f} {b:5.2f} {d}")
        t2.append(f"{c:>5}  " + " | ".join(cells))
    if t2:
        out.append("DGEMM 32x32 scaling (ref sim delta): utilization | vs half cores | vs one core")
        out += t2
        out.append("")

    # table 3
    t3 = []
    for c, col in REF_T3.items():
        for n, ref in col.items():
            r = idx.get(("dgemm", "ssr_frep", n, c))
            if r is None:
                warnings.append(f"table3: missing dgemm n={n} ssr_frep on {c} cores")
                continue
            sim = 100 * _f(r["fpu_util"])
            d = _delta(ref, sim, TOL_PP)
            flagged += d.endswith("!")
            t3.append(f"{c:>5} {n:>5}  {ref:6.1f} {sim:6.1f} {d}")
    if t3:
        out.append("DGEMM utilization [%] vs size (ref sim delta)")
        out.append(f"{'FPUs':>5} {'n':>5}")
        out += t3
        out.append("")

    if not out:
        raise ReportError("CSV has no rows matching any reference table")
    return "\n".join(out), warnings, flagged
