"""Benchmark kernels addressable by name.

Each kernel module exposes ``build(size, variant, cores, seed, ...)`` returning
a :class:`KernelBuild`: the assembled program with its TCDM image, and a
``check(cluster)`` that compares the simulated output with a host oracle.
"""
from __future__ import annotations

from dataclasses import dataclass
from types import ModuleType

from ..cluster import Cluster, ClusterConfig, RunResult, simulate
from ..perf import Metrics, PerfCounters, derive_metrics
from . import axpy, conv2d, dgemm, dot, fft, knn_dist, montecarlo_pi, relu
from .runtime import CapacityError, KernelBuild

VARIANTS = ("baseline", "ssr", "ssr_frep")


@dataclass(frozen=True)
class KernelInfo:
    name: str
    module: ModuleType
    default_size: int
    variants: tuple[str, ...]
    summary: str


KERNELS: dict[str, KernelInfo] = {k.name: k for k in (
    KernelInfo("dot", dot, 4096, VARIANTS, "scalar product of two vectors"),
    KernelInfo("relu", relu, 1024, VARIANTS, "element-wise max(x, 0)"),
    KernelInfo("dgemm", dgemm, 32, VARIANTS, "n x n matrix multiplication"),
    KernelInfo("fft", fft, 256, VARIANTS, "radix-2 complex FFT"),
    KernelInfo("axpy", axpy, 1024, ("baseline", "ssr"), "y = a*x + y"),
    KernelInfo("knn_dist", knn_dist, 256, VARIANTS, "squared distances to a query point"),
    KernelInfo("montecarlo_pi", montecarlo_pi, 4096, VARIANTS, "Monte Carlo pi with xoshiro128+"),
    KernelInfo("conv2d", conv2d, 32, VARIANTS, "n x n image, 7 x 7 filter"),
)}


class UnknownKernel(KeyError):
    def __str__(self) -> str:
        return self.args[0]


def info(name: str) -> KernelInfo:
    try:
        return KERNELS[name]
    except KeyError:
        raise UnknownKernel(f"unknown kernel {name!r}; valid kernels: {', '.join(KERNELS)}") from None


def build(name: str, variant: str = "baseline", size: int | None = None, cores: int = 1, seed: int = 0,
          capacity: int | None = None, **kw) -> KernelBuild:
    k = info(name)
    if variant not in k.variants:
        raise ValueError(f"{name} has no {variant!r} variant; valid: {', '.join(k.variants)}")
    n = k.default_size if size is None else size
    return k.module.build(n, variant, cores=cores, seed=seed, capacity=capacity, **kw)


@dataclass
class KernelRun:
    kernel: str
    variant: str
    cores: int
    size: int
    build: KernelBuild
    cluster: Cluster
    result: RunResult
    metrics: Metrics
    valid: bool
    message: str

    @property
    def cycles(self) -> int:
        return self.metrics.cycles

    def totals(self) -> PerfCounters:
        total = PerfCounters()
        for c in self.result.window.counters:
            total = total + c
        return total

    def row(self) -> dict:
        """One CSV row (see ``perf.CSV_COLUMNS``)."""
        t = self.totals()
        m = self.metrics
        return dict(kernel=self.kernel, variant=self.variant, cores=self.cores, size=self.size,
                    cycles=m.cycles, fpu_util=m.fpu_util, fpss_util=m.fpss_util, snitch_util=m.snitch_util,
                    ipc=m.ipc, int_retired=t.int_retired, fpss_issued=t.fpss_issued,
                    fpu_arith_issued=t.fpu_arith_issued, fp_mem_issued=t.fp_mem_issued,
                    tcdm_conflicts=t.tcdm_conflicts, icache_misses=t.icache_misses,
                    ssr_elements=t.ssr_elements, frep_sequenced=t.frep_sequenced,
                    validated=int(self.valid))


def run(name: str, variant: str = "baseline", size: int | None = None, cores: int = 1, seed: int = 0,
        cfg: ClusterConfig | None = None, max_cycles: int = 10_000_000, trace: bool = False,
        trace_cores: set[int] | None = None, trace_units: set[str] | None = None, **kw) -> KernelRun:
    """Build, simulate and validate one kernel configuration."""
    cfg = cfg or ClusterConfig.with_cores(cores)
    if cfg.cores != cores:
        raise ValueError(f"cluster has {cfg.cores} cores, run asks for {cores}")
    k = info(name)
    n = k.default_size if size is None else size
    b = build(name, variant, n, cores, seed, capacity=cfg.tcdm.size, **kw)
    cl, res = simulate(b.program, cfg, max_cycles, trace=trace, trace_cores=trace_cores, trace_units=trace_units)
    if res.window is None:
        raise RuntimeError(f"{name}/{variant}: program never marked its measured region")
    metrics = derive_metrics(res.window.counters, res.window.cycles)
    ok, msg = b.check(cl)
    return KernelRun(name, variant, cores, n, b, cl, res, metrics, bool(ok), msg)


__all__ = ["KERNELS", "VARIANTS", "CapacityError", "KernelBuild", "KernelInfo", "KernelRun", "UnknownKernel",
           "build", "info", "run"]
