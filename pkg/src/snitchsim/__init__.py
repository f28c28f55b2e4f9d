"""Cycle-level simulator of a Snitch cluster: RV32 integer cores with a
decoupled double-precision FPU subsystem, stream semantic registers, FREP
sequencer, banked TCDM and benchmark kernels."""
from ._accel import BACKEND
from .asm import assemble
from .cluster import Cluster, ClusterConfig, RunResult, simulate
from .perf import Metrics, PerfCounters, derive_metrics

__version__ = "0.1.0"

__all__ = ["BACKEND", "Cluster", "ClusterConfig", "Metrics", "PerfCounters", "RunResult", "assemble",
           "derive_metrics", "simulate", "__version__"]
