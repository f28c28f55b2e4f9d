"""Performance counters, metric derivation and energy accounting."""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field, fields

STALL_REASONS = (
    "scoreboard", "lsu_full", "offload_busy", "fetch_miss", "wb_contention", "sync", "ssr_busy",
    "wfi", "branch",
)


@dataclass
class PerfCounters:
    cycles: int = 0
    int_retired: int = 0
    fpss_issued: int = 0
    fpu_arith_issued: int = 0
    fp_mem_issued: int = 0
    tcdm_conflicts: int = 0
    icache_hits: int = 0
    icache_misses: int = 0
    ssr_elements: int = 0
    frep_sequenced: int = 0
    stalls: dict = field(default_factory=dict)
    mnemonics: dict = field(default_factory=dict)

    def snapshot(self) -> "PerfCounters":
        return PerfCounters(**{**asdict(self), "stalls": dict(self.stalls), "mnemonics": dict(self.mnemonics)})

    def __sub__(self, other: "PerfCounters") -> "PerfCounters":
        out = {}
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, dict):
                out[f.name] = {k: a.get(k, 0) - b.get(k, 0) for k in set(a) | set(b) if a.get(k, 0) - b.get(k, 0)}
            else:
                out[f.name] = a - b
        return PerfCounters(**out)

    def __add__(self, other: "PerfCounters") -> "PerfCounters":
        out = {}
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, dict):
                out[f.name] = {k: a.get(k, 0) + b.get(k, 0) for k in set(a) | set(b)}
            else:
                out[f.name] = a + b
        return PerfCounters(**out)


@dataclass
class Metrics:
    cycles: int
    fpu_util: float
    fpss_util: float
    snitch_util: float
    ipc: float


class MetricsError(ValueError):
    pass


def derive_metrics(counters: PerfCounters | list[PerfCounters], cycles: int | None = None) -> Metrics:
    """Utilizations and IPC of one core's region counters, or the mean over cores.

    ``cycles`` overrides the per-counter cycle count (used for a shared
    multi-core window).
    """
    group = counters if isinstance(counters, list) else [counters]
    if not group:
        raise MetricsError("no counters")
    vals = []
    for c in group:
        cyc = cycles if cycles is not None else c.cycles
        if cyc <= 0:
            raise MetricsError("region has zero cycles")
        vals.append((c.fpu_arith_issued / cyc, c.fpss_issued / cyc, c.int_retired / cyc))
    n = len(vals)
    fpu = sum(v[0] for v in vals) / n
    fpss = sum(v[1] for v in vals) / n
    snitch = sum(v[2] for v in vals) / n
    cyc = cycles if cycles is not None else max(c.cycles for c in group)
    return Metrics(cyc, fpu, fpss, snitch, fpss + snitch)


class EnergyError(ValueError):
    pass


def energy_class(mnemonic: str) -> str:
    """Energy-table key of a mnemonic: ``fmadd.d`` -> ``fmadd``."""
    return mnemonic[:-2] if mnemonic.endswith(".d") else mnemonic


def energy_report(counters: PerfCounters, table: dict[str, float]) -> tuple[dict[str, float], float]:
    """Per-class energy (pJ) and total from executed-instruction counts."""
    if any(v < 0 for v in table.values()):
        raise EnergyError("energy costs must be non-negative")
    counts: dict[str, int] = {}
    for m, n in counters.mnemonics.items():
        if n:
            k = energy_class(m)
            counts[k] = counts.get(k, 0) + n
    missing = sorted(k for k in counts if k not in table)
    if missing:
        raise EnergyError(f"no energy cost for: {', '.join(missing)}")
    per = {k: n * table[k] for k, n in sorted(counts.items())}
    return per, sum(per.values())


CSV_COLUMNS = (
    "kernel", "variant", "cores", "size", "cycles", "fpu_util", "fpss_util", "snitch_util", "ipc",
    "int_retired", "fpss_issued", "fpu_arith_issued", "fp_mem_issued", "tcdm_conflicts",
    "icache_misses", "ssr_elements", "frep_sequenced", "validated",
)


def csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{r[k]:.6f}" if isinstance(r.get(k), float) else r.get(k, "")) for k in CSV_COLUMNS})
    return buf.getvalue()
