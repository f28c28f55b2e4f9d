"""Command-line entry point.

    snitchsim run --kernel dot --variant ssr_frep --size 4096 --cores 1
    snitchsim run --suite table1 --jobs 4 --csv table1.csv
    snitchsim report table1.csv
    snitchsim list

``run`` exits 0 iff every configuration validated against its oracle and no
watchdog fired.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from . import kernels
from .cluster import Watchdog
from .config import ConfigError, RunConfig, load
from .memory import SimulationFault
from .perf import csv_text
from .suites import Cell, ReportError, render, suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_WATCHDOG = 0, 1, 2, 3


def _parse_set(text: str | None, conv=str):
    if not text:
        return None
    return {conv(t.strip()) for t in text.split(",") if t.strip()}


def _one(cell: Cell, seed: int, max_cycles: int, rc: RunConfig | None, emit: str | None,
         trace: str | None, trace_cores, trace_units) -> dict:
    """Run one configuration; returns a result record (picklable, for worker processes)."""
    rec = {"cell": cell}
    try:
        if rc and rc.cluster:
            cfg = rc.cluster_config(cell.cores)
            if cell.bank_size and cfg.tcdm.bank_size < cell.bank_size:
                cfg = replace(cfg, tcdm=replace(cfg.tcdm, bank_size=cell.bank_size))
        else:
            cfg = cell.cluster()
        r = kernels.run(cell.kernel, cell.variant, cell.size, cell.cores, seed, cfg=cfg, max_cycles=max_cycles,
                        trace=trace is not None, trace_cores=trace_cores, trace_units=trace_units)
    except Watchdog as w:
        rec.update(status="watchdog", message=str(w), histogram=w.histogram)
        return rec
    except (kernels.CapacityError, ValueError, SimulationFault, RuntimeError) as e:
        rec.update(status="error", message=str(e))
        return rec
    if emit:
        with open(emit, "w") as fh:
            fh.write(r.build.source)
    if trace:
        with open(trace, "w") as fh:
            fh.write("\n".join(r.result.trace or []) + ("\n" if r.result.trace else ""))
    rec.update(status="ok" if r.valid else "invalid", message=r.message, row=r.row())
    return rec


def _artifact_path(base: str | None, cell: Cell, ext: str, many: bool) -> str | None:
    if base is None or not many:
        return base
    os.makedirs(base, exist_ok=True)
    return os.path.join(base, f"{cell.kernel}_{cell.variant}_n{cell.size}_c{cell.cores}.{ext}")


def cmd_run(args) -> int:
    rc = None
    if args.config:
        try:
            rc = load(args.config)
        except ConfigError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_USAGE
    opts = dict(rc.run) if rc else {}
    for k in ("kernel", "variant", "size", "cores", "seed", "max_cycles", "suite", "emit", "trace", "csv",
              "trace_cores", "trace_units"):
        v = getattr(args, k)
        if v is not None:
            opts[k] = v
    seed = opts.get("seed", 0)
    max_cycles = opts.get("max_cycles", 10_000_000)
    if max_cycles <= 0:
        print("error: --max-cycles must be > 0", file=sys.stderr)
        return EXIT_USAGE
    try:
        if opts.get("suite"):
            cells = suite(opts["suite"])
        else:
            name = opts.get("kernel")
            if not name:
                print("error: give --kernel or --suite", file=sys.stderr)
                return EXIT_USAGE
            k = kernels.info(name)
            variant = opts.get("variant", "baseline")
            if variant not in k.variants:
                print(f"error: {name} has no {variant!r} variant; valid: {', '.join(k.variants)}", file=sys.stderr)
                return EXIT_USAGE
            cells = [Cell(name, variant, opts.get("size", k.default_size), opts.get("cores", 1))]
    except (KeyError, kernels.UnknownKernel) as e:
        msg = e.args[0] if e.args else str(e)
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE

    many = len(cells) > 1
    tc = _parse_set(opts.get("trace_cores"), int)
    tu = _parse_set(opts.get("trace_units"))
    jobs = [(c, seed, max_cycles, rc, _artifact_path(opts.get("emit"), c, "s", many),
             _artifact_path(opts.get("trace"), c, "trace", many), tc, tu) for c in cells]
    if args.jobs > 1 and many:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            records = list(ex.map(_one, *zip(*jobs)))
    else:
        records = [_one(*j) for j in jobs]

    status = EXIT_OK
    rows = []
    summary = sys.stdout if opts.get("csv") else sys.stderr
    for rec in records:
        c = rec["cell"]
        tag = f"{c.kernel:<14}{c.variant:<10} n={c.size:<5} cores={c.cores}"
        if rec["status"] == "watchdog":
            status = max(status, EXIT_WATCHDOG)
            print(f"{tag}  WATCHDOG  {rec['message']}", file=summary)
            for core, hist in sorted(rec["histogram"].items()):
                top = ", ".join(f"{k}={v}" for k, v in sorted(hist.items(), key=lambda kv: -kv[1]))
                print(f"    core {core}: {top or 'no stalls'}", file=summary)
            continue
        if rec["status"] == "error":
            status = max(status, EXIT_FAIL)
            print(f"{tag}  ERROR  {rec['message']}", file=summary)
            continue
        row = rec["row"]
        rows.append(row)
        if rec["status"] != "ok":
            status = max(status, EXIT_FAIL)
        print(f"{tag}  cycles={row['cycles']:<8} fpu={row['fpu_util']:.3f} fpss={row['fpss_util']:.3f} "
              f"snitch={row['snitch_util']:.3f} ipc={row['ipc']:.3f}  "
              f"{'PASS' if rec['status'] == 'ok' else 'FAIL'} {rec['message']}", file=summary)
    text = csv_text(rows)
    if opts.get("csv"):
        with open(opts["csv"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


def cmd_report(args) -> int:
    try:
        with open(args.csv, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        text, warnings, flagged = render(rows)
    except ReportError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    print(text)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    if flagged:
        print(f"{flagged} cell(s) outside tolerance (marked !)")
    return EXIT_FAIL if (flagged and args.strict) else EXIT_OK


def cmd_list(args) -> int:
    for k in kernels.KERNELS.values():
        print(f"{k.name:<14} default size {k.default_size:<5} variants {','.join(k.variants):<24} {k.summary}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="snitchsim", description="Cycle-level Snitch cluster simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate kernels and write a metrics CSV")
    r.add_argument("--kernel", help=f"one of: {', '.join(kernels.KERNELS)}")
    r.add_argument("--variant", choices=kernels.VARIANTS)
    r.add_argument("--size", type=int, help="problem size (kernel specific, see `list`)")
    r.add_argument("--cores", type=int, help="cluster cores (1-4 or a multiple of 4)")
    r.add_argument("--config", help="INI run configuration (see snitchsim.config)")
    r.add_argument("--emit", help="write the generated assembly here (a directory for suites)")
    r.add_argument("--trace", help="write an event trace here (a directory for suites)")
    r.add_argument("--trace-cores", dest="trace_cores", help="comma-separated cores to trace")
    r.add_argument("--trace-units", dest="trace_units", help="comma-separated units: core,fpss,tcdm,muldiv")
    r.add_argument("--suite", help="named suite: table1, table2, table3, smoke")
    r.add_argument("--seed", type=int)
    r.add_argument("--max-cycles", dest="max_cycles", type=int, help="watchdog (default 10000000)")
    r.add_argument("--jobs", type=int, default=1, help="worker processes for suites")
    r.add_argument("--csv", help="CSV output path (default stdout)")
    r.set_defaults(fn=cmd_run)

    rp = sub.add_parser("report", help="compare a suite CSV with the reference tables")
    rp.add_argument("csv")
    rp.add_argument("--strict", action="store_true", help="exit 1 when a cell is outside tolerance")
    rp.set_defaults(fn=cmd_report)

    ls = sub.add_parser("list", help="list kernels")
    ls.set_defaults(fn=cmd_list)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
