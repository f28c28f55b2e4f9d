"""Counters, derived metrics, energy accounting and report rendering."""
import csv
import io

import pytest

from snitchsim import kernels
from snitchsim.perf import (CSV_COLUMNS, EnergyError, MetricsError, PerfCounters, csv_text, derive_metrics,
                            energy_report)
from snitchsim.suites import REF_T1, ReportError, render, suite


def test_metrics_from_counters():
    c = PerfCounters(cycles=100, int_retired=40, fpss_issued=70, fpu_arith_issued=60)
    m = derive_metrics(c)
    assert (m.cycles, m.fpu_util, m.fpss_util, m.snitch_util) == (100, 0.6, 0.7, 0.4)
    assert m.ipc == pytest.approx(1.1)


def test_metrics_mean_over_cores_with_shared_window():
    a = PerfCounters(cycles=90, fpu_arith_issued=50)
    b = PerfCounters(cycles=80, fpu_arith_issued=30)
    m = derive_metrics([a, b], cycles=100)
    assert m.cycles == 100 and m.fpu_util == pytest.approx(0.4)


def test_metrics_errors():
    with pytest.raises(MetricsError):
        derive_metrics(PerfCounters())
    with pytest.raises(MetricsError):
        derive_metrics([])


def test_counter_arithmetic():
    a = PerfCounters(cycles=10, int_retired=3, stalls={"branch": 2}, mnemonics={"add": 3})
    b = PerfCounters(cycles=4, int_retired=1, stalls={"branch": 2}, mnemonics={"add": 1})
    d = a - b
    assert (d.cycles, d.int_retired, d.stalls, d.mnemonics) == (6, 2, {}, {"add": 2})
    assert (d + b).cycles == 10


def test_counter_invariants_on_a_kernel():
    r = kernels.run("dgemm", "ssr_frep", 16, 1)
    t = r.totals()
    m = r.metrics
    assert t.fpu_arith_issued <= t.fpss_issued
    assert m.fpu_util <= m.fpss_util <= 1.0 and m.snitch_util <= 1.0
    assert m.ipc == pytest.approx(m.fpss_util + m.snitch_util)
    assert t.ssr_elements == 2 * 16 ** 3          # one A and one B element per multiply-add
    assert t.frep_sequenced == 16 ** 3


def test_energy_report():
    c = PerfCounters(mnemonics={"fmadd.d": 10, "addi": 4, "fld": 0})
    per, total = energy_report(c, {"fmadd": 2.0, "addi": 0.5})
    assert per == {"addi": 2.0, "fmadd": 20.0} and total == 22.0
    with pytest.raises(EnergyError, match="addi"):
        energy_report(c, {"fmadd": 1.0})
    with pytest.raises(EnergyError):
        energy_report(c, {"fmadd": -1.0, "addi": 1.0})


def test_csv_columns_frozen():
    r = kernels.run("dot", "ssr", 64, 1)
    text = csv_text([r.row()])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[0]["validated"] == "1" and rows[0]["kernel"] == "dot"


def _row(k, v, n, c, fpu=0.5, cycles=1000):
    return dict(kernel=k, variant=v, size=n, cores=c, cycles=cycles, fpu_util=fpu, fpss_util=fpu, snitch_util=0.1,
                ipc=fpu + 0.1)


def test_render_full_cell_and_flags():
    (k, n, v), ((f1, *_), _) = next(iter(REF_T1.items()))
    text, warns, flagged = render([_row(k, v, n, 1, fpu=f1)])
    assert f"{f1:5.2f}" in text and "+0.00" in text
    assert warns   # partial suite warns about missing cells
    _, _, flagged_far = render([_row(k, v, n, 1, fpu=f1 + 0.5)])
    assert flagged_far > flagged


def test_render_errors():
    with pytest.raises(ReportError, match="empty"):
        render([])
    with pytest.raises(ReportError):
        render([_row("nope", "baseline", 1, 1)])


def test_suite_names():
    assert suite("table1") == suite("paper-table1")
    assert len(suite("table1")) == 2 * len(REF_T1)
    with pytest.raises(KeyError):
        suite("table9")
