"""Command-line runner, configuration files and reproducibility."""
import csv
import os
import subprocess
import sys

import pytest

from snitchsim.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, EXIT_WATCHDOG, main
from snitchsim.config import ConfigError, loads
from snitchsim.perf import CSV_COLUMNS


def _csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_writes_csv_row(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert main(["run", "--kernel", "dot", "--variant", "ssr_frep", "--size", "256", "--csv", str(out)]) == EXIT_OK
    rows = _csv(out)
    assert len(rows) == 1 and tuple(rows[0]) == CSV_COLUMNS
    assert rows[0]["validated"] == "1"
    assert "PASS" in capsys.readouterr().out


def test_csv_to_stdout_by_default(capsys):
    assert main(["run", "--kernel", "relu", "--size", "64"]) == EXIT_OK
    cap = capsys.readouterr()
    assert cap.out.startswith(",".join(CSV_COLUMNS))
    assert "PASS" in cap.err


def test_unknown_kernel_exit_and_message(capsys):
    assert main(["run", "--kernel", "gemv"]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert "gemv" in err and "dgemm" in err and "montecarlo_pi" in err


def test_missing_variant(capsys):
    assert main(["run", "--kernel", "axpy", "--variant", "ssr_frep"]) == EXIT_USAGE
    assert "baseline, ssr" in capsys.readouterr().err


def test_invalid_core_count_is_an_error(capsys):
    assert main(["run", "--kernel", "dot", "--size", "256", "--cores", "6"]) == EXIT_FAIL
    assert "multiple of 4" in capsys.readouterr().err


def test_watchdog_exit_code(capsys):
    assert main(["run", "--kernel", "dot", "--size", "256", "--max-cycles", "50"]) == EXIT_WATCHDOG
    err = capsys.readouterr().err
    assert "WATCHDOG" in err and "core 0:" in err


def test_nonpositive_watchdog_rejected():
    assert main(["run", "--kernel", "dot", "--max-cycles", "0"]) == EXIT_USAGE


def test_emit_and_trace_files(tmp_path):
    asm, tr = tmp_path / "k.s", tmp_path / "k.trace"
    assert main(["run", "--kernel", "relu", "--size", "32", "--variant", "ssr", "--cores", "2", "--emit", str(asm),
                 "--trace", str(tr), "--trace-cores", "1", "--trace-units", "core,fpss"]) == EXIT_OK
    assert "ssr.enable" in asm.read_text()
    lines = tr.read_text().splitlines()
    assert lines and all(ln.split()[1] == "1" and ln.split()[2] in ("core", "fpss") for ln in lines)


def test_suite_run_and_report(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["run", "--suite", "smoke", "--jobs", "2", "--csv", str(out)]) == EXIT_OK
    rows = _csv(out)
    assert len(rows) == 8 and all(r["validated"] == "1" for r in rows)
    capsys.readouterr()
    # only the 4-core DGEMM cell has a reference value; the rest is reported missing
    assert main(["report", str(out)]) == EXIT_OK
    cap = capsys.readouterr()
    assert "DGEMM utilization" in cap.out and "missing" in cap.err


def test_report_partial_and_empty(tmp_path, capsys):
    part = tmp_path / "p.csv"
    assert main(["run", "--kernel", "dgemm", "--variant", "ssr_frep", "--size", "32", "--csv", str(part)]) == EXIT_OK
    capsys.readouterr()
    assert main(["report", str(part)]) == EXIT_OK
    cap = capsys.readouterr()
    assert "DGEMM" in cap.out and "warning: table2: missing" in cap.err
    empty = tmp_path / "e.csv"
    empty.write_text(",".join(CSV_COLUMNS) + "\n")
    assert main(["report", str(empty)]) == EXIT_USAGE
    assert "empty" in capsys.readouterr().err
    assert main(["report", str(tmp_path / "missing.csv")]) == EXIT_USAGE


def test_list(capsys):
    assert main(["list"]) == EXIT_OK
    assert len(capsys.readouterr().out.splitlines()) == 8


# configuration files ---------------------------------------------------------------------

def test_config_roundtrip(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    out = tmp_path / "c.csv"
    cfg.write_text(f"""
[cluster]
cores = 2
ssr_depth = 3
[tcdm]
bank_size = 8192
[fpu]
fma = 4
[run]
kernel = dot
variant = ssr_frep
size = 512
seed = 7
csv = {out}
""")
    assert main(["run", "--config", str(cfg)]) == EXIT_OK
    r = _csv(out)[0]
    assert (r["kernel"], r["size"], r["cores"]) == ("dot", "512", "2")
    # flags override the file
    assert main(["run", "--config", str(cfg), "--size", "256"]) == EXIT_OK
    assert _csv(out)[0]["size"] == "256"


def test_config_parsing():
    rc = loads("[cluster]\ncores = 8\nbranch_penalty = 1\nfrep_enabled = no\n[fpu]\nfma = 5\n[run]\nkernel = fft")
    c = rc.cluster_config(8)
    assert (c.cores, c.branch_penalty, c.frep_enabled, c.fpu.fma) == (8, 1, False, 5)
    assert rc.run == {"cores": 8, "kernel": "fft"}


@pytest.mark.parametrize("text,msg", [
    ("[bogus]\nx = 1", "unknown section"),
    ("[cluster]\nwarp = 1", "unknown key"),
    ("[cluster]\nssr_depth = lots", "cannot parse"),
    ("[run]\ncolor = red", "unknown key"),
    ("not an ini file", "header"),
])
def test_config_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        loads(text)


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[cluster]\nwarp = 1\n")
    assert main(["run", "--config", str(bad)]) == EXIT_USAGE
    assert "warp" in capsys.readouterr().err


def test_invalid_cluster_values():
    with pytest.raises(ConfigError):
        loads("[cluster]\nssr_depth = 0").cluster_config(1)


# reproducibility ---------------------------------------------------------------------------

def _cli(args, env=None):
    return subprocess.run([sys.executable, "-m", "snitchsim", *args], capture_output=True, check=True,
                          env={**os.environ, **(env or {})}).stdout


@pytest.mark.parametrize("kernel,variant,size,cores", [("fft", "ssr_frep", 64, 4), ("montecarlo_pi", "ssr", 64, 8),
                                                        ("dgemm", "baseline", 16, 2)])
def test_two_runs_identical_bytes(tmp_path, kernel, variant, size, cores):
    outs = []
    for i in range(2):
        c, t = tmp_path / f"{i}.csv", tmp_path / f"{i}.trace"
        _cli(["run", "--kernel", kernel, "--variant", variant, "--size", str(size), "--cores", str(cores), "--seed", "3",
              "--csv", str(c), "--trace", str(t)])
        outs.append((c.read_bytes(), t.read_bytes()))
    assert outs[0] == outs[1]
    assert outs[0][1]


def test_pure_and_native_backends_agree(tmp_path):
    import snitchsim
    if snitchsim.BACKEND != "native":
        pytest.skip("compiled extension not built")
    args = ["run", "--kernel", "dgemm", "--variant", "ssr_frep", "--size", "8", "--cores", "4", "--trace",
            str(tmp_path / "t")]
    native = _cli(args)
    nt = (tmp_path / "t").read_bytes()
    pure = _cli(args, {"SNITCHSIM_PURE": "1"})
    assert native == pure and (tmp_path / "t").read_bytes() == nt


def test_backend_selection_env():
    out = subprocess.run([sys.executable, "-c", "import snitchsim; print(snitchsim.BACKEND)"], capture_output=True,
                         text=True, check=True, env={**os.environ, "SNITCHSIM_PURE": "1"}).stdout.strip()
    assert out == "pure"
