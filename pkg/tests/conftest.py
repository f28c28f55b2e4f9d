import sys

import pytest

from snitchsim import ClusterConfig, assemble, simulate
from snitchsim.fparith import to_bits


def run_asm(source: str, cores: int = 1, max_cycles: int = 200_000, **kw):
    """Assemble and simulate ``source``; returns (cluster, result)."""
    return simulate(assemble(source), ClusterConfig.with_cores(cores), max_cycles, **kw)


def fp_state(cluster, core: int = 0) -> list[int]:
    return [to_bits(v) for v in cluster.complexes[core].fpss.fregs]


def int_state(cluster, core: int = 0) -> list[int]:
    return list(cluster.cores[core].x)


@pytest.fixture
def run():
    return run_asm


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
