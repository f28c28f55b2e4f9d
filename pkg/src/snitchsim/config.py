"""Run configuration files.

INI syntax (``configparser``). Every section is optional::

    [cluster]            ; ClusterConfig fields
    cores = 8            ; shorthand for hives x cores_per_hive
    ssr_depth = 4
    branch_penalty = 0

    [tcdm]               ; TcdmConfig fields
    bank_size = 16384

    [icache]             ; ICacheConfig fields
    [fpu]                ; FpuLatencyTable fields (fma, cmp, cast, sgnj, minmax, move)

    [run]
    kernel = dgemm
    variant = ssr_frep
    size = 32
    seed = 0
    max_cycles = 10000000
    csv = results.csv
    emit = dgemm.s
    trace = trace.txt
    trace_cores = 0,1
    trace_units = core,fpss

Command-line flags override ``[run]`` keys.
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field

from .cluster import ClusterConfig

NESTED = {"tcdm": "tcdm", "icache": "icache", "fpu": "fpu"}
RUN_KEYS = {"kernel": str, "variant": str, "size": int, "seed": int, "max_cycles": int, "csv": str,
            "emit": str, "trace": str, "trace_cores": str, "trace_units": str, "suite": str, "cores": int}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    cluster: dict = field(default_factory=dict)     # ClusterConfig overrides, nested dataclasses by section
    run: dict = field(default_factory=dict)

    def cluster_config(self, cores: int) -> ClusterConfig:
        kw = {}
        base = ClusterConfig()
        for name, values in self.cluster.items():
            if name in NESTED:
                cur = getattr(base, NESTED[name])
                kw[NESTED[name]] = _typed_replace(cur, values, name)
        flat = {k: v for k, v in self.cluster.get("", {}).items() if k != "cores"}
        kw.update(_coerce_fields(ClusterConfig, flat, "cluster"))
        try:
            return ClusterConfig.with_cores(cores, **kw)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid cluster configuration: {e}") from None


def _parse_value(typ, raw: str, where: str):
    try:
        if typ is bool or typ == "bool":
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ in (int, "int"):
            return int(raw, 0)
        return raw
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {getattr(typ, '__name__', typ)}") from None


def _coerce_fields(cls, values: dict, section: str) -> dict:
    known = {f.name: f.type for f in dataclasses.fields(cls)}
    out = {}
    for k, raw in values.items():
        if k not in known or k in NESTED.values():
            raise ConfigError(f"[{section}] unknown key {k!r}")
        out[k] = _parse_value(known[k], raw, f"[{section}] {k}")
    return out


def _typed_replace(obj, values: dict, section: str):
    try:
        return dataclasses.replace(obj, **_coerce_fields(type(obj), values, section))
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"[{section}] {e}") from None


def load(path: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as e:
        raise ConfigError(f"{path}: {e}") from None
    return parse(cp, path)


def loads(text: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(str(e)) from None
    return parse(cp, "<string>")


def parse(cp: configparser.ConfigParser, where: str) -> RunConfig:
    rc = RunConfig()
    for sec in cp.sections():
        items = dict(cp.items(sec))
        if sec == "cluster":
            rc.cluster[""] = items
            if "cores" in items:
                rc.run["cores"] = _parse_value(int, items["cores"], f"{where} [cluster] cores")
        elif sec in NESTED:
            rc.cluster[sec] = items
        elif sec == "run":
            for k, raw in items.items():
                if k not in RUN_KEYS:
                    raise ConfigError(f"{where}: [run] unknown key {k!r}")
                rc.run[k] = _parse_value(RUN_KEYS[k], raw, f"{where} [run] {k}")
        else:
            raise ConfigError(f"{where}: unknown section [{sec}]")
    # validate field names early
    if "" in rc.cluster:
        _coerce_fields(ClusterConfig, {k: v for k, v in rc.cluster[""].items() if k != "cores"}, "cluster")
    return rc
