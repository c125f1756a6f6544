"""Network configuration files (TOML).

Layout::

    [run]
    order = 4            # scheme order K
    solver = "tt"        # "tt" or "heoc"
    cfl = 0.95
    t_end = 2.4
    mode = "weno"        # or "linear"
    output_times = [0.0, 2.4]
    samples = 24         # ODE trace samples over [0, t_end]

    [edge.E1]
    length = 25.0
    cells = 100
    model = "swe"
    initial = { type = "hermite", points = [[0, 2, 7], [1, 3, 7]] }
    bottom = { poly = [0.0, 0.3] }            # optional, in s = x / L

    [vertex.V1]
    endpoints = ["E1:left", "E2:left"]
    coupling = "manhole"                       # or "equal_heights"
    A_m = 1.0
    w0 = [2.0, 0.0]

    [lump]
    edges = ["E2"]
    vertices = ["V1"]

Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import copy
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .profiles import make_bottom, make_profile

__all__ = [
    "ConfigError",
    "EdgeConfig",
    "VertexConfig",
    "RunConfig",
    "NetworkConfig",
    "parse_config",
    "load_config",
]


class ConfigError(ValueError):
    pass


@dataclass
class EdgeConfig:
    id: str
    length: float
    cells: int
    initial: dict
    model: str = "swe"
    bottom: dict | None = None


@dataclass
class VertexConfig:
    id: str
    endpoints: list
    coupling: str = "equal_heights"
    params: dict = field(default_factory=dict)
    w0: list | None = None


@dataclass
class RunConfig:
    order: int = 2
    solver: str = "tt"
    cfl: float = 0.95
    t_end: float = 1.0
    mode: str = "weno"
    output_times: list = field(default_factory=list)
    samples: int = 24


@dataclass
class NetworkConfig:
    edges: list
    vertices: list
    run: RunConfig = field(default_factory=RunConfig)
    lump_edges: list = field(default_factory=list)
    lump_vertices: list = field(default_factory=list)
    name: str = ""

    def with_cells(self, cells: int, only=None) -> "NetworkConfig":
        """Copy with ``cells`` on every edge (or on the ids in ``only``)."""
        out = copy.deepcopy(self)
        for e in out.edges:
            if only is None or e.id in only:
                e.cells = int(cells)
        return out

    def with_run(self, **kw) -> "NetworkConfig":
        """Copy with replaced run settings; a new ``t_end`` drops output times beyond it."""
        out = copy.deepcopy(self)
        out.run = replace(out.run, **kw)
        if "t_end" in kw and "output_times" not in kw and out.run.output_times:
            t_end = float(out.run.t_end)
            kept = [t for t in out.run.output_times if t <= t_end]
            out.run.output_times = kept if t_end in kept else kept + [t_end]
        return out

    def without_lumping(self) -> "NetworkConfig":
        out = copy.deepcopy(self)
        out.lump_edges, out.lump_vertices = [], []
        return out


_RUN_KEYS = {f for f in RunConfig.__dataclass_fields__}
_EDGE_KEYS = {"length", "cells", "model", "initial", "bottom"}
_VERTEX_KEYS = {"endpoints", "coupling", "w0", "A_m"}
_LUMP_KEYS = {"edges", "vertices"}
_TOP_KEYS = {"run", "edge", "vertex", "lump", "name"}


def _reject(found, allowed, where):
    bad = set(found) - set(allowed)
    if bad:
        raise ConfigError(f"unknown key(s) {sorted(bad)} in {where}")


def _parse_endpoint(s: str, where: str):
    if not isinstance(s, str) or s.count(":") != 1:
        raise ConfigError(f"{where}: endpoint must look like 'edge_id:left' or 'edge_id:right', got {s!r}")
    e, end = s.split(":")
    if end not in ("left", "right"):
        raise ConfigError(f"{where}: endpoint side must be 'left' or 'right', got {end!r}")
    return (e, end)


def parse_config(data: dict) -> NetworkConfig:
    """Validate a configuration mapping (as loaded from TOML)."""
    _reject(data, _TOP_KEYS, "top level")
    run_d = dict(data.get("run", {}))
    _reject(run_d, _RUN_KEYS, "[run]")
    try:
        run = RunConfig(**run_d)
        run.order = int(run.order)
        run.cfl = float(run.cfl)
        run.t_end = float(run.t_end)
        run.samples = int(run.samples)
        run.output_times = [float(t) for t in run.output_times]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[run]: {exc}") from exc
    if run.solver not in ("tt", "heoc"):
        raise ConfigError("[run] solver must be 'tt' or 'heoc'")
    if run.mode not in ("weno", "linear"):
        raise ConfigError("[run] mode must be 'weno' or 'linear'")
    if run.order < 1 or run.order > 8:
        raise ConfigError("[run] order must be between 1 and 8")
    if not run.cfl > 0:
        raise ConfigError("[run] cfl must be positive")
    if run.t_end < 0:
        raise ConfigError("[run] t_end must be non-negative")
    if run.samples < 1:
        raise ConfigError("[run] samples must be positive")

    edges = []
    for eid, ed in dict(data.get("edge", {})).items():
        where = f"[edge.{eid}]"
        if not isinstance(ed, dict):
            raise ConfigError(f"{where} must be a table")
        _reject(ed, _EDGE_KEYS, where)
        for key in ("length", "cells", "initial"):
            if key not in ed:
                raise ConfigError(f"{where}: missing {key!r}")
        try:
            ec = EdgeConfig(str(eid), float(ed["length"]), int(ed["cells"]), dict(ed["initial"]),
                            str(ed.get("model", "swe")), None if ed.get("bottom") is None else dict(ed["bottom"]))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from exc
        if not ec.length > 0 or ec.cells < 1:
            raise ConfigError(f"{where}: length and cells must be positive")
        try:
            make_profile(ec.initial, ec.length)
            make_bottom(ec.bottom, ec.length)
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"{where}: {exc}") from exc
        edges.append(ec)
    ids = {e.id for e in edges}

    vertices = []
    seen = {}
    for vid, vd in dict(data.get("vertex", {})).items():
        where = f"[vertex.{vid}]"
        if not isinstance(vd, dict):
            raise ConfigError(f"{where} must be a table")
        _reject(vd, _VERTEX_KEYS, where)
        if "endpoints" not in vd:
            raise ConfigError(f"{where}: missing 'endpoints'")
        eps = [_parse_endpoint(s, where) for s in vd["endpoints"]]
        for e, end in eps:
            if e not in ids:
                raise ConfigError(f"{where}: dangling endpoint on unknown edge {e!r}")
            if (e, end) in seen:
                raise ConfigError(f"{where}: endpoint {e}:{end} already attached to vertex {seen[(e, end)]}")
            seen[(e, end)] = vid
        coupling = str(vd.get("coupling", "equal_heights"))
        params = {"A_m": float(vd["A_m"])} if "A_m" in vd else {}
        if coupling not in ("equal_heights", "transmission", "manhole"):
            raise ConfigError(f"{where}: unknown coupling {coupling!r}")
        if params and coupling != "manhole":
            raise ConfigError(f"{where}: A_m only applies to manhole couplings")
        w0 = vd.get("w0")
        vertices.append(VertexConfig(str(vid), eps, coupling, params, None if w0 is None else [float(x) for x in w0]))

    lump = dict(data.get("lump", {}))
    _reject(lump, _LUMP_KEYS, "[lump]")
    lump_e = [str(e) for e in lump.get("edges", [])]
    lump_v = [str(v) for v in lump.get("vertices", [])]
    for e in lump_e:
        if e not in ids:
            raise ConfigError(f"[lump]: unknown edge {e!r}")
    for v in lump_v:
        if v not in {x.id for x in vertices}:
            raise ConfigError(f"[lump]: unknown vertex {v!r}")
    return NetworkConfig(edges, vertices, run, lump_e, lump_v, str(data.get("name", "")))


def load_config(path) -> NetworkConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    cfg = parse_config(data)
    if not cfg.name:
        cfg.name = path.stem
    return cfg
