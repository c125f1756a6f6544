"""Built-in test networks."""

from __future__ import annotations

import math

import numpy as np

from .config import EdgeConfig, NetworkConfig, RunConfig, VertexConfig
from .profiles import hermite_coefficients

__all__ = ["CASES", "builtin_case", "hermite_init", "list_cases"]

SPLIT_CIRCLE_POINTS = [[0.0, 2.0, 7], [1.0, 3.0, 7]]
DIAMOND_POINTS = [[0.0, 5.0, 6], [0.5, 5.3, 0], [1.0, 5.0, 6]]


def hermite_init(constraints, length: float) -> np.ndarray:
    """Coefficients in ``x`` of the polynomial meeting ``(x0, value, zero_derivs)`` constraints."""
    return hermite_coefficients(constraints, length)


def _manhole(vid, endpoints, w0):
    return VertexConfig(vid, endpoints, "manhole", {"A_m": 1.0}, list(w0))


def _split_circle(cells):
    edges = [
        EdgeConfig(e, 25.0, cells, {"type": "hermite", "points": SPLIT_CIRCLE_POINTS}) for e in ("E1", "E2", "E3")
    ]
    vertices = [
        _manhole("V1", [("E1", "left"), ("E2", "left"), ("E3", "left")], (2.0, 0.0)),
        _manhole("V2", [("E1", "right"), ("E2", "right"), ("E3", "right")], (3.0, 0.0)),
    ]
    return NetworkConfig(edges, vertices, RunConfig(order=4, t_end=2.4), name="split_circle")


def _diamond(cells):
    const = {"type": "constant", "h": 5.0}
    edges = [EdgeConfig("E1", 25.0, cells, {"type": "hermite", "points": DIAMOND_POINTS})]
    edges += [EdgeConfig(f"E{i}", 25.0, cells, dict(const)) for i in range(2, 7)]
    vertices = [
        _manhole("V1", [("E1", "left"), ("E2", "right"), ("E3", "left")], (5.0, 0.0)),
        VertexConfig("V2", [("E1", "right"), ("E5", "left"), ("E6", "left")]),
        _manhole("V3", [("E2", "left"), ("E4", "right"), ("E5", "right")], (5.0, 0.0)),
        VertexConfig("V4", [("E3", "right"), ("E4", "left"), ("E6", "right")]),
    ]
    run = RunConfig(order=4, solver="heoc", t_end=7.0)
    return NetworkConfig(edges, vertices, run, [f"E{i}" for i in range(2, 7)], [], name="diamond")


def _shock(cells):
    h = {"E1": 5.0, "E2": 5.0, "E3": 6.0, "E4": 5.0}
    edges = [EdgeConfig(e, 25.0, cells, {"type": "constant", "h": v}) for e, v in h.items()]
    vertices = [
        _manhole("V1", [("E1", "left"), ("E2", "left"), ("E3", "right")], (5.0, 0.0)),
        _manhole("V2", [("E1", "right"), ("E2", "right"), ("E4", "left")], (5.0, 0.0)),
        _manhole("V3", [("E3", "left"), ("E4", "right")], (6.0, 0.0)),
    ]
    return NetworkConfig(edges, vertices, RunConfig(order=6, t_end=4.0), name="shock")


# (edge, from vertex, to vertex) as drawn; loops start and end at the same vertex
TREE_EDGES = [
    (1, 1, 2), (2, 1, 1), (3, 2, 3), (4, 2, 4),
    (5, 3, 5), (6, 3, 6), (7, 4, 7), (8, 4, 8),
    (9, 5, 9), (10, 5, 10), (11, 6, 11), (12, 6, 12),
    (13, 7, 13), (14, 7, 14), (15, 8, 15), (16, 8, 16),
    (17, 9, 17), (18, 10, 17), (19, 11, 18), (20, 12, 18),
    (21, 13, 19), (22, 14, 19), (23, 15, 20), (24, 16, 20),
    (25, 17, 21), (26, 18, 21), (27, 19, 22), (28, 20, 22),
    (29, 21, 23), (30, 22, 23), (31, 23, 24), (32, 24, 24),
]  # fmt: skip
TREE_LUMP_EDGES = [5, 6, 9, 10, 11, 12, 17, 18, 19, 20, 25, 26]
TREE_LUMP_VERTICES = [3, 5, 6, 9, 10, 11, 12, 17, 18, 21]


def _tree(cells, lumped=False):
    long_edges = {1, 2, 3, 4, 29, 30, 31, 32}
    short_cells = max(int(round(cells / 10)), 11)
    edges = []
    for k, _, _ in TREE_EDGES:
        L = 25.0 if k in long_edges else 2.5
        if k == 1:
            init = {"type": "piecewise", "breaks": [18.5], "h": [3.0, 2.0]}
        else:
            init = {"type": "constant", "h": 3.0 if k == 2 else 2.0}
        edges.append(EdgeConfig(f"E{k}", L, cells if k in long_edges else short_cells, init))
    ends = {v: [] for v in range(1, 25)}
    for k, a, b in TREE_EDGES:
        ends[a].append((f"E{k}", "left"))
        ends[b].append((f"E{k}", "right"))
    vertices = [VertexConfig(f"V{v}", sorted(eps, key=lambda p: (int(p[0][1:]), p[1]))) for v, eps in ends.items()]
    run = RunConfig(order=2, solver="heoc" if lumped else "tt", t_end=15.0)
    cfg = NetworkConfig(edges, vertices, run, name="tree_lumped" if lumped else "tree")
    if lumped:
        cfg.lump_edges = [f"E{k}" for k in TREE_LUMP_EDGES]
        cfg.lump_vertices = [f"V{v}" for v in TREE_LUMP_VERTICES]
    return cfg


_BOTTOMS = {
    "b1": {"poly": [0.0, 0.3]},
    "b2": {"poly": [0.0, 0.0, 0.3]},  # 0.3 (s + (s - 1/2)^2 - 1/4) = 0.3 s^2
    "b3": {"poly": [0.0, 0.3], "sin": [[0.3, math.pi, 0.0]]},
}


def _well_balanced(which, cells):
    if which == "b1":
        init = {"type": "piecewise", "breaks": [6.25, 18.75], "h": [3.0, 4.0, 3.0], "surface": True}
    else:
        init = {"type": "constant", "h": 3.0, "surface": True}
    edges = [EdgeConfig(e, 25.0, cells, dict(init), bottom=dict(_BOTTOMS[which])) for e in ("E1", "E2", "E3")]
    # tank depths are measured from the bottom at the vertex: b(0) = 0, b(L) = 0.3
    vertices = [
        _manhole("V1", [("E1", "left"), ("E2", "left"), ("E3", "left")], (3.0, 0.0)),
        _manhole("V2", [("E1", "right"), ("E2", "right"), ("E3", "right")], (2.7, 0.0)),
    ]
    run = RunConfig(order=4, solver="tt", t_end=0.3)
    return NetworkConfig(edges, vertices, run, ["E2"], ["V1", "V2"], name=f"wb_{which}")


CASES = {
    "split_circle": ("three edges between two manholes, smooth data (t_end 2.4)", _split_circle),
    "diamond": ("six edges, two manholes, E2..E6 lumped (t_end 7)", _diamond),
    "shock": ("modified split circle with a depth jump between edges (t_end 4)", _shock),
    "tree": ("32-edge tree with loops, Riemann data on E1", lambda n: _tree(n, False)),
    "tree_lumped": ("tree with its lower half lumped", lambda n: _tree(n, True)),
    "wb_b1": ("lake at rest with a surface bump over a linear bottom, E2 lumped", lambda n: _well_balanced("b1", n)),
    "wb_b2": ("lake at rest over a quadratic bottom, E2 lumped", lambda n: _well_balanced("b2", n)),
    "wb_b3": ("lake at rest over a sinusoidal bottom, E2 lumped", lambda n: _well_balanced("b3", n)),
}


def list_cases() -> dict:
    return {k: v[0] for k, v in CASES.items()}


def builtin_case(name: str, cells: int = 100, order: int | None = None, solver: str | None = None) -> NetworkConfig:
    """Configuration of a built-in network, ``cells`` per 25 m edge."""
    if name not in CASES:
        raise KeyError(f"unknown case {name!r}; available: {', '.join(CASES)}")
    cfg = CASES[name][1](int(cells))
    if order is not None:
        cfg.run.order = int(order)
    if solver is not None:
        cfg.run.solver = solver
    return cfg
