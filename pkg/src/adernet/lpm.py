"""Lumped parameter models: sub-networks collapsed to one composite ODE.

Each lumped edge keeps only its mean state ``U``; the vertices touching a
lumped edge keep their own ODE states.  The region advances with an explicit
Runge-Kutta tableau.  At every stage each region vertex solves a classical
junction problem whose anchors are the current stage values of the lumped
edges and the time polynomials of any attached PDE edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .junction import JunctionError, solve_classical, time_polynomial, _anchor_ck
from .network import EndpointFrame, Network, NetworkError, to_vertex_frame
from .tableau import ButcherTableau

__all__ = [
    "LumpedEdge",
    "LumpedRegion",
    "lump_region",
    "lump_regions",
    "hydrostatic_reconstruct",
    "surface_anchor",
    "lumped_source",
    "lpm_stage_solve",
    "RegionStep",
]


def hydrostatic_reconstruct(U, b_here: float, b_neighbor: float) -> np.ndarray:
    """Interface state with depth ``max(0, h + b_here - max(b_here, b_neighbor))``; discharge kept."""
    out = np.array(U, dtype=float, copy=True)
    out[..., 0] = np.maximum(0.0, out[..., 0] + b_here - np.maximum(b_here, b_neighbor))
    return out


def surface_anchor(U, b_mid: float, b_end: float) -> np.ndarray:
    """End state of a lumped edge: free surface ``U_h + b_mid`` carried to the end bottom.

    Agrees with :func:`hydrostatic_reconstruct` whenever ``b_end >= b_mid``.
    """
    out = np.array(U, dtype=float, copy=True)
    out[..., 0] = np.maximum(0.0, out[..., 0] + b_mid - b_end)
    return out


@dataclass
class LumpedEdge:
    id: str
    length: float
    U: np.ndarray
    b0: float = 0.0
    bL: float = 0.0

    @property
    def b_mid(self) -> float:
        return 0.5 * (self.b0 + self.bL)

    def anchor(self, U, end: str) -> np.ndarray:
        """Vertex-frame anchor state at ``end`` for the lumped state ``U``."""
        b_end = self.b0 if end == "left" else self.bL
        st = surface_anchor(U, self.b_mid, b_end)
        return to_vertex_frame(st, EndpointFrame.of(self.id, end))


def lumped_source(U, edge: LumpedEdge, g: float) -> np.ndarray:
    """Linearized bottom source ``(0, -g U_h (b(L) - b(0)) / L)``."""
    return np.array([0.0, -g * U[0] * (edge.bL - edge.b0) / edge.length])


@dataclass
class LumpedRegion:
    """Connected set of lumped edges with the vertices they touch.

    ``boundary`` lists the PDE endpoints ``(vertex_id, edge_id, end)``
    attached to region vertices.
    """

    edges: list
    vertices: list
    boundary: list = field(default_factory=list)

    @property
    def edge_ids(self) -> list:
        return [e.id for e in self.edges]

    def dimension(self, network: Network) -> int:
        return sum(e.U.size for e in self.edges) + sum(network.vertices[v].l for v in self.vertices)

    def composite(self, network: Network) -> np.ndarray:
        parts = [e.U for e in self.edges] + [network.vertices[v].w for v in self.vertices]
        return np.concatenate(parts) if parts else np.zeros(0)

    def mass(self) -> float:
        return float(sum(e.length * e.U[0] for e in self.edges))


def _components(edge_ids, network: Network, extra_vertices=()):
    """Connected components of the lumped selection (edges joined through shared vertices)."""
    parent = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        parent[find(a)] = find(b)

    for e in edge_ids:
        find(("e", e))
        for end in ("left", "right"):
            v = network.owner(e, end)
            if v is None:
                raise NetworkError(f"lumped edge {e} has an external end; lumped edges must end at vertices")
            union(("e", e), ("v", v))
    for v in extra_vertices:
        find(("v", v))
    groups = {}
    for node in list(parent):
        groups.setdefault(find(node), []).append(node)
    return list(groups.values())


def _make_region(network: Network, nodes) -> LumpedRegion:
    edges = []
    order_e = [e for e in network.edges if ("e", e) in nodes]
    order_v = [v for v in network.vertices if ("v", v) in nodes]
    for eid in order_e:
        edge = network.edges[eid]
        U = edge.averages.mean(axis=0).copy()
        b0 = bL = 0.0
        if edge.bottom is not None:
            b0 = float(edge.bottom(0.0))
            bL = float(edge.bottom(edge.length))
            U[0] += float(edge.bottom_averages.mean()) - 0.5 * (b0 + bL)
        edges.append(LumpedEdge(eid, edge.length, U, b0, bL))
    lumped = set(order_e)
    boundary = []
    for vid in order_v:
        for e, end in network.vertices[vid].endpoints:
            if e not in lumped:
                boundary.append((vid, e, end))
    return LumpedRegion(edges, order_v, boundary)


def lump_region(network: Network, edge_ids, extra_vertices=()) -> LumpedRegion:
    """Collapse a connected selection of edges (plus their vertices) into one region."""
    edge_ids = list(edge_ids)
    if not edge_ids and not extra_vertices:
        raise NetworkError("empty lumping selection")
    for e in edge_ids:
        if e not in network.edges:
            raise NetworkError(f"unknown edge {e!r}")
    comps = _components(edge_ids, network, extra_vertices)
    if len(comps) != 1:
        raise NetworkError(f"lumping selection is disconnected ({len(comps)} components)")
    return _make_region(network, set(comps[0]))


def lump_regions(network: Network, edge_ids, extra_vertices=()) -> list:
    """Split a selection into its connected regions."""
    return [_make_region(network, set(c)) for c in _components(list(edge_ids), network, extra_vertices)]


@dataclass
class RegionStep:
    """Outcome of one region step: new lumped states, vertex ODE states and PDE-end fluxes."""

    U: dict
    w: dict
    flux: dict
    stage_states: dict
    newton_iterations: int = 0


def lpm_stage_solve(
    region: LumpedRegion,
    network: Network,
    pde_jets: dict,
    dt: float,
    tableau: ButcherTableau,
    model,
    bottom_jets: dict | None = None,
) -> RegionStep:
    """Advance a lumped region over one step.

    Parameters
    ----------
    pde_jets : dict
        ``(edge_id, end) -> (K, d)`` raw spatial jets of the PDE edges at region
        vertices, already in the vertex frame.
    bottom_jets : dict, optional
        Matching vertex-frame bottom jets ``(K,)``.
    """
    bottom_jets = bottom_jets or {}
    g = model.g
    ledges = {e.id: e for e in region.edges}
    s = tableau.stages
    U0 = {e.id: e.U.copy() for e in region.edges}
    w0 = {v: network.vertices[v].w.copy() for v in region.vertices}
    kU = {e: np.zeros((s, 2)) for e in ledges}
    kw = {v: np.zeros((s, network.vertices[v].l)) for v in region.vertices}
    states = {}
    T = {}
    its = 0

    def stage_value(base, slopes, st):
        return base + dt * (tableau.A[st, :st] @ slopes[:st]) if st else base.copy()

    for st in range(s):
        Ust = {e: stage_value(U0[e], kU[e], st) for e in ledges}
        god = {}
        for vid in region.vertices:
            vert = network.vertices[vid]
            wst = stage_value(w0[vid], kw[vid], st) if vert.l else w0[vid]
            ur = np.zeros((vert.degree, 2))
            for i, (e, end) in enumerate(vert.endpoints):
                if e in ledges:
                    ur[i] = ledges[e].anchor(Ust[e], end)
                elif st == 0:
                    ur[i] = pde_jets[(e, end)][0]
                else:
                    ur[i] = time_polynomial(T[(e, end)], tableau.c[st] * dt)
            try:
                ug, it = solve_classical(ur, wst, vert.coupling, model, return_info=True, stage=st)
            except JunctionError as exc:
                exc.vertex = vid
                raise
            its += it
            if st == 0:
                for i, (e, end) in enumerate(vert.endpoints):
                    if e not in ledges:
                        bj = bottom_jets.get((e, end))
                        T[(e, end)] = _anchor_ck(
                            pde_jets[(e, end)][None], ug[i], model, None if bj is None else np.asarray(bj)[None]
                        )[0]
            for i, (e, end) in enumerate(vert.endpoints):
                god[(e, end)] = ug[i]
                states.setdefault((e, end), np.zeros((s, 2)))[st] = ug[i]
            if vert.l:
                kw[vid][st] = vert.coupling.rhs(ug, wst)
        for e, le in ledges.items():
            ul = god[(e, "left")]
            ur_phys = to_vertex_frame(god[(e, "right")], EndpointFrame.of(e, "right"))
            fl, fr = model.flux(ul), model.flux(ur_phys)
            kU[e][st] = -(fr - fl) / le.length + lumped_source(Ust[e], le, g)
    U_new = {e: U0[e] + dt * (tableau.b @ kU[e]) for e in ledges}
    w_new = {v: (w0[v] + dt * (tableau.b @ kw[v])) if kw[v].shape[1] else w0[v] for v in region.vertices}
    flux = {}
    for vid, e, end in region.boundary:
        flux[(e, end)] = np.einsum("s,sd->d", tableau.b, model.flux(states[(e, end)]))
    return RegionStep(U_new, w_new, flux, states, its)
