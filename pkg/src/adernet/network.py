"""Network topology, per-edge fields and the vertex-frame orientation convention."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .junction import CouplingSpec, make_coupling
from .profiles import Bottom, cell_averages, make_bottom, make_profile
from .swe import SWE, InadmissibleState

__all__ = [
    "Edge",
    "Vertex",
    "EndpointFrame",
    "Network",
    "NetworkError",
    "MODELS",
    "to_vertex_frame",
    "build_network",
]

MODELS = {"swe": SWE}


class NetworkError(ValueError):
    """Invalid topology or initial data."""


@dataclass(frozen=True)
class EndpointFrame:
    """Orientation of one edge seen from a vertex; ``mirror`` when its x = L end attaches."""

    edge_id: str
    mirror: bool

    @classmethod
    def of(cls, edge_id: str, end: str) -> "EndpointFrame":
        if end not in ("left", "right"):
            raise NetworkError(f"edge end must be 'left' or 'right', got {end!r}")
        return cls(edge_id, end == "right")


def to_vertex_frame(u, frame: EndpointFrame, spatial: bool = False) -> np.ndarray:
    """Express a state (or jet) in the outward frame of ``frame``.

    States and time jets only change the sign of the discharge.  With
    ``spatial=True`` the input is an x-jet of shape ``(..., K, d)`` and odd
    derivatives additionally change sign.  The map is an involution.
    """
    out = np.array(u, dtype=float, copy=True)
    if not frame.mirror:
        return out
    out[..., 1] = -out[..., 1]
    if spatial:
        out[..., 1::2, :] = -out[..., 1::2, :]
    return out


def mirror_scalar_jet(jet, mirror: bool) -> np.ndarray:
    """Flip odd derivatives of a scalar x-jet ``(..., K)`` (e.g. the bottom)."""
    out = np.array(jet, dtype=float, copy=True)
    if mirror:
        out[..., 1::2] = -out[..., 1::2]
    return out


@dataclass
class Edge:
    id: str
    length: float
    cells: int
    averages: np.ndarray
    model: object = SWE
    model_id: str = "swe"
    bottom: Bottom | None = None
    bottom_averages: np.ndarray | None = None

    def __post_init__(self):
        if not self.length > 0:
            raise NetworkError(f"edge {self.id}: length must be positive")
        if int(self.cells) != self.cells or self.cells < 1:
            raise NetworkError(f"edge {self.id}: cell count must be a positive integer")
        self.averages = np.asarray(self.averages, dtype=float)
        if self.averages.shape != (self.cells, self.model.d):
            raise NetworkError(f"edge {self.id}: averages must have shape ({self.cells}, {self.model.d})")
        if not self.model.admissible(self.averages):
            raise NetworkError(f"edge {self.id}: inadmissible initial state")
        if self.bottom is not None and self.bottom_averages is None:
            self.bottom_averages = cell_averages(self.bottom, self.length, self.cells)

    @property
    def dx(self) -> float:
        return self.length / self.cells

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.cells) + 0.5) * self.dx

    @property
    def faces(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.cells + 1)

    def mass(self) -> float:
        return float(self.dx * np.sum(self.averages[:, 0]))


@dataclass
class Vertex:
    id: str
    endpoints: list
    coupling: CouplingSpec
    w: np.ndarray = field(default_factory=lambda: np.zeros(0))
    coupling_type: str = ""

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float).reshape(-1)
        if self.w.size != self.coupling.l:
            raise NetworkError(f"vertex {self.id}: ODE state needs {self.coupling.l} components, got {self.w.size}")
        if len(self.endpoints) != self.coupling.n:
            raise NetworkError(f"vertex {self.id}: coupling built for {self.coupling.n} edges")

    @property
    def frames(self) -> list:
        return [EndpointFrame.of(e, end) for e, end in self.endpoints]

    @property
    def degree(self) -> int:
        return len(self.endpoints)

    @property
    def l(self) -> int:
        return self.coupling.l

    def stored_mass(self) -> float:
        sm = self.coupling.stored_mass
        return 0.0 if sm is None else float(sm(self.w))


@dataclass
class Network:
    edges: dict
    vertices: dict
    lumped_edges: tuple = ()
    lumped_vertices: tuple = ()
    name: str = ""
    regions: list | None = field(default=None, repr=False)

    def __post_init__(self):
        self._owner = {}
        for v in self.vertices.values():
            for e, end in v.endpoints:
                if e not in self.edges:
                    raise NetworkError(f"vertex {v.id}: dangling endpoint on unknown edge {e!r}")
                if end not in ("left", "right"):
                    raise NetworkError(f"vertex {v.id}: edge end must be 'left' or 'right'")
                if (e, end) in self._owner:
                    raise NetworkError(f"endpoint {e}:{end} attached to both {self._owner[(e, end)]} and {v.id}")
                self._owner[(e, end)] = v.id
        for e in self.lumped_edges:
            if e not in self.edges:
                raise NetworkError(f"lumped edge {e!r} does not exist")
        for v in self.lumped_vertices:
            if v not in self.vertices:
                raise NetworkError(f"lumped vertex {v!r} does not exist")

    def owner(self, edge_id: str, end: str) -> str | None:
        """Vertex holding an edge end, or None for an external boundary."""
        return self._owner.get((edge_id, end))

    def external_ends(self) -> list:
        return [(e, end) for e in self.edges for end in ("left", "right") if (e, end) not in self._owner]

    @property
    def pde_edges(self) -> list:
        return [e for e in self.edges if e not in self.lumped_edges]

    def degrees(self) -> dict:
        return {v.id: v.degree for v in self.vertices.values()}

    def copy(self) -> "Network":
        return copy.deepcopy(self)


def build_network(config) -> Network:
    """Instantiate a :class:`Network` from a parsed configuration.

    Cell averages are integrated with Gauss-Legendre quadrature, split at any
    jumps of piecewise data.
    """
    edges = {}
    for ec in config.edges:
        if ec.id in edges:
            raise NetworkError(f"duplicate edge id {ec.id!r}")
        if not ec.length > 0:
            raise NetworkError(f"edge {ec.id}: length must be positive")
        if int(ec.cells) != ec.cells or ec.cells < 1:
            raise NetworkError(f"edge {ec.id}: cell count must be a positive integer")
        if ec.model not in MODELS:
            raise NetworkError(f"edge {ec.id}: unknown model {ec.model!r}")
        model = MODELS[ec.model]
        try:
            bottom = make_bottom(ec.bottom, ec.length)
            profile = make_profile(ec.initial, ec.length)
        except (ValueError, KeyError, TypeError) as exc:
            raise NetworkError(f"edge {ec.id}: {exc}") from exc
        avg = cell_averages(lambda x: profile(x, bottom), ec.length, ec.cells, profile.breaks)
        b_avg = None if bottom is None else cell_averages(bottom, ec.length, ec.cells)
        if not model.admissible(avg):
            raise NetworkError(f"edge {ec.id}: inadmissible initial state")
        edges[ec.id] = Edge(ec.id, float(ec.length), int(ec.cells), avg, model, ec.model, bottom, b_avg)
    vertices = {}
    for vc in config.vertices:
        if vc.id in vertices:
            raise NetworkError(f"duplicate vertex id {vc.id!r}")
        n = len(vc.endpoints)
        if n == 0:
            raise NetworkError(f"vertex {vc.id}: no endpoints")
        try:
            spec = make_coupling(vc.coupling, n, vc.params)
        except ValueError as exc:
            raise NetworkError(f"vertex {vc.id}: {exc}") from exc
        w0 = vc.w0
        if w0 is None:
            if spec.l:
                raise NetworkError(f"vertex {vc.id}: coupling {vc.coupling!r} needs an initial ODE state")
            w0 = []
        vertices[vc.id] = Vertex(vc.id, [tuple(ep) for ep in vc.endpoints], spec, np.asarray(w0, float), vc.coupling)
    lump_e = tuple(getattr(config, "lump_edges", ()) or ())
    lump_v = tuple(getattr(config, "lump_vertices", ()) or ())
    try:
        return Network(edges, vertices, lump_e, lump_v, getattr(config, "name", ""))
    except InadmissibleState as exc:  # pragma: no cover - defensive
        raise NetworkError(str(exc)) from exc
