"""Simulation runs, error norms, reference solutions and convergence tables."""

from __future__ import annotations

import csv
import functools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cases import builtin_case
from .config import NetworkConfig
from .engine import Simulation
from .network import Network, build_network

__all__ = [
    "RunResult",
    "ErrorReport",
    "simulate",
    "run",
    "norms",
    "eoc",
    "agglomerate",
    "reference_solution",
    "convergence_study",
    "write_csv",
    "REFERENCE_ORDER",
    "REFERENCE_CELLS",
]

REFERENCE_ORDER = 6
REFERENCE_CELLS = 800
SIG = "%.17g"


@dataclass
class RunResult:
    """Final network state plus ODE traces sampled on a uniform time grid.

    ``traces`` maps a vertex id to an array ``(len(times), l)``.  Lumped
    edges contribute their averaged state under the key ``"<edge>:lumped"``.
    """

    network: Network | None
    times: np.ndarray
    traces: dict
    snapshots: dict = field(default_factory=dict)
    steps: int = 0
    newton_iterations: int = 0
    averages: dict = field(default_factory=dict)
    dx: dict = field(default_factory=dict)
    pde_edges: list = field(default_factory=list)

    def __post_init__(self):
        if self.network is not None and not self.averages:
            self.averages = {eid: e.averages.copy() for eid, e in self.network.edges.items()}
            self.dx = {eid: e.dx for eid, e in self.network.edges.items()}
            self.pde_edges = list(self.network.pde_edges)

    def __getstate__(self):
        # coupling closures do not pickle; the arrays are enough for error norms
        state = dict(self.__dict__)
        state["network"] = None
        return state


def _ode_state(net: Network) -> dict:
    out = {vid: v.w.copy() for vid, v in net.vertices.items() if v.l}
    for r in net.regions or []:
        for le in r.edges:
            out[f"{le.id}:lumped"] = np.array(le.U, dtype=float)
    return out


def simulate(config: NetworkConfig, record_times=None) -> RunResult:
    """Run ``config`` to ``run.t_end``.

    Steps are clipped so that every ODE sample time ``k * t_end / samples`` and
    every time in ``record_times`` (default ``run.output_times``) is hit
    exactly.  Edge snapshots ``(N, d)`` are stored for the record times.
    """
    rc = config.run
    net = build_network(config)
    sim = Simulation(net, rc.order, rc.solver, rc.cfl, rc.mode)
    t_end = float(rc.t_end)
    samples = np.linspace(0.0, t_end, rc.samples + 1) if t_end > 0 else np.zeros(1)
    record = sorted({float(t) for t in (rc.output_times if record_times is None else record_times)})
    if any(t < 0 or t > t_end * (1 + 1e-14) for t in record):
        raise ValueError("output times must lie in [0, t_end]")
    stops = sorted(set(samples.tolist()) | set(record))
    traces = {k: [] for k in _ode_state(net)}
    snaps = {}
    sample_set = set(samples.tolist())
    record_set = set(record)
    for t in stops:
        sim.advance(t)
        if t in sample_set:
            for k, w in _ode_state(net).items():
                traces[k].append(w)
        if t in record_set:
            snaps[t] = {eid: e.averages.copy() for eid, e in net.edges.items()}
    return RunResult(
        net,
        samples,
        {k: np.array(v).reshape(len(samples), -1) for k, v in traces.items()},
        snaps,
        sim.steps,
        sim.newton_iterations,
    )


def _write(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([SIG % float(v) if isinstance(v, (float, np.floating)) else v for v in r])


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _write(path, header, rows)
    return path


def run(config: NetworkConfig, outdir) -> list:
    """Simulate and write CSV files; returns the written paths.

    Per edge and output time: ``<name>_<edge>_t<k>.csv`` with columns
    ``x, h, q`` (and ``b`` when the edge has a bottom).  Per vertex with
    ODE state: ``<name>_<vertex>_ode.csv`` with ``t, w0, w1, ...``.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    times = list(config.run.output_times) or [float(config.run.t_end)]
    res = simulate(config, times)
    name = config.name or "run"
    paths = []
    for k, t in enumerate(sorted(res.snapshots)):
        for eid, avg in res.snapshots[t].items():
            e = res.network.edges[eid]
            cols = [e.centers, avg[:, 0], avg[:, 1]]
            header = ["x", "h", "q"]
            if e.bottom_averages is not None:
                cols.append(e.bottom_averages)
                header.append("b")
            p = outdir / f"{name}_{eid}_t{k}.csv"
            _write(p, header, zip(*[c.astype(float) for c in cols]))
            paths.append(p)
    for key, tr in res.traces.items():
        p = outdir / f"{name}_{key.replace(':', '_')}_ode.csv"
        _write(p, ["t"] + [f"w{j}" for j in range(tr.shape[1])], ([t, *w] for t, w in zip(res.times, tr)))
        paths.append(p)
    return paths


def agglomerate(averages: np.ndarray, cells: int) -> np.ndarray:
    """Exact cell averages of a fine grid on a coarser grid with ``cells`` cells."""
    averages = np.asarray(averages, dtype=float)
    n = averages.shape[0]
    if n % cells:
        raise ValueError(f"reference grid of {n} cells does not nest {cells} cells")
    return averages.reshape((cells, n // cells) + averages.shape[1:]).mean(axis=1)


def norms(numerical: RunResult, reference: RunResult, component: int = 0, edges=None):
    """Errors ``(L1, Linf, L2_ode)`` of ``numerical`` against ``reference``.

    ``L1 = sum_edges dx sum_cells |u - u_ref|`` and ``Linf`` the largest cell
    error, both on ``component`` (depth by default) over the PDE edges.  The
    ODE error is ``sqrt(sum_n dt_n |w(t_n) - w_ref(t_n)|^2)`` on the reference
    trace times, with the numerical trace linearly interpolated; ``|.|`` is
    the Euclidean norm over all ODE components of the network.
    """
    ids = numerical.pde_edges if edges is None else list(edges)
    l1, linf = 0.0, 0.0
    for eid in ids:
        u = numerical.averages[eid]
        r = agglomerate(reference.averages[eid], u.shape[0])
        err = np.abs(u[:, component] - r[:, component])
        l1 += numerical.dx[eid] * float(err.sum())
        linf = max(linf, float(err.max()) if err.size else 0.0)
    tr = reference.times
    sq = np.zeros(tr.size)
    for key, wref in reference.traces.items():
        w = numerical.traces[key]
        for j in range(wref.shape[1]):
            wi = np.interp(tr, numerical.times, w[:, j]) if numerical.times.size > 1 else w[:, j]
            sq += (wi - wref[:, j]) ** 2
    l2 = math.sqrt(float(np.sum(np.diff(tr) * sq[1:]))) if tr.size > 1 else 0.0
    return l1, linf, l2


def eoc(e_coarse: float, e_fine: float, dx_coarse: float, dx_fine: float) -> float:
    """Experimental order ``log(e_c / e_f) / log(dx_c / dx_f)``."""
    if e_coarse <= 0 or e_fine <= 0:
        return math.nan
    return math.log(e_coarse / e_fine) / math.log(dx_coarse / dx_fine)


def _case_config(case, cells, order, solver) -> NetworkConfig:
    cfg = builtin_case(case, cells) if isinstance(case, str) else case.with_cells(cells)
    return cfg.with_run(order=order, solver=solver)


@functools.lru_cache(maxsize=8)
def _cached_reference(case: str, order: int, cells: int, solver: str) -> RunResult:
    return simulate(_case_config(case, cells, order, solver))


def reference_solution(case, order: int = REFERENCE_ORDER, cells: int = REFERENCE_CELLS, solver: str = "tt") -> RunResult:
    """High-order fine-grid run used as the exact solution (cached per process for built-in cases)."""
    if isinstance(case, str):
        return _cached_reference(case, order, cells, solver)
    return simulate(_case_config(case, cells, order, solver))


@dataclass
class ErrorReport:
    """Errors and rates of one convergence study.

    ``rows`` holds one dict per (order, N) with keys ``order, N, dx, steps,
    L1, Linf, L1_q, Linf_q, L2_ode`` and the rates ``O_L1, O_Linf, O_L1_q,
    O_Linf_q, O_L2_ode`` against the previous grid of the same order.
    """

    case: str
    solver: str
    rows: list = field(default_factory=list)

    COLUMNS = ("order", "N", "dx", "steps", "L1", "O_L1", "Linf", "O_Linf",
               "L1_q", "O_L1_q", "Linf_q", "O_Linf_q", "L2_ode", "O_L2_ode")  # fmt: skip

    def row(self, order: int, N: int) -> dict:
        for r in self.rows:
            if r["order"] == order and r["N"] == N:
                return r
        raise KeyError((order, N))

    def rate(self, order: int, key: str, N_fine: int) -> float:
        return self.row(order, N_fine)["O_" + key]

    def write(self, path) -> Path:
        rows = ([r.get(c, math.nan) for c in self.COLUMNS] for r in self.rows)
        return write_csv(path, self.COLUMNS, rows)


def _study_job(args):
    case, order, N, solver = args
    return simulate(_case_config(case, N, order, solver))


def convergence_study(case, solver: str, orders, grids, reference: RunResult | None = None,
                      ref_order: int = REFERENCE_ORDER, ref_cells: int = REFERENCE_CELLS,
                      ref_solver: str | None = None, jobs: int | None = None) -> ErrorReport:
    """Errors of ``case`` for every order and grid against a reference run.

    ``grids`` are cell counts per edge of the base length; every grid must
    nest in the reference grid.  ``jobs > 1`` runs the grids in worker
    processes (default from ``ADERNET_JOBS``, else serial).
    """
    grids = sorted(int(n) for n in grids)
    orders = [int(k) for k in orders]
    if reference is None:
        reference = reference_solution(case, ref_order, ref_cells, ref_solver or solver)
    jobs = int(os.environ.get("ADERNET_JOBS", "1")) if jobs is None else int(jobs)
    work = [(case, k, N, solver) for k in orders for N in grids]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_study_job, work))
    else:
        results = [_study_job(w) for w in work]
    name = case if isinstance(case, str) else case.name
    report = ErrorReport(name, solver)
    prev = {}
    for (_, k, N, _), res in zip(work, results):
        l1, linf, l2 = norms(res, reference, 0)
        l1q, linfq, _ = norms(res, reference, 1)
        dx = min(res.dx.values())
        row = {"order": k, "N": N, "dx": dx, "steps": res.steps, "L1": l1, "Linf": linf,
               "L1_q": l1q, "Linf_q": linfq, "L2_ode": l2}  # fmt: skip
        p = prev.get(k)
        for key in ("L1", "Linf", "L1_q", "Linf_q", "L2_ode"):
            row["O_" + key] = eoc(p[key], row[key], p["dx"], dx) if p else math.nan
        prev[k] = row
        report.rows.append(row)
    return report
