"""Junction Riemann solvers and built-in coupling conditions.

All states handed to this module live in the vertex frame, where every
attached edge points away from the vertex.  A coupling is the pair
``(phi, F)``: ``phi`` returns the ``c`` algebraic residuals and ``F`` the
``l`` right-hand sides of the junction ODE.  Both receive a list of per-edge
component tuples ``(h, q)`` and a list of ODE components, and must be written
with ordinary operators so that they can be evaluated on
:class:`adernet.jets.Series`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .jets import Algebra, Series, ck_transform
from .swe import SWE, InadmissibleState, SonicState
from .tableau import ButcherTableau

__all__ = [
    "CouplingSpec",
    "JunctionSolution",
    "JunctionError",
    "NoConvergence",
    "SingularCouplingJacobian",
    "SingularDerivativeSystem",
    "StateLeftSubcritical",
    "coupling_equal_heights",
    "coupling_manhole",
    "make_coupling",
    "evaluate",
    "gradients",
    "derivative_matrix",
    "solve_classical",
    "solve_tt",
    "solve_heoc",
]

NEWTON_TOL = 1e-12
NEWTON_MAXIT = 50
SINGULAR_TOL = 1e-12


class JunctionError(RuntimeError):
    """Base class for junction solve failures; carries the location when known."""

    def __init__(self, msg: str, vertex: str | None = None, stage: int | None = None):
        super().__init__(msg)
        self.vertex = vertex
        self.stage = stage

    def __str__(self):
        where = []
        if self.vertex is not None:
            where.append(f"vertex {self.vertex}")
        if self.stage is not None:
            where.append(f"stage {self.stage}")
        base = super().__str__()
        return f"{base} ({', '.join(where)})" if where else base


class NoConvergence(JunctionError):
    pass


class SingularCouplingJacobian(JunctionError):
    pass


class SingularDerivativeSystem(JunctionError):
    pass


class StateLeftSubcritical(JunctionError):
    pass


@dataclass(frozen=True)
class CouplingSpec:
    """Coupling conditions at a vertex with ``n`` edges."""

    name: str
    n: int
    c: int
    l: int
    phi: Callable
    F: Callable | None = None
    params: dict = field(default_factory=dict)
    stored_mass: Callable | None = None

    def residual(self, ug, w) -> np.ndarray:
        return evaluate(self.phi, ug, w, self.c)

    def rhs(self, ug, w) -> np.ndarray:
        if self.l == 0:
            return np.zeros(0)
        return evaluate(self.F, ug, w, self.l)


def _split(ug, w):
    us = [(ug[i, 0], ug[i, 1]) for i in range(ug.shape[0])]
    return us, [w[j] for j in range(len(w))]


def evaluate(fn, ug, w, size: int) -> np.ndarray:
    """Numeric value of a coupling function at Godunov states ``ug`` (n, d)."""
    ug = np.asarray(ug, dtype=float)
    w = np.asarray(w, dtype=float).reshape(-1)
    us, ws = _split(ug, w)
    out = fn(us, ws)
    res = np.array([float(np.asarray(v)) for v in out])
    if res.size != size:
        raise ValueError(f"coupling function returned {res.size} values, expected {size}")
    return res


def gradients(fn, ug, w, size: int):
    """Value and first derivatives of a coupling function by forward seeding.

    Returns ``(value (size,), d/du (size, n, d), d/dw (size, l))``.
    """
    ug = np.asarray(ug, dtype=float)
    w = np.asarray(w, dtype=float).reshape(-1)
    n, d = ug.shape
    l = w.size
    m = n * d + l
    alg = Algebra.get(1, 2)

    def seeded(value, k):
        c = np.zeros((m, 2))
        c[:, 0] = value
        c[k, 1] = 1.0
        return Series(c, alg)

    us = [tuple(seeded(ug[i, j], i * d + j) for j in range(d)) for i in range(n)]
    ws = [seeded(w[j], n * d + j) for j in range(l)]
    out = fn(us, ws)
    if len(out) != size:
        raise ValueError(f"coupling function returned {len(out)} values, expected {size}")
    val = np.zeros(size)
    jac = np.zeros((size, m))
    for k, v in enumerate(out):
        if isinstance(v, Series):
            val[k] = v.c[0, 0]
            jac[k] = v.c[:, 1]
        else:
            val[k] = float(np.asarray(v).reshape(-1)[0])
    return val, jac[:, : n * d].reshape(size, n, d), jac[:, n * d :]


# -- built-in couplings ----------------------------------------------------------


def coupling_equal_heights(n: int, model=SWE) -> CouplingSpec:
    """Mass conservation plus equal depths; ``n == 1`` is a closed dead end."""
    if n < 1:
        raise ValueError("a coupling needs at least one edge")

    def phi(us, w):
        out = [sum_terms([u[1] for u in us])]
        out += [us[0][0] - us[i][0] for i in range(1, n)]
        return out

    return CouplingSpec("equal_heights", n, n, 0, phi, None, {})


def coupling_manhole(n: int, A_m: float = 1.0, model=SWE) -> CouplingSpec:
    """Storage tank with state ``w = (h_m, Q_m)`` joined through equal hydraulic heads."""
    if n < 1:
        raise ValueError("a coupling needs at least one edge")
    if not A_m > 0:
        raise ValueError("tank area A_m must be positive")
    g = model.g

    def head(u):
        h, q = u
        return q * q / (2.0 * g * h * h) + h

    def phi(us, w):
        out = [sum_terms([u[1] for u in us]) + w[1]]
        h0 = head(us[0])
        out += [h0 - head(us[i]) for i in range(1, n)]
        return out

    def F(us, w):
        hm, Qm = w
        tank_head = Qm * Qm / (2.0 * g * A_m * A_m) + hm
        return [Qm / A_m, (g * A_m / hm) * (head(us[0]) - tank_head)]

    def stored_mass(w):
        return A_m * float(w[0])

    return CouplingSpec("manhole", n, n, 2, phi, F, {"A_m": A_m}, stored_mass)


def sum_terms(terms):
    out = terms[0]
    for t in terms[1:]:
        out = out + t
    return out


def make_coupling(name: str, n: int, params: dict | None = None, model=SWE) -> CouplingSpec:
    params = dict(params or {})
    if name in ("equal_heights", "transmission"):
        if params:
            raise ValueError(f"coupling {name!r} takes no parameters, got {sorted(params)}")
        if name == "transmission" and n != 2:
            raise ValueError("transmission coupling joins exactly two edges")
        return coupling_equal_heights(n, model)
    if name == "manhole":
        unknown = set(params) - {"A_m"}
        if unknown:
            raise ValueError(f"unknown manhole parameters {sorted(unknown)}")
        return coupling_manhole(n, float(params.get("A_m", 1.0)), model)
    raise ValueError(f"unknown coupling type {name!r}")


# -- classical junction problem --------------------------------------------------


def _check_regime(u_r, spec: CouplingSpec, model, stage=None):
    u_r = np.asarray(u_r, dtype=float)
    if u_r.shape != (spec.n, model.d):
        raise ValueError(f"expected {spec.n} edge states of dimension {model.d}, got shape {u_r.shape}")
    try:
        model.check(u_r)
        _, _, c = model.eigen(u_r)
    except (InadmissibleState, SonicState) as exc:
        raise StateLeftSubcritical(str(exc), stage=stage) from exc
    if np.any(c != 1):
        raise StateLeftSubcritical("edge state is not subcritical", stage=stage)
    if int(np.sum(c)) != spec.c:
        raise ValueError(f"coupling {spec.name} has {spec.c} conditions but edges carry {int(np.sum(c))} outgoing waves")
    return u_r


def derivative_matrix(ug, w, spec: CouplingSpec, model=SWE) -> np.ndarray:
    """Matrix ``[grad_{u^i} phi . R^{+,i}]`` whose regularity makes the junction well posed."""
    _, Ju, _ = gradients(spec.phi, ug, w, spec.c)
    Rp = model.linear_lax_basis(ug)[..., 0]
    return np.einsum("kij,ij->ki", Ju, Rp)


def _singular(M: np.ndarray) -> bool:
    scale = np.prod(np.linalg.norm(M, axis=1))
    return not np.isfinite(scale) or scale == 0.0 or abs(np.linalg.det(M)) < SINGULAR_TOL * scale


def solve_classical(
    u_r,
    w0,
    spec: CouplingSpec,
    model=SWE,
    tol: float = NEWTON_TOL,
    maxit: int = NEWTON_MAXIT,
    return_info: bool = False,
    stage: int | None = None,
):
    """Godunov states of the classical junction Riemann problem.

    Newton's method on the depths ``xi`` of the outgoing Lax curves, started
    from the right states.  Converged once ``max|phi| <= tol``; one extra
    Newton step then polishes the root.

    Returns
    -------
    ndarray (n, d), and the Newton iteration count if ``return_info``.
    """
    u_r = _check_regime(u_r, spec, model, stage)
    w0 = np.asarray(w0, dtype=float).reshape(-1)
    if w0.size != spec.l:
        raise ValueError(f"coupling {spec.name} expects an ODE state of length {spec.l}")

    def residual(xi):
        ug = model.lax_curve(xi, u_r)
        return ug, evaluate(spec.phi, ug, w0, spec.c)

    def jacobian(xi, ug):
        _, Ju, _ = gradients(spec.phi, ug, w0, spec.c)
        dL = model.lax_curve_jacobian(xi, u_r)
        J = np.einsum("kij,ij->ki", Ju, dL)
        if _singular(J):
            raise SingularCouplingJacobian("coupling Jacobian is singular", stage=stage)
        return J

    xi = u_r[:, 0].copy()
    ug, r = residual(xi)
    norm = np.max(np.abs(r))
    it = 0
    while norm > tol:
        if it >= maxit:
            raise NoConvergence(f"Newton did not converge in {maxit} iterations (|phi| = {norm:.3e})", stage=stage)
        delta = np.linalg.solve(jacobian(xi, ug), -r)
        while np.any(xi + delta <= 0.0):
            delta = 0.5 * delta
        xi_new = xi + delta
        ug_new, r_new = residual(xi_new)
        norm_new = np.max(np.abs(r_new))
        if not norm_new <= norm:
            xi_new = xi + 0.5 * delta
            ug_new, r_new = residual(xi_new)
            norm_new = np.max(np.abs(r_new))
        xi, ug, r, norm = xi_new, ug_new, r_new, norm_new
        it += 1
        if norm <= tol:
            # polish: rounding-level residual costs one more solve
            delta = np.linalg.solve(jacobian(xi, ug), -r)
            if np.all(xi + delta > 0.0):
                ug_p, r_p = residual(xi + delta)
                if np.max(np.abs(r_p)) <= norm:
                    ug = ug_p
            break
    try:
        _, _, c = model.eigen(ug)
    except (InadmissibleState, SonicState) as exc:
        raise StateLeftSubcritical(str(exc), stage=stage) from exc
    if np.any(c != 1):
        raise StateLeftSubcritical("Godunov state left the subcritical regime", stage=stage)
    if it and _singular(derivative_matrix(ug, w0, spec, model)):
        raise SingularCouplingJacobian("derivative system is singular at the Godunov states", stage=stage)
    return (ug, it) if return_info else ug


# -- generalized problems --------------------------------------------------------


@dataclass
class JunctionSolution:
    """Outcome of one generalized junction solve over ``[0, dt]`` (vertex frame).

    For the Taylor cascade ``godunov`` holds raw time derivatives ``(n, K, d)``
    and ``w_jet`` the raw derivatives of the ODE state ``(l, K+1)``.  For the
    Runge-Kutta variant ``godunov`` holds the stage states ``(s, n, d)`` and
    ``stage_w``/``stage_slopes`` the ODE stage values and slopes.
    """

    solver: str
    godunov: np.ndarray
    flux: np.ndarray
    w_new: np.ndarray
    dt: float
    w_jet: np.ndarray | None = None
    stage_w: np.ndarray | None = None
    stage_slopes: np.ndarray | None = None
    A: np.ndarray | None = None
    newton_iterations: int = 0

    def godunov_at(self, t: float) -> np.ndarray:
        """Taylor evaluation of the Godunov states (Taylor cascade only)."""
        if self.solver != "tt":
            raise ValueError("time polynomial only available from the Taylor cascade")
        K = self.godunov.shape[1]
        fac = np.array([t**k / math.factorial(k) for k in range(K)])
        return np.einsum("nkd,k->nd", self.godunov, fac)


def _anchor_ck(sjets, ug0, model, bottom):
    base = np.array(sjets, dtype=float, copy=True)
    base[:, 0, :] = ug0
    return ck_transform(base, model, bottom)


def _time_average(coeffs: np.ndarray, dt: float) -> np.ndarray:
    """Mean over ``[0, dt]`` of a polynomial with normalized coefficients on the last axis."""
    k = np.arange(coeffs.shape[-1])
    return coeffs @ (dt**k / (k + 1.0))


def solve_tt(sjets, w0, spec: CouplingSpec, K: int, dt: float, model=SWE, bottom=None) -> JunctionSolution:
    """Taylor cascade: one nonlinear solve plus a linear system per time derivative.

    Parameters
    ----------
    sjets : ndarray (n, >=K, d)
        Raw spatial derivatives of each edge's data at the vertex, vertex frame.
    w0 : ODE state at the start of the step.
    K : scheme order.
    dt : step size used for the flux average and the Taylor ODE update.
    bottom : ndarray (n, K), optional
        Raw spatial derivatives of the bottom at the vertex, vertex frame.
    """
    sjets = np.asarray(sjets, dtype=float)[:, :K, :]
    n, _, d = sjets.shape
    w0 = np.asarray(w0, dtype=float).reshape(-1)
    l = spec.l
    ug0, its = solve_classical(sjets[:, 0, :], w0, spec, model, return_info=True)
    T = _anchor_ck(sjets, ug0, model, None if bottom is None else np.asarray(bottom)[:, :K])

    _, Ju, _ = gradients(spec.phi, ug0, w0, spec.c)
    Rp = model.linear_lax_basis(ug0)[..., 0]
    A = np.einsum("kij,ij->ki", Ju, Rp)
    if K > 1 and _singular(A):
        raise SingularDerivativeSystem("derivative system of the Taylor cascade is singular")

    alg = Algebra.get(1, K + 1)
    U = np.zeros((n, d, K + 1))
    U[:, :, 0] = ug0
    W = np.zeros((l, K + 1))
    W[:, 0] = w0

    def jets():
        us = [tuple(Series(U[i, j], alg) for j in range(d)) for i in range(n)]
        return us, [Series(W[j], alg) for j in range(l)]

    def coef(v, k):
        return v.c[k] if isinstance(v, Series) else (float(v) if k == 0 else 0.0)

    for k in range(1, K):
        us, ws = jets()
        if l:
            Fj = spec.F(us, ws)
            W[:, k] = [coef(f, k - 1) / k for f in Fj]
            us, ws = jets()
        psi = np.array([coef(p, k) for p in spec.phi(us, ws)])
        Tk = T[:, k, :] / math.factorial(k)
        xi = np.linalg.solve(A, -(np.einsum("kij,ij->k", Ju, Tk) + psi))
        U[:, :, k] = Tk + Rp * xi[:, None]
    if l:
        us, ws = jets()
        Fj = spec.F(us, ws)
        W[:, K] = [coef(f, K - 1) / K for f in Fj]

    alg_f = Algebra.get(1, K)
    us = [tuple(Series(U[i, j, :K].copy(), alg_f) for j in range(d)) for i in range(n)]
    flux = np.zeros((n, d))
    for i in range(n):
        fi = model.flux_terms(us[i])
        for j in range(d):
            fc = fi[j].c if isinstance(fi[j], Series) else np.r_[float(fi[j]), np.zeros(K - 1)]
            flux[i, j] = _time_average(fc, dt)
    w_new = W @ (dt ** np.arange(K + 1)) if l else np.zeros(0)
    kf = np.array([math.factorial(k) for k in range(K + 1)], dtype=float)
    return JunctionSolution(
        solver="tt",
        godunov=U[:, :, :K].transpose(0, 2, 1) * kf[None, :K, None],
        flux=flux,
        w_new=w_new,
        dt=dt,
        w_jet=W * kf,
        A=A,
        newton_iterations=its,
    )


def time_polynomial(T: np.ndarray, t: float) -> np.ndarray:
    """Evaluate raw time derivatives ``(..., K, d)`` as a Taylor polynomial at ``t``."""
    K = T.shape[-2]
    fac = np.array([t**k / math.factorial(k) for k in range(K)])
    return np.einsum("...kd,k->...d", T, fac)


def solve_heoc(
    sjets, w0, spec: CouplingSpec, dt: float, tableau: ButcherTableau, model=SWE, bottom=None, K: int | None = None
) -> JunctionSolution:
    """Runge-Kutta variant: a classical junction solve at every stage time."""
    sjets = np.asarray(sjets, dtype=float)
    K = sjets.shape[1] if K is None else K
    sjets = sjets[:, :K, :]
    n, _, d = sjets.shape
    if not dt > 0:
        raise ValueError("time step must be positive")
    w0 = np.asarray(w0, dtype=float).reshape(-1)
    l = spec.l
    ug0, its = solve_classical(sjets[:, 0, :], w0, spec, model, return_info=True, stage=0)
    T = _anchor_ck(sjets, ug0, model, None if bottom is None else np.asarray(bottom)[:, :K])
    s = tableau.stages
    states = np.zeros((s, n, d))
    ws = np.zeros((s, l))
    slopes = np.zeros((s, l))
    for st in range(s):
        ws[st] = w0 + dt * (tableau.A[st, :st] @ slopes[:st]) if l else w0
        ur = time_polynomial(T, tableau.c[st] * dt)
        if st == 0 and tableau.c[0] == 0.0:
            ug = ug0
        else:
            ug, k_it = solve_classical(ur, ws[st], spec, model, return_info=True, stage=st)
            its += k_it
        states[st] = ug
        if l:
            slopes[st] = spec.rhs(ug, ws[st])
    flux = np.einsum("s,snd->nd", tableau.b, model.flux(states))
    w_new = w0 + dt * (tableau.b @ slopes) if l else np.zeros(0)
    return JunctionSolution(
        solver="heoc",
        godunov=states,
        flux=flux,
        w_new=w_new,
        dt=dt,
        stage_w=ws,
        stage_slopes=slopes,
        newton_iterations=its,
    )
