"""Bottom elevations and initial-data profiles on a single edge.

Both accept the edge length so that coefficients may be given in the scaled
variable ``s = x / L`` (``variable = "s"``) or in meters (``variable = "x"``).
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Bottom", "Profile", "make_bottom", "make_profile", "hermite_coefficients", "cell_averages"]

GAUSS_POINTS = 8
_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(GAUSS_POINTS)


def _poly_derivative_table(coeffs: np.ndarray, K: int) -> list:
    out = [np.asarray(coeffs, dtype=float)]
    for _ in range(1, K):
        c = out[-1]
        out.append(c[1:] * np.arange(1, c.size) if c.size > 1 else np.zeros(1))
    return out


def _polyval(c, x):
    return np.polynomial.polynomial.polyval(x, c) if c.size else np.zeros_like(x)


@dataclass(frozen=True)
class Bottom:
    """Elevation ``b = sum_k poly[k] s^k + sum amp * sin(freq * s + phase)`` with ``s = x / scale``."""

    poly: tuple = ()
    sines: tuple = ()
    scale: float = 1.0

    def __call__(self, x):
        return self.jet(x, 1)[..., 0]

    def jet(self, x, K: int) -> np.ndarray:
        """Raw x-derivatives ``b, b', ..., b^(K-1)`` at ``x``; shape ``x.shape + (K,)``."""
        x = np.asarray(x, dtype=float)
        s = x / self.scale
        out = np.zeros(x.shape + (K,))
        for m, c in enumerate(_poly_derivative_table(np.array(self.poly, dtype=float), K)):
            if self.poly:
                out[..., m] = _polyval(c, s)
        for amp, freq, phase in self.sines:
            arg = freq * s + phase
            for m in range(K):
                trig = (np.sin, np.cos, lambda a: -np.sin(a), lambda a: -np.cos(a))[m % 4]
                out[..., m] += amp * freq**m * trig(arg)
        out *= (1.0 / self.scale) ** np.arange(K)
        return out

    @property
    def is_flat(self) -> bool:
        return all(c == 0.0 for c in self.poly[1:]) and all(a == 0.0 or f == 0.0 for a, f, _ in self.sines)


def make_bottom(spec: dict | None, length: float) -> Bottom | None:
    if spec is None:
        return None
    spec = dict(spec)
    variable = spec.pop("variable", "s")
    poly = tuple(float(c) for c in spec.pop("poly", ()))
    sines = tuple(tuple(float(v) for v in s) for s in spec.pop("sin", ()))
    if spec:
        raise ValueError(f"unknown bottom keys {sorted(spec)}")
    if any(len(s) != 3 for s in sines):
        raise ValueError("each sine term is [amplitude, frequency, phase]")
    if variable not in ("s", "x"):
        raise ValueError("bottom variable must be 's' or 'x'")
    return Bottom(poly, sines, length if variable == "s" else 1.0)


def _solve_exact(A, rhs) -> list:
    """Gauss-Jordan elimination over the rationals."""
    n = len(rhs)
    M = [row[:] + [r] for row, r in zip(A, rhs)]
    for col in range(n):
        piv = next(r for r in range(col, n) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [v * inv for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


def _hermite_scaled(constraints, length: float) -> np.ndarray:
    """Coefficients in ``s = x / length``; the confluent Vandermonde system is solved exactly."""
    conds = []
    for x0, val, m in constraints:
        s0 = Fraction(float(x0)) / Fraction(float(length))
        conds.append((s0, 0, Fraction(float(val))))
        conds.extend((s0, d, Fraction(0)) for d in range(1, int(m) + 1))
    deg = len(conds) - 1
    A = [[Fraction(math.perm(p, d)) * s0 ** (p - d) if p >= d else Fraction(0) for p in range(deg + 1)]
         for s0, d, _ in conds]  # fmt: skip
    try:
        cs = _solve_exact(A, [val for _, _, val in conds])
    except StopIteration:
        raise ValueError("Hermite constraints are degenerate") from None
    return np.array([float(c) for c in cs])


def hermite_coefficients(constraints, length: float = 1.0) -> np.ndarray:
    """Monomial coefficients (in ``x``) of the polynomial fixed by point constraints.

    Each constraint ``(x0, value, m)`` prescribes ``p(x0) = value`` and
    ``p^(k)(x0) = 0`` for ``k = 1..m``.  The degree is one less than the
    number of conditions.
    """
    cs = _hermite_scaled(constraints, length)
    return cs / float(length) ** np.arange(cs.size)


@dataclass
class Profile:
    """Initial data ``x -> (h, q)`` with the points where it may jump.

    ``surface`` means the first component is the free-surface level ``H``
    and the depth is obtained as ``H - b``.
    """

    fn: object
    breaks: tuple = ()
    surface: bool = False
    meta: dict = field(default_factory=dict)

    def __call__(self, x, bottom: Bottom | None = None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = np.array(self.fn(x), dtype=float)
        if self.surface:
            if bottom is not None:
                u[..., 0] = u[..., 0] - bottom(x)
        return u


def _poly_fn(hc, qc, scale):
    hc = np.asarray(hc, dtype=float)
    qc = np.asarray(qc, dtype=float)

    def fn(x):
        s = x / scale
        return np.stack([_polyval(hc, s), _polyval(qc, s) if qc.size else np.zeros_like(s)], axis=-1)

    return fn


def make_profile(spec: dict, length: float) -> Profile:
    spec = dict(spec)
    kind = spec.pop("type", "constant")
    surface = bool(spec.pop("surface", False))
    if kind == "constant":
        h, q = float(spec.pop("h")), float(spec.pop("q", 0.0))
        fn = _poly_fn([h], [q], 1.0)
        prof = Profile(fn, (), surface, {"h": h, "q": q})
    elif kind == "polynomial":
        variable = spec.pop("variable", "x")
        scale = length if variable == "s" else 1.0
        prof = Profile(_poly_fn(spec.pop("h"), spec.pop("q", [0.0]), scale), (), surface)
    elif kind == "hermite":
        # points are [s, value, zero derivative count] with s = x / L
        pts = [(float(p[0]) * length, float(p[1]), int(p[2])) for p in spec.pop("points")]
        q = float(spec.pop("q", 0.0))
        cs = _hermite_scaled(pts, length)
        # evaluate in s = x / L, where the coefficients are moderate
        prof = Profile(_poly_fn(cs, [q], length), (), surface, {"coefficients": cs / length ** np.arange(cs.size)})
    elif kind == "piecewise":
        breaks = np.asarray(spec.pop("breaks"), dtype=float)
        hv = np.asarray(spec.pop("h"), dtype=float)
        qv = np.asarray(spec.pop("q", np.zeros(hv.size)), dtype=float)
        if hv.size != breaks.size + 1 or qv.size != hv.size:
            raise ValueError("piecewise data needs len(breaks) + 1 values")
        if np.any(np.diff(breaks) <= 0):
            raise ValueError("piecewise breaks must increase")

        def fn(x):
            k = np.searchsorted(breaks, x, side="right")
            return np.stack([hv[k], qv[k]], axis=-1)

        prof = Profile(fn, tuple(breaks), surface)
    else:
        raise ValueError(f"unknown initial data type {kind!r}")
    if spec:
        raise ValueError(f"unknown keys {sorted(spec)} for initial data of type {kind!r}")
    return prof


def cell_averages(fn, length: float, cells: int, breaks=()) -> np.ndarray:
    """Cell averages of ``fn`` by Gauss-Legendre quadrature, split at ``breaks``."""
    edges = np.linspace(0.0, length, cells + 1)
    out = None
    for i in range(cells):
        a, b = edges[i], edges[i + 1]
        cuts = [a] + [p for p in breaks if a < p < b] + [b]
        acc = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            x = 0.5 * (hi + lo) + 0.5 * (hi - lo) * _NODES
            acc = acc + 0.5 * (hi - lo) * np.tensordot(_WEIGHTS, fn(x), axes=(0, 0))
        val = np.asarray(acc) / (b - a)
        if out is None:
            out = np.zeros((cells,) + val.shape)
        out[i] = val
    return out
