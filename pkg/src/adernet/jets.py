"""Truncated Taylor series arithmetic and the Cauchy-Kowalevsky transform.

A :class:`Series` holds the normalized Taylor coefficients
``c[alpha] = d^alpha u / alpha!`` of a (batched) quantity in one or two
variables, truncated at total degree ``order - 1``.  Arithmetic operators and
the elementary functions below work on ``Series``, plain floats and numpy
arrays alike, so model fluxes and coupling conditions written with ordinary
operators can be propagated through jets without hand-coded derivatives.
"""

from __future__ import annotations

import functools
import math
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Algebra",
    "Series",
    "jet1",
    "derivatives",
    "propagate",
    "ck_transform",
    "inverse_ck",
    "sqrt",
    "exp",
    "log",
    "sin",
    "cos",
]


class Algebra:
    """Monomial layout and product table for truncated power series.

    Monomials are ordered by total degree, then lexicographically, so the
    constant term is always index 0.
    """

    def __init__(self, nvars: int, order: int):
        if nvars < 1 or order < 1:
            raise ValueError("need nvars >= 1 and order >= 1")
        self.nvars = nvars
        self.order = order
        monos = []
        for deg in range(order):
            monos.extend(_compositions(deg, nvars))
        self.monomials = monos
        self.index = {m: i for i, m in enumerate(monos)}
        self.size = len(monos)
        left, right, out = [], [], []
        for i, mi in enumerate(monos):
            for j, mj in enumerate(monos):
                mk = tuple(a + b for a, b in zip(mi, mj))
                k = self.index.get(mk)
                if k is not None:
                    left.append(i)
                    right.append(j)
                    out.append(k)
        self._left = np.array(left)
        self._right = np.array(right)
        scatter = np.zeros((len(out), self.size))
        scatter[np.arange(len(out)), out] = 1.0
        self._scatter = scatter
        self._work = {}
        self._gather_left = np.zeros((self.size, len(out)))
        self._gather_left[self._left, np.arange(len(out))] = 1.0
        self._gather_right = np.zeros((self.size, len(out)))
        self._gather_right[self._right, np.arange(len(out))] = 1.0
        self._factorials = np.array(
            [float(np.prod([math.factorial(a) for a in m])) for m in monos]
        )

    @staticmethod
    @functools.lru_cache(maxsize=None)
    def get(nvars: int, order: int) -> "Algebra":
        return Algebra(nvars, order)

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if a.shape != b.shape:
            full = np.broadcast_shapes(a.shape, b.shape)
            a, b = np.broadcast_to(a, full), np.broadcast_to(b, full)
        shape = a.shape[:-1] + (self._left.size,)
        # reused work buffers avoid page-faulting fresh large temporaries on every product
        work = self._work.get(shape)
        if work is None:
            work = self._work[shape] = (np.empty(shape), np.empty(shape))
        wl, wr = work
        # gathers as 0/1 matrix products are much faster than fancy indexing here
        np.matmul(a, self._gather_left, out=wl)
        np.matmul(b, self._gather_right, out=wr)
        np.multiply(wl, wr, out=wl)
        return wl @ self._scatter

    def constant(self, value) -> np.ndarray:
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (self.size,))
        c[..., 0] = value
        return c


def _compositions(total: int, parts: int):
    if parts == 1:
        return [(total,)]
    out = []
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return out


class Series:
    """Batched truncated Taylor series; ``c`` has shape ``batch + (alg.size,)``."""

    __slots__ = ("c", "alg")
    __array_priority__ = 100

    def __init__(self, c: np.ndarray, alg: Algebra):
        self.c = c
        self.alg = alg

    @property
    def value(self) -> np.ndarray:
        return self.c[..., 0]

    def coeff(self, *powers: int) -> np.ndarray:
        return self.c[..., self.alg.index[tuple(powers)]]

    def __add__(self, other):
        if isinstance(other, Series):
            return Series(self.c + other.c, self.alg)
        return Series(self.c + self.alg.constant(other), self.alg)

    __radd__ = __add__

    def __neg__(self):
        return Series(-self.c, self.alg)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Series):
            return Series(self.alg.mul(self.c, other.c), self.alg)
        return Series(self.c * np.asarray(other)[..., None], self.alg)

    __rmul__ = __mul__

    def reciprocal(self) -> "Series":
        x0 = self.value
        if np.any(x0 == 0.0):
            raise ZeroDivisionError("reciprocal of a series with zero constant term")
        n = self.alg.order
        return _compose(self, [(-1.0) ** m / x0 ** (m + 1) for m in range(n)])

    def __truediv__(self, other):
        if isinstance(other, Series):
            return self * other.reciprocal()
        return Series(self.c / np.asarray(other)[..., None], self.alg)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = Series(self.alg.constant(np.ones(self.c.shape[:-1])), self.alg)
            base = self
            while p:
                if p & 1:
                    out = out * base
                p >>= 1
                if p:
                    base = base * base
            return out
        x0 = self.value
        n = self.alg.order
        return _compose(self, [_binom(p, m) * x0 ** (p - m) for m in range(n)])

    def __repr__(self):
        return f"Series(order={self.alg.order}, nvars={self.alg.nvars}, c={self.c!r})"


def _binom(a: float, m: int) -> float:
    out = 1.0
    for j in range(m):
        out *= (a - j) / (j + 1)
    return out


def _compose(x: Series, taylor: Sequence[np.ndarray]) -> Series:
    """Evaluate ``sum_m taylor[m] * (x - x0)**m`` by Horner's rule."""
    e = Series(x.c.copy(), x.alg)
    e.c[..., 0] = 0.0
    out = Series(x.alg.constant(taylor[-1]), x.alg)
    for m in range(len(taylor) - 2, -1, -1):
        out = out * e + taylor[m]
    return out


def sqrt(x):
    if not isinstance(x, Series):
        return np.sqrt(x)
    x0 = x.value
    if np.any(x0 <= 0.0):
        raise ValueError("sqrt of a series with non-positive constant term")
    return x ** 0.5


def exp(x):
    if not isinstance(x, Series):
        return np.exp(x)
    e0 = np.exp(x.value)
    return _compose(x, [e0 / math.factorial(m) for m in range(x.alg.order)])


def log(x):
    if not isinstance(x, Series):
        return np.log(x)
    x0 = x.value
    terms = [np.log(x0)] + [(-1.0) ** (m + 1) / (m * x0**m) for m in range(1, x.alg.order)]
    return _compose(x, terms)


def sin(x):
    if not isinstance(x, Series):
        return np.sin(x)
    s, c = np.sin(x.value), np.cos(x.value)
    cycle = [s, c, -s, -c]
    return _compose(x, [cycle[m % 4] / math.factorial(m) for m in range(x.alg.order)])


def cos(x):
    if not isinstance(x, Series):
        return np.cos(x)
    s, c = np.sin(x.value), np.cos(x.value)
    cycle = [c, -s, -c, s]
    return _compose(x, [cycle[m % 4] / math.factorial(m) for m in range(x.alg.order)])


def jet1(derivs, order: int | None = None) -> Series:
    """Univariate jet from raw derivatives ``derivs[..., l] = d^l u``."""
    derivs = np.asarray(derivs, dtype=float)
    k = derivs.shape[-1]
    order = k if order is None else order
    alg = Algebra.get(1, order)
    c = np.zeros(derivs.shape[:-1] + (order,))
    m = min(k, order)
    c[..., :m] = derivs[..., :m] / alg._factorials[:m]
    return Series(c, alg)


def derivatives(s) -> np.ndarray:
    """Raw derivatives of a univariate jet (inverse of :func:`jet1`)."""
    if not isinstance(s, Series):
        raise TypeError("expected a Series")
    return s.c * s.alg._factorials


def propagate(fn: Callable, *jets):
    """Push jets through ``fn`` (a function written with ordinary operators)."""
    return fn(*jets)


def ck_transform(sjet: np.ndarray, model, bottom: np.ndarray | None = None) -> np.ndarray:
    """Convert spatial derivatives at a point into time derivatives.

    Parameters
    ----------
    sjet : ndarray, shape (..., K, d)
        Raw spatial derivatives ``d^l u / dx^l`` for ``l = 0..K-1``.
    model : hyperbolic model
        Needs ``flux_terms(u)`` and, when ``bottom`` is given, ``source_terms(u, dbdx)``.
    bottom : ndarray, shape (..., K), optional
        Raw spatial derivatives of the bottom elevation at the same point.

    Returns
    -------
    ndarray, shape (..., K, d)
        Raw time derivatives ``d^l u / dt^l`` at the anchor.
    """
    sjet = np.asarray(sjet, dtype=float)
    K, d = sjet.shape[-2:]
    batch = sjet.shape[:-2]
    if K == 1:
        return sjet.copy()
    alg = Algebra.get(2, K)
    idx = alg.index
    comps = [np.zeros(batch + (alg.size,)) for _ in range(d)]
    for b in range(K):
        for j in range(d):
            comps[j][..., idx[(0, b)]] = sjet[..., b, j] / math.factorial(b)
    slope = None
    if bottom is not None:
        bc = np.zeros(batch + (alg.size,))
        for b in range(K - 1):
            bc[..., idx[(0, b)]] = bottom[..., b + 1] / math.factorial(b)
        slope = Series(bc, alg)
    # level a holds d^a/dt^a; each pass fills level a+1 from the flux expansion
    for a in range(K - 1):
        u = tuple(Series(c, alg) for c in comps)
        flux = model.flux_terms(u)
        src = model.source_terms(u, slope) if slope is not None else None
        for b in range(K - 1 - a):
            target = idx[(a + 1, b)]
            for j in range(d):
                fj = flux[j]
                val = -(b + 1) * _coef(fj, idx[(a, b + 1)], batch)
                if src is not None:
                    val = val + _coef(src[j], idx[(a, b)], batch)
                comps[j][..., target] = val / (a + 1)
    out = np.empty(batch + (K, d))
    for a in range(K):
        for j in range(d):
            out[..., a, j] = comps[j][..., idx[(a, 0)]] * math.factorial(a)
    return out


def _coef(x, i, batch):
    if isinstance(x, Series):
        return x.c[..., i]
    if i == 0:
        return np.broadcast_to(np.asarray(x, dtype=float), batch)
    return np.zeros(batch)


def inverse_ck(tjet: np.ndarray, model, bottom: np.ndarray | None = None) -> np.ndarray:
    """Spatial derivatives at a point from its time derivatives (inverse of :func:`ck_transform`).

    The ``k``-th time derivative depends on the ``k``-th spatial derivative
    only through ``(-A)^k d^k u / dx^k`` with ``A`` the flux Jacobian at the
    point, so the spatial jet is recovered order by order.
    """
    tjet = np.asarray(tjet, dtype=float)
    K = tjet.shape[-2]
    S = np.zeros_like(tjet)
    S[..., 0, :] = tjet[..., 0, :]
    if K == 1:
        return S
    mA = -model.jacobian(tjet[..., 0, :])
    P = np.broadcast_to(np.eye(tjet.shape[-1]), mA.shape).copy()
    for k in range(1, K):
        P = P @ mA
        rest = ck_transform(S[..., : k + 1, :], model, None if bottom is None else bottom[..., : k + 1])
        S[..., k, :] = np.linalg.solve(P, (tjet[..., k, :] - rest[..., k, :])[..., None])[..., 0]
    return S
