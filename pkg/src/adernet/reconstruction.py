"""Polynomial WENO reconstruction of cell averages.

Every cell receives a polynomial of degree ``K-1`` (in the local coordinate
``xi = (x - x_i) / dx``) that conserves its cell average.  It is a convex
combination of candidate polynomials, each of which interpolates the averages
of a stencil of cells containing the cell.  Candidates are weighted by
``lam / (eps + beta)**p`` with ``beta`` the usual sum of squared derivative
integrals.

Stencils never leave the available range.  Where some full-size stencils are
cut off by a boundary, smaller stencils enter with linear weights
``dx**(K - m)`` (``m`` cells), so the degree drops gracefully next to a
discontinuity while smooth data keeps order ``K``.
"""

from __future__ import annotations

import functools
import math

import numpy as np

__all__ = [
    "WENO_EPS",
    "WENO_POWER",
    "CENTRAL_WEIGHT",
    "reconstruct",
    "face_jets",
    "point_jets",
    "reconstruct_interfaces",
    "reconstruct_one_sided",
]

WENO_EPS = 1e-6
WENO_POWER = 2
CENTRAL_WEIGHT = 10.0


def _mono_integral(p: int, a: float, b: float) -> float:
    return (b ** (p + 1) - a ** (p + 1)) / (p + 1)


@functools.lru_cache(maxsize=None)
def _stencil(offsets: tuple, K: int):
    """Map stencil averages to monomial coefficients, and the smoothness form.

    Returns ``R`` of shape (K, m) and ``B`` of shape (m, m) with
    ``beta = v @ B @ v`` for stencil averages ``v``.
    """
    m = len(offsets)
    M = np.array([[_mono_integral(p, o - 0.5, o + 0.5) for p in range(m)] for o in offsets])
    Rm = np.linalg.inv(M)
    R = np.zeros((K, m))
    R[:m] = Rm
    # quadratic form in coefficient space: sum over l >= 1 of int (d^l p)^2 over the cell
    Ba = np.zeros((m, m))
    for l in range(1, m):
        for a in range(l, m):
            for b in range(l, m):
                ca = math.perm(a, l)
                cb = math.perm(b, l)
                Ba[a, b] += ca * cb * _mono_integral(a + b - 2 * l, -0.5, 0.5)
    return R, Rm.T @ Ba @ Rm


def _candidates(i: int, lo: int, hi: int, K: int, dx: float, mode: str):
    """(start, size, lam, beta_start, beta_size) for every candidate of cell ``i``."""
    out = []
    full = []
    if hi - lo + 1 >= K:
        for s in range(i - K + 1, i + 1):
            if s >= lo and s + K - 1 <= hi:
                full.append(s)
    centre = i - (K - 1) / 2.0
    for s in full:
        lam = CENTRAL_WEIGHT if abs(s - centre) < 0.75 else 1.0
        out.append((s, K, lam, s, K))
    if len(full) == K:
        return out
    # toward the farther end of the available range
    inward = 1 if (hi - i) >= (i - lo) else -1
    sizes = range(1, K) if mode == "weno" or not full else ()
    if mode != "weno" and not full:
        sizes = [min(K - 1, hi - lo + 1)]
    for m in sizes:
        if m > hi - lo + 1:
            break
        s = i - (m - 1) // 2 if inward > 0 else i - m // 2
        s = min(max(s, lo), hi - m + 1)
        lam = dx ** (K - m) if mode == "weno" else 1.0
        if m == 1:
            bs = i if inward > 0 else i - 1
            bs = min(max(bs, lo), hi - 1)
            bsize = 2 if hi > lo else 1
            out.append((s, 1, lam, bs, bsize))
        else:
            out.append((s, m, lam, s, m))
    return out


@functools.lru_cache(maxsize=256)
def _plan(N: int, K: int, gl: int, gr: int, dx: float, mode: str):
    lo, hi = -gl, N - 1 + gr
    cands = [_candidates(i, lo, hi, K, dx, mode) for i in range(N)]
    C = max(len(c) for c in cands)
    idx = np.zeros((N, C, K), dtype=int)
    bidx = np.zeros((N, C, K), dtype=int)
    R = np.zeros((N, C, K, K))
    B = np.zeros((N, C, K, K))
    lam = np.zeros((N, C))
    for i, cl in enumerate(cands):
        for c, (s, m, lw, bs, bm) in enumerate(cl):
            offs = tuple(range(s - i, s - i + m))
            Rc, Bc = _stencil(offs, K)
            idx[i, c, :m] = np.arange(s, s + m) + gl
            idx[i, c, m:] = i + gl
            R[i, c, :, :m] = Rc
            if (bs, bm) == (s, m):
                B[i, c, :m, :m] = Bc
                bidx[i, c] = idx[i, c]
            else:
                _, Bb = _stencil(tuple(range(bs - i, bs - i + bm)), K)
                bidx[i, c, :bm] = np.arange(bs, bs + bm) + gl
                bidx[i, c, bm:] = i + gl
                B[i, c, :bm, :bm] = Bb
            lam[i, c] = lw
    same = bool(np.all(idx == bidx))
    for arr in (idx, bidx, R, B, lam):
        arr.setflags(write=False)
    return idx, bidx, R, B, lam, same


def reconstruct(averages, dx: float, K: int, mode: str = "weno", left_ghosts=None, right_ghosts=None) -> np.ndarray:
    """Cell polynomials as monomial coefficients in ``xi``; shape ``(N, K, d)``.

    ``left_ghosts`` and ``right_ghosts`` are extra cell averages that continue
    the data beyond the ends, listed in increasing ``x`` (so
    ``left_ghosts[-1]`` touches cell 0).
    """
    if mode not in ("weno", "linear"):
        raise ValueError("mode must be 'weno' or 'linear'")
    u = np.asarray(averages, dtype=float)
    squeeze = u.ndim == 1
    if squeeze:
        u = u[:, None]
    N = u.shape[0]
    if N < 1:
        raise ValueError("reconstruction needs at least one cell")
    parts = [u]
    gl = gr = 0
    if left_ghosts is not None and len(left_ghosts):
        lg = np.asarray(left_ghosts, dtype=float).reshape(-1, u.shape[1])[-(K - 1) or None :] if K > 1 else None
        if lg is not None and len(lg):
            parts.insert(0, lg)
            gl = len(lg)
    if right_ghosts is not None and len(right_ghosts):
        rg = np.asarray(right_ghosts, dtype=float).reshape(-1, u.shape[1])[: K - 1] if K > 1 else None
        if rg is not None and len(rg):
            parts.append(rg)
            gr = len(rg)
    ext = np.concatenate(parts, axis=0)
    idx, bidx, R, B, lam, same = _plan(N, K, gl, gr, float(dx), mode)
    V = ext[idx]  # (N, C, K, d)
    coeffs = np.einsum("ncmk,nckd->ncmd", R, V)
    if mode == "weno":
        Vb = V if same else ext[bidx]
        beta = np.einsum("nckd,nckl,ncld->ncd", Vb, B, Vb)
        wt = lam[..., None] / (WENO_EPS + beta) ** WENO_POWER
    else:
        wt = np.broadcast_to(lam[..., None], lam.shape + (u.shape[1],))
    wt = wt / np.sum(wt, axis=1, keepdims=True)
    out = np.einsum("ncd,ncmd->nmd", wt, coeffs)
    return out[:, :, 0] if squeeze else out


@functools.lru_cache(maxsize=None)
def _eval_matrix(K: int, xi: float) -> np.ndarray:
    E = np.zeros((K, K))
    for l in range(K):
        for m in range(l, K):
            E[l, m] = math.perm(m, l) * xi ** (m - l)
    return E


def point_jets(coeffs, dx: float, xi: float) -> np.ndarray:
    """Raw x-derivatives of each cell polynomial at local coordinate ``xi``."""
    coeffs = np.asarray(coeffs, dtype=float)
    K = coeffs.shape[1]
    E = _eval_matrix(K, float(xi)) / dx ** np.arange(K)[:, None]
    return np.einsum("lm,nm...->nl...", E, coeffs)


def face_jets(coeffs, dx: float):
    """Jets at the left and right face of every cell, each ``(N, K, d)``."""
    return point_jets(coeffs, dx, -0.5), point_jets(coeffs, dx, 0.5)


def reconstruct_interfaces(averages, dx: float, K: int, mode: str = "weno"):
    """Left and right jets at the ``N - 1`` interior interfaces."""
    coeffs = reconstruct(averages, dx, K, mode)
    minus, plus = face_jets(coeffs, dx)
    return plus[:-1], minus[1:]


def reconstruct_one_sided(averages, side: str, dx: float, K: int, mode: str = "weno") -> np.ndarray:
    """Jet at the ``left`` (x = 0) or ``right`` (x = L) end using only interior cells."""
    u = np.asarray(averages, dtype=float)
    if u.shape[0] < 1:
        raise ValueError("need at least one cell")
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    n = min(u.shape[0], 2 * K - 1)
    part = u[:n] if side == "left" else u[-n:]
    coeffs = reconstruct(part, dx, K, mode)
    minus, plus = face_jets(coeffs, dx)
    return minus[0] if side == "left" else plus[-1]
