"""Shallow water equations: flux, eigenstructure, Lax curves and sources.

States are arrays whose last axis holds ``(h, q)``: water depth and discharge.
Every method accepts a single state of shape ``(2,)`` or a batch ``(..., 2)``.
The ``*_terms`` methods take component tuples instead, so that the same
formulas can be evaluated on :class:`adernet.jets.Series`.

A different conservation law plugs into the solvers by providing the same
method set (``flux``, ``flux_terms``, ``eigen``, ``lax_curve``,
``lax_curve_jacobian``, ``linear_lax_basis``, ``mirror``, ``admissible``).
"""

from __future__ import annotations

import numpy as np

__all__ = ["ShallowWater", "SWE", "InadmissibleState", "SonicState"]


class InadmissibleState(ValueError):
    """A state outside the model's domain (for shallow water: h <= 0)."""


class SonicState(ValueError):
    """An eigenvalue came within ``eps_eig`` of zero."""


class ShallowWater:
    d = 2

    def __init__(self, g: float = 9.81, eps_eig: float = 1e-8):
        self.g = g
        self.eps_eig = eps_eig

    def __repr__(self):
        return f"ShallowWater(g={self.g})"

    def __deepcopy__(self, memo):
        # parameters never change after construction
        return self

    # -- predicates -------------------------------------------------------
    def admissible(self, u) -> bool:
        h = np.asarray(u)[..., 0]
        return bool(np.all(np.isfinite(u)) and np.all(h > 0.0))

    def check(self, u):
        if not self.admissible(u):
            raise InadmissibleState(f"inadmissible shallow water state (need h > 0): {np.asarray(u)!r}")

    @staticmethod
    def mirror(u):
        """Reflect ``x -> -x``: the discharge changes sign."""
        out = np.array(u, dtype=float, copy=True)
        out[..., 1] = -out[..., 1]
        return out

    # -- flux ------------------------------------------------------------
    def flux_terms(self, u):
        h, q = u
        return (q, q * q / h + 0.5 * self.g * h * h)

    def source_terms(self, u, dbdx):
        h, _ = u
        return (0.0, -self.g * h * dbdx)

    def flux(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        self.check(u)
        h, q = u[..., 0], u[..., 1]
        return np.stack([q, q * q / h + 0.5 * self.g * h * h], axis=-1)

    def jacobian(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        h, q = u[..., 0], u[..., 1]
        v = q / h
        out = np.zeros(u.shape[:-1] + (2, 2))
        out[..., 0, 1] = 1.0
        out[..., 1, 0] = self.g * h - v * v
        out[..., 1, 1] = 2.0 * v
        return out

    def bottom_source(self, u, db_dx) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        s = np.zeros_like(u)
        s[..., 1] = -self.g * u[..., 0] * np.asarray(db_dx)
        return s

    def hydraulic_head(self, u):
        u = np.asarray(u, dtype=float)
        h, q = u[..., 0], u[..., 1]
        return q * q / (2.0 * self.g * h * h) + h

    def head_terms(self, u):
        h, q = u
        return q * q / (2.0 * self.g * h * h) + h

    # -- characteristic structure --------------------------------------------
    def max_speed(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.abs(u[..., 1] / u[..., 0]) + np.sqrt(self.g * u[..., 0])

    def eigen(self, u):
        """Eigenvalues (ascending), right eigenvectors as columns, and ``c``.

        Eigenvectors are normalized to first component 1, i.e. ``r_k = (1, lam_k)``.
        ``c`` counts positive eigenvalues.
        """
        u = np.asarray(u, dtype=float)
        self.check(u)
        v = u[..., 1] / u[..., 0]
        cel = np.sqrt(self.g * u[..., 0])
        lam = np.stack([v - cel, v + cel], axis=-1)
        if np.any(np.abs(lam) <= self.eps_eig):
            raise SonicState(f"eigenvalue within {self.eps_eig} of zero at {u!r}")
        R = np.ones(u.shape[:-1] + (2, 2))
        R[..., 1, 0] = lam[..., 0]
        R[..., 1, 1] = lam[..., 1]
        c = np.sum(lam > 0, axis=-1)
        return lam, R, c

    def linear_lax_basis(self, u_g) -> np.ndarray:
        """Columns spanning the outgoing (positive speed) characteristic fields."""
        lam, R, c = self.eigen(u_g)
        if np.any(c != 1):
            raise SonicState("only the subcritical regime (one positive eigenvalue) is supported")
        return R[..., :, 1:2]

    # -- Lax curve of the outgoing family ------------------------------------
    def _wave(self, hg, hr):
        """Velocity jump ``phi`` and its derivative in ``hg`` (shock or rarefaction branch)."""
        g = self.g
        hg = np.asarray(hg, dtype=float)
        hr = np.asarray(hr, dtype=float)
        shock = hg > hr
        # evaluate both branches on safe arguments, then select
        s = np.sqrt(0.5 * g * (hg + hr) / (hg * hr))
        phi_s = (hg - hr) * s
        dphi_s = s - (hg - hr) * g / (4.0 * s * hg * hg)
        cg = np.sqrt(g * hg)
        phi_r = 2.0 * (cg - np.sqrt(g * hr))
        dphi_r = g / cg
        return np.where(shock, phi_s, phi_r), np.where(shock, dphi_s, dphi_r)

    def lax_curve(self, xi, u_r) -> np.ndarray:
        """State at depth ``xi`` reachable from ``u_r`` through the outgoing wave."""
        xi = np.asarray(xi, dtype=float)
        if np.any(xi <= 0.0):
            raise InadmissibleState("Lax curve parameter (depth) must be positive")
        u_r = np.asarray(u_r, dtype=float)
        hr, qr = u_r[..., 0], u_r[..., 1]
        phi, _ = self._wave(xi, hr)
        # written so that xi == hr returns u_r bit for bit
        return np.stack([xi + 0.0 * hr, qr * (xi / hr) + xi * phi], axis=-1)

    def lax_curve_jacobian(self, xi, u_r) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if np.any(xi <= 0.0):
            raise InadmissibleState("Lax curve parameter (depth) must be positive")
        u_r = np.asarray(u_r, dtype=float)
        hr, qr = u_r[..., 0], u_r[..., 1]
        phi, dphi = self._wave(xi, hr)
        vg = qr / hr + phi
        return np.stack([np.ones_like(vg), vg + xi * dphi], axis=-1)

    # -- two-state Riemann problem at x/t = 0 ---------------------------------
    def riemann_interface(self, uL, uR, tol: float = 1e-14, maxit: int = 50) -> np.ndarray:
        """Godunov state at an interface, vectorized over the batch axes.

        Intersects the outgoing Lax curve of ``uR`` with the mirrored curve of
        ``uL``; the interface state must be subcritical.
        """
        uL = np.asarray(uL, dtype=float)
        uR = np.asarray(uR, dtype=float)
        hL, hR = uL[..., 0], uR[..., 0]
        if np.any(hL <= 0.0) or np.any(hR <= 0.0):
            raise InadmissibleState("non-positive depth in Riemann data")
        vL, vR = uL[..., 1] / hL, uR[..., 1] / hR
        dv = vR - vL
        h = 0.5 * (hL + hR)
        scale = 1.0 + np.abs(vL) + np.abs(vR) + np.sqrt(self.g * np.maximum(hL, hR))
        for _ in range(maxit):
            fl, dfl = self._wave(h, hL)
            fr, dfr = self._wave(h, hR)
            res = fl + fr + dv
            done = np.abs(res) <= tol * scale
            if np.all(done):
                break
            step = np.where(done, 0.0, res / (dfl + dfr))
            h_new = h - step
            h = np.where(h_new > 0.0, h_new, 0.5 * h)
        else:
            raise RuntimeError("interface Riemann solver did not converge")
        # one polishing step pushes the root to rounding level
        fl, dfl = self._wave(h, hL)
        fr, dfr = self._wave(h, hR)
        h = h - (fl + fr + dv) / (dfl + dfr)
        fr, _ = self._wave(h, hR)
        q = uR[..., 1] * (h / hR) + h * fr
        if np.any(np.abs(q / h) >= np.sqrt(self.g * h)):
            raise SonicState("interface state is not subcritical")
        return np.stack([h, q], axis=-1)


SWE = ShallowWater()
