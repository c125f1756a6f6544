import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


class LinearAcoustics:
    """Constant-coefficient linear system ``u_t + A u_x = 0`` for exactness checks."""

    def __init__(self, A=((0.0, 1.0), (4.0, 0.0))):
        self.A = np.array(A, dtype=float)
        self.g = 9.81

    def flux_terms(self, u):
        return tuple(sum_terms([u[j] * self.A[i, j] for j in range(len(u))]) for i in range(self.A.shape[0]))

    d = 2

    def jacobian(self, u):
        u = np.asarray(u, dtype=float)
        return np.broadcast_to(self.A, u.shape[:-1] + self.A.shape).copy()

    def flux(self, u):
        return np.asarray(u, dtype=float) @ self.A.T

    def admissible(self, u):
        return bool(np.all(np.isfinite(u)))

    def max_speed(self, u):
        u = np.asarray(u, dtype=float)
        return np.full(u.shape[:-1], np.max(np.abs(np.linalg.eigvals(self.A))))

    def eigen(self, u):
        u = np.asarray(u, dtype=float)
        lam, R = np.linalg.eig(self.A)
        order = np.argsort(lam)
        lam, R = lam[order].real, R[:, order].real
        shape = u.shape[:-1]
        return (np.broadcast_to(lam, shape + (2,)).copy(), np.broadcast_to(R, shape + (2, 2)).copy(),
                np.full(shape, int(np.sum(lam > 0))))

    def riemann_interface(self, uL, uR):
        lam, R, _ = self.eigen(np.zeros(2))
        P = R @ np.diag((lam > 0).astype(float)) @ np.linalg.inv(R)
        return np.asarray(uL) @ P.T + np.asarray(uR) @ (np.eye(2) - P).T

    def exact(self, u0_primitive, x0, x1, t):
        """Exact cell average over ``[x0, x1]`` at time ``t`` given an antiderivative of the initial data."""
        lam, R, _ = self.eigen(np.zeros(2))
        Rinv = np.linalg.inv(R)
        out = np.zeros(np.shape(x0) + (2,))
        for k in range(2):
            shift = lam[k] * t
            w = (u0_primitive(x1 - shift) - u0_primitive(x0 - shift)) @ Rinv[k]
            out += np.outer(w / (x1 - x0), R[:, k])
        return out


def sum_terms(terms):
    out = terms[0]
    for t in terms[1:]:
        out = out + t
    return out


@pytest.fixture
def acoustics():
    return LinearAcoustics()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
