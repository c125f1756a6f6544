"""Explicit Runge-Kutta tableaus with rooted-tree order verification."""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction as Fr

import numpy as np

__all__ = ["ButcherTableau", "rooted_trees", "order_defects", "TABLEAUS", "tableau_for_order"]


@functools.lru_cache(maxsize=None)
def rooted_trees(order: int) -> tuple:
    """All rooted trees with ``order`` nodes as canonical nested tuples of children."""
    if order == 1:
        return ((),)
    out = set()
    for children in _forests(order - 1, order - 1):
        out.add(tuple(sorted(children)))
    return tuple(sorted(out))


def _forests(nodes: int, max_tree: int):
    """Multisets of trees with ``nodes`` nodes in total, each tree at most ``max_tree`` nodes."""
    if nodes == 0:
        yield ()
        return
    for first in range(min(nodes, max_tree), 0, -1):
        for tree in rooted_trees(first):
            for rest in _forests(nodes - first, first):
                # keep a canonical order inside equal-size groups
                if rest and _size(rest[0]) == first and rest[0] < tree:
                    continue
                yield (tree,) + rest


def _size(tree) -> int:
    return 1 + sum(_size(c) for c in tree)


def _density(tree) -> int:
    out = _size(tree)
    for c in tree:
        out *= _density(c)
    return out


def _weights(tree, A):
    g = np.ones(A.shape[0])
    for child in tree:
        g = g * (A @ _weights(child, A))
    return g


def order_defects(A, b, order: int) -> dict:
    """``b . Phi(t) - 1/gamma(t)`` for every rooted tree up to ``order`` nodes."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    out = {}
    for p in range(1, order + 1):
        for tree in rooted_trees(p):
            out[tree] = float(b @ _weights(tree, A) - 1.0 / _density(tree))
    return out


@dataclass(frozen=True)
class ButcherTableau:
    name: str
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    order: int
    tol: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        A, b, c = (np.asarray(x, dtype=float) for x in (self.A, self.b, self.c))
        s = b.size
        if A.shape != (s, s) or c.size != s:
            raise ValueError(f"{self.name}: inconsistent tableau shapes")
        if np.any(np.triu(A) != 0.0):
            raise ValueError(f"{self.name}: A must be strictly lower triangular")
        if abs(b.sum() - 1.0) > self.tol:
            raise ValueError(f"{self.name}: weights do not sum to one")
        if np.max(np.abs(A.sum(axis=1) - c)) > self.tol:
            raise ValueError(f"{self.name}: row-sum condition violated")
        worst = max(abs(v) for v in order_defects(A, b, self.order).values())
        if worst > self.tol:
            raise ValueError(f"{self.name}: order conditions up to {self.order} fail (defect {worst:.2e})")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def stages(self) -> int:
        return self.b.size


def _tab(name, rows, b, c, order):
    s = len(b)
    A = np.zeros((s, s))
    for i, row in enumerate(rows, start=1):
        A[i, : len(row)] = [float(x) for x in row]
    return ButcherTableau(name, A, np.array([float(x) for x in b]), np.array([float(x) for x in c]), order)


TABLEAUS = {
    1: _tab("explicit Euler", [], [1], [0], 1),
    2: _tab("Heun", [[1]], [Fr(1, 2), Fr(1, 2)], [0, 1], 2),
    3: _tab("Kutta-3", [[Fr(1, 2)], [-1, 2]], [Fr(1, 6), Fr(2, 3), Fr(1, 6)], [0, Fr(1, 2), 1], 3),
    4: _tab(
        "classical RK4",
        [[Fr(1, 2)], [0, Fr(1, 2)], [0, 0, 1]],
        [Fr(1, 6), Fr(1, 3), Fr(1, 3), Fr(1, 6)],
        [0, Fr(1, 2), Fr(1, 2), 1],
        4,
    ),
    5: _tab(
        "Butcher 6-stage order 5",
        [
            [Fr(1, 4)],
            [Fr(1, 8), Fr(1, 8)],
            [0, Fr(-1, 2), 1],
            [Fr(3, 16), 0, 0, Fr(9, 16)],
            [Fr(-3, 7), Fr(2, 7), Fr(12, 7), Fr(-12, 7), Fr(8, 7)],
        ],
        [Fr(7, 90), 0, Fr(32, 90), Fr(12, 90), Fr(32, 90), Fr(7, 90)],
        [0, Fr(1, 4), Fr(1, 4), Fr(1, 2), Fr(3, 4), 1],
        5,
    ),
    6: _tab(
        "Butcher 7-stage order 6",
        [
            [Fr(1, 3)],
            [0, Fr(2, 3)],
            [Fr(1, 12), Fr(1, 3), Fr(-1, 12)],
            [Fr(-1, 16), Fr(9, 8), Fr(-3, 16), Fr(-3, 8)],
            [0, Fr(9, 8), Fr(-3, 8), Fr(-3, 4), Fr(1, 2)],
            [Fr(9, 44), Fr(-9, 11), Fr(63, 44), Fr(18, 11), 0, Fr(-16, 11)],
        ],
        [Fr(11, 120), 0, Fr(27, 40), Fr(27, 40), Fr(-4, 15), Fr(-4, 15), Fr(11, 120)],
        [0, Fr(1, 3), Fr(2, 3), Fr(1, 3), Fr(1, 2), Fr(1, 2), 1],
        6,
    ),
}


def tableau_for_order(order: int) -> ButcherTableau:
    """Cheapest shipped tableau whose order is at least ``order``."""
    for k in sorted(TABLEAUS):
        if k >= order:
            return TABLEAUS[k]
    raise ValueError(f"no shipped Runge-Kutta tableau of order {order}")
