import math

import numpy as np
import pytest

from adernet.cases import CASES, builtin_case, hermite_init, list_cases
from adernet.network import build_network
from adernet.profiles import make_bottom, make_profile


def polyval(c, x):
    return np.polynomial.polynomial.polyval(x, c)


def test_split_circle_hermite_polynomial():
    c = hermite_init([(0.0, 2.0, 7), (25.0, 3.0, 7)], 25.0)
    assert c.size == 16
    cs = c * 25.0 ** np.arange(16)  # same polynomial in s = x / L
    assert polyval(cs, 0.0) == pytest.approx(2.0, abs=1e-9)
    assert polyval(cs, 1.0) == pytest.approx(3.0, abs=1e-9)
    for k in range(1, 8):
        d = np.polynomial.polynomial.polyder(cs, k)
        assert abs(polyval(d, 0.0)) <= 1e-9
        assert abs(polyval(d, 1.0)) <= 1e-9


def test_hermite_symmetry_and_linear_case():
    c = hermite_init([(0.0, 0.0, 3), (10.0, 1.0, 3)], 10.0)
    x = np.linspace(0, 10, 11)
    np.testing.assert_allclose(polyval(c, x) + polyval(c, 10 - x), 1.0, atol=1e-12)
    lin = hermite_init([(0.0, 1.0, 0), (4.0, 3.0, 0)], 4.0)
    np.testing.assert_allclose(lin, [1.0, 0.5], atol=1e-14)


def test_diamond_polynomial_degree_and_values():
    prof = make_profile({"type": "hermite", "points": [[0, 5, 6], [0.5, 5.3, 0], [1, 5, 6]]}, 25.0)
    assert prof.meta["coefficients"].size == 15
    np.testing.assert_allclose(prof(np.array([0.0, 12.5, 25.0]))[:, 0], [5.0, 5.3, 5.0], atol=1e-10)


def test_builtin_case_facts():
    sc = build_network(builtin_case("split_circle", 100))
    for e in sc.edges.values():
        assert e.averages[0, 0] == pytest.approx(2.0, abs=1e-9)
        assert e.averages[-1, 0] == pytest.approx(3.0, abs=1e-9)
    sh = build_network(builtin_case("shock", 50))
    depth = {k: float(e.averages[0, 0]) for k, e in sh.edges.items()}
    assert depth == pytest.approx({"E1": 5.0, "E2": 5.0, "E3": 6.0, "E4": 5.0}, abs=1e-14)
    assert all(v.coupling.name == "manhole" for v in sh.vertices.values())
    tree = build_network(builtin_case("tree", 100))
    assert len(tree.edges) == 32 and len(tree.vertices) == 24
    assert tree.edges["E5"].length == 2.5 and tree.edges["E31"].length == 25.0
    assert tree.external_ends() == []
    assert tree.edges["E2"].averages[0, 0] == pytest.approx(3.0, abs=1e-14)
    assert tree.edges["E3"].averages[0, 0] == pytest.approx(2.0, abs=1e-14)


def test_case_catalogue():
    assert set(list_cases()) == set(CASES)
    with pytest.raises(KeyError):
        builtin_case("nope")
    cfg = builtin_case("split_circle", 40, order=3, solver="heoc")
    assert cfg.run.order == 3 and cfg.run.solver == "heoc" and cfg.edges[0].cells == 40


def test_bottom_profiles():
    b3 = make_bottom({"poly": [0.0, 0.3], "sin": [[0.3, math.pi, 0.0]]}, 25.0)
    x = np.array([0.0, 12.5, 25.0])
    np.testing.assert_allclose(b3(x), 0.3 * x / 25 + 0.3 * np.sin(np.pi * x / 25), atol=1e-15)
    jet = b3.jet(np.array([5.0]), 3)[0]
    s = 5.0 / 25
    assert jet[1] == pytest.approx(0.3 / 25 + 0.3 * np.pi / 25 * np.cos(np.pi * s), rel=1e-13)
    assert jet[2] == pytest.approx(-0.3 * (np.pi / 25) ** 2 * np.sin(np.pi * s), rel=1e-13)
    b2 = make_bottom({"poly": [0.0, 0.0, 0.3]}, 25.0)
    assert b2(25.0) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        make_bottom({"poly": [0.0], "tilt": 1}, 1.0)


def test_surface_initial_data_subtracts_bottom():
    net = build_network(builtin_case("wb_b2", 50))
    e = net.edges["E1"]
    np.testing.assert_allclose(e.averages[:, 0] + e.bottom_averages, 3.0, atol=1e-14)
