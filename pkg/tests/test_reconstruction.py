import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adernet.reconstruction import face_jets, point_jets, reconstruct, reconstruct_interfaces, reconstruct_one_sided


def poly_averages(c, x):
    """Exact cell averages of ``sum c_j x^j`` over cells with faces ``x``."""
    P = np.polynomial.polynomial.polyint(c)
    pv = np.polynomial.polynomial.polyval
    return (pv(x[1:], P) - pv(x[:-1], P)) / np.diff(x)


@pytest.mark.parametrize("mode", ["weno", "linear"])
@pytest.mark.parametrize("K", [2, 3, 4, 5, 6])
@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10**6), dx=st.sampled_from([0.05, 0.5, 1.0]))
def test_polynomial_reproduction(K, mode, seed, dx):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=K)
    N = 2 * K + 6
    m = K - 1
    x = (np.arange(-m, N + m + 1) - N / 2) * dx
    avg = poly_averages(c, x)[:, None]
    coeffs = reconstruct(avg[m:-m], dx, K, mode, avg[:m], avg[-m:])
    faces = x[m:-m]
    minus, plus = face_jets(coeffs, dx)
    pv = np.polynomial.polynomial.polyval
    for l in range(K):
        dc = np.polynomial.polynomial.polyder(c, l) if l else c
        scale = 1.0 + np.max(np.abs(pv(faces, dc)))
        np.testing.assert_allclose(minus[:, l, 0], pv(faces[:-1], dc), atol=1e-9 * scale / dx**l)
        np.testing.assert_allclose(plus[:, l, 0], pv(faces[1:], dc), atol=1e-9 * scale / dx**l)


@pytest.mark.parametrize("K", [2, 3, 4, 5, 6])
def test_reproduction_in_cells_away_from_ends(K):
    rng = np.random.default_rng(K)
    c = rng.normal(size=K)
    N, dx = 30, 0.2
    x = np.arange(N + 1) * dx
    coeffs = reconstruct(poly_averages(c, x)[:, None], dx, K)
    minus, _ = face_jets(coeffs, dx)
    inner = slice(K - 1, N - K + 1)
    pv = np.polynomial.polynomial.polyval
    np.testing.assert_allclose(minus[inner, 0, 0], pv(x[:-1][inner], c), atol=1e-10)


@pytest.mark.parametrize("K", [1, 2, 3, 4, 5, 6])
def test_constants_reproduced_everywhere(K):
    avg = np.full((15, 2), [2.5, -0.3])
    coeffs = reconstruct(avg, 0.1, K)
    np.testing.assert_allclose(coeffs[:, 0], avg, atol=1e-12)
    np.testing.assert_allclose(coeffs[:, 1:], 0.0, atol=1e-12)
    L, R = reconstruct_interfaces(avg, 0.1, K)
    np.testing.assert_allclose(L[:, 0], avg[1:], atol=1e-12)
    scaled = R[:, 1:] * (0.1 ** np.arange(1, K))[None, :, None]
    np.testing.assert_allclose(scaled, 0.0, atol=1e-12)


def test_linear_data_order_three_interfaces():
    dx = 0.25
    x = np.arange(21) * dx
    avg = 0.5 * (x[1:] + x[:-1])
    L, R = reconstruct_interfaces(avg, dx, 3)
    inner = slice(2, 16)
    np.testing.assert_allclose(L[inner, 0], x[1:-1][inner], atol=1e-12)
    np.testing.assert_allclose(L[inner, 1], 1.0, atol=1e-10)
    np.testing.assert_allclose(L[inner, 2], 0.0, atol=1e-8)


@pytest.mark.parametrize("K", [1, 2, 3, 4, 5, 6])
def test_cell_average_is_conserved(K):
    rng = np.random.default_rng(10 + K)
    avg = rng.normal(size=(20, 2))
    coeffs = reconstruct(avg, 0.3, K)
    means = sum(coeffs[:, m] * ((0.5 ** (m + 1) - (-0.5) ** (m + 1)) / (m + 1)) for m in range(K))
    np.testing.assert_allclose(means, avg, atol=1e-12)


@pytest.mark.parametrize("K", [2, 3, 4, 5, 6])
@pytest.mark.parametrize("dx", [1.0, 0.01])
def test_step_data_does_not_overshoot(K, dx):
    u = np.where(np.arange(40) < 20, 1.0, 0.0)
    minus, plus = face_jets(reconstruct(u, dx, K), dx)
    v = np.concatenate([minus[:, 0], plus[:, 0]])
    assert v.max() <= 1.0 + 1e-10
    assert v.min() >= -1e-10


def test_one_sided_examples():
    avg = np.full(10, 4.0)
    np.testing.assert_allclose(reconstruct_one_sided(avg, "left", 0.1, 3), [4.0, 0.0, 0.0], atol=1e-12)
    dx = 0.1
    x = np.arange(11) * dx
    lin = 2.0 + 3.0 * 0.5 * (x[1:] + x[:-1])
    for side, x0 in (("left", 0.0), ("right", 1.0)):
        jet = reconstruct_one_sided(lin, side, dx, 2, mode="linear")
        assert jet[0] == pytest.approx(2.0 + 3.0 * x0, abs=1e-12)
        assert jet[1] == pytest.approx(3.0, abs=1e-10)
    assert reconstruct_one_sided(lin, "right", dx, 1)[0] == lin[-1]
    with pytest.raises(ValueError):
        reconstruct_one_sided(lin, "middle", dx, 2)


def test_point_jets_interpolate_between_faces():
    rng = np.random.default_rng(0)
    coeffs = rng.normal(size=(4, 3, 1))
    mid = point_jets(coeffs, 0.5, 0.0)
    np.testing.assert_allclose(mid[:, 0], coeffs[:, 0])
    np.testing.assert_allclose(mid[:, 1], coeffs[:, 1] / 0.5)
    np.testing.assert_allclose(mid[:, 2], 2 * coeffs[:, 2] / 0.25)


def test_invalid_mode():
    with pytest.raises(ValueError):
        reconstruct(np.ones(5), 0.1, 2, mode="eno")
