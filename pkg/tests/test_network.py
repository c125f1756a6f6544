import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from adernet.cases import builtin_case
from adernet.config import EdgeConfig, NetworkConfig, VertexConfig
from adernet.network import EndpointFrame, NetworkError, build_network, mirror_scalar_jet, to_vertex_frame


def test_to_vertex_frame_examples():
    keep, flip = EndpointFrame.of("E1", "left"), EndpointFrame.of("E1", "right")
    np.testing.assert_array_equal(to_vertex_frame([2.0, 1.0], keep), [2.0, 1.0])
    np.testing.assert_array_equal(to_vertex_frame([2.0, 1.0], flip), [2.0, -1.0])
    jet = np.array([[2.0, 0.0], [0.5, 0.0]])
    out = to_vertex_frame(jet, flip, spatial=True)
    assert out[0, 0] == 2.0 and out[1, 0] == -0.5


@settings(max_examples=50, deadline=None)
@given(u=arrays(float, (4, 2), elements=st.floats(-10, 10)), end=st.sampled_from(["left", "right"]), spatial=st.booleans())
def test_frame_is_an_involution(u, end, spatial):
    f = EndpointFrame.of("E", end)
    np.testing.assert_array_equal(to_vertex_frame(to_vertex_frame(u, f, spatial), f, spatial), u)
    b = u[:, 0]
    np.testing.assert_array_equal(mirror_scalar_jet(mirror_scalar_jet(b, f.mirror), f.mirror), b)


def test_bad_end_rejected():
    with pytest.raises(NetworkError):
        EndpointFrame.of("E1", "middle")


def test_split_circle_network():
    net = build_network(builtin_case("split_circle", 50))
    assert len(net.edges) == 3 and len(net.vertices) == 2
    assert all(v.l == 2 for v in net.vertices.values())
    e = net.edges["E1"]
    assert e.dx * e.cells == pytest.approx(25.0, abs=1e-14 * 25)
    assert net.external_ends() == []


def test_diamond_degrees():
    net = build_network(builtin_case("diamond", 50))
    assert len(net.edges) == 6
    assert sorted(net.degrees().values()) == [3, 3, 3, 3]


def single_edge(cells=10, h=1.0):
    return NetworkConfig([EdgeConfig("E1", 5.0, cells, {"type": "constant", "h": h})], [])


def test_single_edge_has_no_vertices():
    net = build_network(single_edge())
    assert net.vertices == {}
    assert net.external_ends() == [("E1", "left"), ("E1", "right")]
    assert net.owner("E1", "left") is None


def test_endpoint_on_two_vertices_rejected():
    cfg = single_edge()
    cfg.vertices = [VertexConfig("V1", [("E1", "left")]), VertexConfig("V2", [("E1", "left")])]
    with pytest.raises(NetworkError, match="both"):
        build_network(cfg)


def test_dangling_endpoint_rejected():
    cfg = single_edge()
    cfg.vertices = [VertexConfig("V1", [("E9", "left")])]
    with pytest.raises(NetworkError, match="unknown edge"):
        build_network(cfg)


def test_inadmissible_initial_data_rejected():
    with pytest.raises(NetworkError, match="inadmissible"):
        build_network(single_edge(h=-1.0))


def test_manhole_needs_initial_state():
    cfg = single_edge()
    cfg.vertices = [VertexConfig("V1", [("E1", "left")], "manhole", {"A_m": 1.0})]
    with pytest.raises(NetworkError, match="initial ODE state"):
        build_network(cfg)


def test_cell_averages_are_exact_for_piecewise_data():
    net = build_network(builtin_case("tree", 100))
    e1 = net.edges["E1"]
    x = e1.faces
    cell = np.searchsorted(x, 18.5) - 1
    frac = (18.5 - x[cell]) / e1.dx
    assert e1.averages[cell, 0] == pytest.approx(3.0 * frac + 2.0 * (1 - frac), abs=1e-14)
    assert e1.averages[0, 0] == pytest.approx(3.0, abs=1e-14)
    assert e1.averages[-1, 0] == pytest.approx(2.0, abs=1e-14)
