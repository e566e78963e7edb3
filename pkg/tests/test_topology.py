import numpy as np
import pytest

import oracles
from conftest import ring_nodes
from rodfilm.errors import CurvesTooClose
from rodfilm.topology import (
    ClosedPolyline,
    LinkingMatrix,
    chain_structure_holds,
    curve_separation,
    global_radius,
    linking_matrix,
    linking_number,
    tube_is_embedded,
)


def torus_link_component(phase, n=512, R=2.0, r=0.8):
    # one component of the two-component link on the torus: one turn
    # around the axis, two around the core circle
    t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    rad = R + r * np.cos(2.0 * t + phase)
    return np.stack([rad * np.cos(t), rad * np.sin(t), r * np.sin(2.0 * t + phase)], axis=1)


def test_hopf_pair_links_once():
    a = ClosedPolyline(ring_nodes(512))
    b = ClosedPolyline(ring_nodes(512, center=(1.0, 0.0, 0.0), axis="x"))
    lk = linking_number(a, b)
    assert abs(lk.value) == 1
    assert lk.quality < 1e-2
    assert lk.value == oracles.projection_link(a.nodes, b.nodes)


def test_split_pair_unlinked():
    a = ClosedPolyline(ring_nodes(256))
    b = ClosedPolyline(ring_nodes(256, center=(5.0, 0.0, 0.0)))
    assert linking_number(a, b).value == 0
    assert oracles.projection_link(a.nodes, b.nodes) == 0


def test_torus_link_links_twice():
    a = ClosedPolyline(torus_link_component(0.0))
    b = ClosedPolyline(torus_link_component(np.pi))
    lk = linking_number(a, b)
    assert abs(lk.value) == 2
    assert lk.quality < 1e-2
    assert lk.value == oracles.projection_link(a.nodes, b.nodes)


def test_linking_orientation_flip_negates():
    a = ClosedPolyline(ring_nodes(256))
    b = ClosedPolyline(ring_nodes(256, center=(1.0, 0.0, 0.0), axis="x"))
    forward = linking_number(a, b).value
    rev = ClosedPolyline(b.nodes[::-1])
    assert linking_number(a, rev).value == -forward


def test_touching_curves_rejected():
    a = ClosedPolyline(ring_nodes(64))
    b = ClosedPolyline(ring_nodes(64) + [1e-9, 0.0, 0.0])
    with pytest.raises(CurvesTooClose):
        linking_number(a, b)


def test_curve_separation_exact_for_parallel_rings():
    a = ClosedPolyline(ring_nodes(128))
    b = ClosedPolyline(ring_nodes(128, center=(0.0, 0.0, 0.7)))
    assert np.isclose(curve_separation(a, b), 0.7, rtol=1e-9)


def test_global_radius_of_circle_is_radius():
    for R in (1.0, 2.5):
        c = ClosedPolyline(ring_nodes(256, R=R))
        assert abs(global_radius(c) - R) <= 1e-3 * R


def test_global_radius_matches_direct_scan(rng):
    nodes = oracles.fourier_loop(rng, n=24)
    c = ClosedPolyline(nodes)
    direct = oracles.min_circumradius_direct(nodes)
    assert np.isclose(global_radius(c), direct, rtol=1e-10)
    assert np.isclose(global_radius(c, accelerated=True), direct, rtol=1e-10)


def test_tube_embedded_consistency(rng):
    # r <= Delta exactly when the tube embeds, across random smooth loops
    for _ in range(50):
        nodes = oracles.fourier_loop(rng, n=96)
        c = ClosedPolyline(nodes)
        delta = global_radius(c)
        assert tube_is_embedded(c, 0.95 * delta)
        assert not tube_is_embedded(c, 1.05 * delta)


def test_linking_matrix_and_chain_structure():
    chain = [
        ClosedPolyline(ring_nodes(128)),
        ClosedPolyline(ring_nodes(128, center=(1.4, 0.0, 0.0), axis="x")),
        ClosedPolyline(ring_nodes(128, center=(2.8, 0.0, 0.0))),
    ]
    M = linking_matrix(chain)
    vals = M.values
    assert vals.shape == (3, 3)
    assert abs(vals[0, 1]) == 1 and abs(vals[1, 2]) == 1
    assert vals[0, 2] == 0 and np.all(np.diag(vals) == 0)
    assert np.array_equal(vals, vals.T)
    assert chain_structure_holds(M)
    split = LinkingMatrix(np.zeros((3, 3), dtype=int))
    assert not chain_structure_holds(split)


def test_polyline_validation():
    with pytest.raises(ValueError):
        ClosedPolyline(np.zeros((2, 3)))  # fewer than 3 nodes
    with pytest.raises(ValueError):
        ClosedPolyline(np.zeros((4, 2)))
