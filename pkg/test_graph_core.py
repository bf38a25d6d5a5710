#!/usr/bin/env python3
"""Tests for graph construction and the derived matrices."""

import numpy as np
import pytest

from errors import DuplicateEdgeError, IndexOutOfRangeError, NotConnectedError, SelfLoopError, ValidationError
from graph_core import (
    build_graph,
    build_matrices,
    complete_graph,
    graph_from_topology,
    is_connected,
    path_graph,
    random_connected_graph,
)


def test_p2_matrices(p2_matrices):
    gm = p2_matrices
    np.testing.assert_array_equal(gm.adjacency, [[0, 1], [1, 0]])
    np.testing.assert_array_equal(gm.degree, np.eye(2))
    np.testing.assert_array_equal(gm.laplacian, [[1, -1], [-1, 1]])
    np.testing.assert_allclose(gm.scaling, 0.5 * np.eye(2))
    np.testing.assert_allclose(gm.localized_projection, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-15)
    np.testing.assert_allclose(gm.proj_col, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-12)
    np.testing.assert_allclose(gm.proj_null, [[0.5, 0.5], [0.5, 0.5]], atol=1e-12)


def test_c6_laplacian_spectrum(c6_matrices):
    eigenvalues = np.linalg.eigvalsh(c6_matrices.laplacian)
    np.testing.assert_allclose(eigenvalues, [0, 1, 1, 3, 3, 4], atol=1e-12)


def test_c6_localized_projection(c6, c6_matrices):
    q = c6_matrices.localized_projection
    np.testing.assert_allclose(np.diag(q), 2 / 3)
    assert q[0, 1] == pytest.approx(-1 / 3)
    assert q[0, 5] == pytest.approx(-1 / 3)
    assert q[0, 3] == 0.0
    np.testing.assert_allclose(q, c6_matrices.scaling @ c6_matrices.laplacian, atol=1e-15)
    assert c6.neighbors(0) == (1, 5)


def test_local_average_rows_sum_to_one(c6_matrices):
    np.testing.assert_allclose(c6_matrices.local_average.sum(axis=1), 1.0)
    np.testing.assert_allclose(
        c6_matrices.local_average + c6_matrices.localized_projection, np.eye(6), atol=1e-15)


def test_projector_matches_centering(c6_matrices):
    centering = np.eye(6) - np.ones((6, 6)) / 6
    np.testing.assert_allclose(c6_matrices.proj_col, centering, atol=1e-12)


def test_matrices_are_read_only(c6_matrices):
    with pytest.raises(ValueError):
        c6_matrices.laplacian[0, 0] = 5.0


def test_build_graph_rejects_bad_edges():
    with pytest.raises(SelfLoopError):
        build_graph(3, [(0, 1), (1, 1)])
    with pytest.raises(IndexOutOfRangeError):
        build_graph(3, [(0, 3)])
    with pytest.raises(DuplicateEdgeError):
        build_graph(3, [(0, 1), (1, 0)])
    with pytest.raises(ValidationError):
        build_graph(0, [])


def test_disconnected_graph_has_no_matrices():
    g = build_graph(4, [(0, 1), (2, 3)])
    assert not is_connected(g)
    with pytest.raises(NotConnectedError):
        build_matrices(g)


def test_single_node_graph():
    gm = build_matrices(build_graph(1, []))
    np.testing.assert_array_equal(gm.laplacian, [[0.0]])
    np.testing.assert_array_equal(gm.proj_col, [[0.0]])
    np.testing.assert_array_equal(gm.proj_null, [[1.0]])


def test_topology_builders():
    assert len(path_graph(5).edges) == 4
    assert len(complete_graph(5).edges) == 10
    assert graph_from_topology('cycle', 6).degrees().tolist() == [2] * 6
    with pytest.raises(ValidationError):
        graph_from_topology('star', 6)
    with pytest.raises(ValidationError):
        graph_from_topology('cycle', 2)


def test_random_graphs_are_connected_and_reproducible():
    first = [random_connected_graph(8, np.random.default_rng(seed)) for seed in range(20)]
    again = [random_connected_graph(8, np.random.default_rng(seed)) for seed in range(20)]
    assert all(is_connected(g) for g in first)
    assert first == again


@pytest.mark.parametrize('seed', range(5))
def test_degree_identity_on_random_graphs(seed):
    g = random_connected_graph(7, np.random.default_rng(seed))
    gm = build_matrices(g)
    np.testing.assert_allclose(np.eye(7) + gm.adjacency, np.linalg.inv(gm.scaling) - gm.laplacian, atol=1e-12)


@pytest.mark.parametrize('seed', range(5))
def test_projector_algebra_on_random_graphs(seed):
    gm = build_matrices(random_connected_graph(7, np.random.default_rng(seed)))
    col, null, lap = gm.proj_col, gm.proj_null, gm.laplacian
    np.testing.assert_allclose(null @ null, null, atol=1e-12)
    np.testing.assert_allclose(col @ null, 0.0, atol=1e-12)
    np.testing.assert_allclose(col @ lap, lap, atol=1e-12)
    np.testing.assert_allclose(lap @ col, lap, atol=1e-12)
    np.testing.assert_allclose(null, np.ones((7, 7)) / 7, atol=1e-12)
