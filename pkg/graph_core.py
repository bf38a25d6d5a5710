#!/usr/bin/env python3
"""
Graph construction and the matrices derived from it.

Builds validated undirected graphs and the dense bundle used everywhere
else: adjacency A, degree D, Laplacian L = D - A, the local scaling
S = (I + D)^-1, the localized projection Q = I - S(I + A) = S L, and the
exact projections onto the column space and null space of L.
"""

import logging
from dataclasses import dataclass

import networkx as nx
import numpy as np

from errors import (
    DuplicateEdgeError,
    IndexOutOfRangeError,
    NotConnectedError,
    SelfLoopError,
    ValidationError,
)

logger = logging.getLogger(__name__)

# Eigenvalues below this (relative to max(1, lambda_max)) count as zero
ZERO_EIG_TOL = 1e-9

TOPOLOGIES = ('cycle', 'path', 'complete')


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph over nodes 0..n-1, edges stored as (low, high)."""
    n: int
    edges: frozenset

    def neighbors(self, i):
        """Sorted neighbours of node i."""
        return tuple(sorted(
            (b if a == i else a) for a, b in self.edges if i in (a, b)
        ))

    def degrees(self):
        d = np.zeros(self.n, dtype=int)
        for a, b in self.edges:
            d[a] += 1
            d[b] += 1
        return d

    def sorted_edges(self):
        return sorted(self.edges)


def build_graph(n, edges):
    """Validate a node count and edge list and return a Graph."""
    n = int(n)
    if n < 1:
        raise ValidationError('n', f"node count must be >= 1, got {n}")

    seen = set()
    for pair in edges:
        i, j = (int(v) for v in pair)
        for v in (i, j):
            if v < 0 or v >= n:
                raise IndexOutOfRangeError(v, n)
        if i == j:
            raise SelfLoopError(i)
        key = (min(i, j), max(i, j))
        if key in seen:
            raise DuplicateEdgeError(i, j)
        seen.add(key)

    return Graph(n=n, edges=frozenset(seen))


def cycle_graph(n):
    if n < 3:
        raise ValidationError('n', f"a cycle needs at least 3 nodes, got {n}")
    return build_graph(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n):
    return build_graph(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n):
    return build_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def graph_from_topology(topology, n):
    """Graph for a scenario `topology` keyword."""
    builders = {'cycle': cycle_graph, 'path': path_graph, 'complete': complete_graph}
    if topology not in builders:
        raise ValidationError('topology', f"unknown topology '{topology}' (expected one of {', '.join(TOPOLOGIES)})")
    return builders[topology](n)


def random_connected_graph(n, rng, p=0.3):
    """
    Random connected graph: a random spanning tree united with a G(n, p) sample.

    Deterministic for a given numpy Generator state.
    """
    order = rng.permutation(n)
    edges = set()
    for k in range(1, n):
        a, b = int(order[k]), int(order[rng.integers(k)])
        edges.add((min(a, b), max(a, b)))

    extra = nx.gnp_random_graph(n, p, seed=int(rng.integers(2**31 - 1)))
    for a, b in extra.edges():
        edges.add((min(a, b), max(a, b)))

    return build_graph(n, sorted(edges))


def to_networkx(g):
    nxg = nx.Graph()
    nxg.add_nodes_from(range(g.n))
    nxg.add_edges_from(g.edges)
    return nxg


def is_connected(g):
    """True iff a single component covers all nodes."""
    if g.n == 1:
        return True
    return nx.is_connected(to_networkx(g))


@dataclass(frozen=True, eq=False)
class GraphMatrices:
    """Dense read-only matrices derived from a connected Graph."""
    adjacency: np.ndarray
    degree: np.ndarray
    laplacian: np.ndarray
    scaling: np.ndarray
    localized_projection: np.ndarray
    proj_col: np.ndarray
    proj_null: np.ndarray
    local_average: np.ndarray

    @property
    def n(self):
        return self.adjacency.shape[0]


def _frozen(mat):
    mat = np.array(mat, dtype=float)
    mat.flags.writeable = False
    return mat


def build_matrices(g):
    """Build the GraphMatrices bundle; the graph must be connected."""
    if not is_connected(g):
        raise NotConnectedError(f"graph with {g.n} nodes and {len(g.edges)} edges is not connected")

    n = g.n
    identity = np.eye(n)
    adjacency = np.zeros((n, n))
    for i, j in g.edges:
        adjacency[i, j] = 1.0
        adjacency[j, i] = 1.0

    d = adjacency.sum(axis=1)
    degree = np.diag(d)
    laplacian = degree - adjacency
    scaling = np.diag(1.0 / (d + 1.0))
    local_average = scaling @ (identity + adjacency)
    localized_projection = identity - local_average

    # P_L from the eigenvectors of L with nonzero eigenvalue
    eigvals, eigvecs = np.linalg.eigh(laplacian)
    tol = ZERO_EIG_TOL * max(1.0, float(eigvals[-1]))
    nonzero = eigvecs[:, np.abs(eigvals) >= tol]
    proj_col = nonzero @ nonzero.T
    proj_null = identity - proj_col

    logger.debug("built matrices for n=%d, |E|=%d, lambda_2=%.6g",
                 n, len(g.edges), eigvals[1] if n > 1 else 0.0)

    return GraphMatrices(
        adjacency=_frozen(adjacency),
        degree=_frozen(degree),
        laplacian=_frozen(laplacian),
        scaling=_frozen(scaling),
        localized_projection=_frozen(localized_projection),
        proj_col=_frozen(proj_col),
        proj_null=_frozen(proj_null),
        local_average=_frozen(local_average),
    )
