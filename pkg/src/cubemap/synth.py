"""Synthetic application graphs for experiments and tests."""

from __future__ import annotations

import math
import random

import numpy as np
from scipy.spatial import cKDTree

from .graph import Graph, bfs_distances


def random_geometric_graph(
    n: int, avg_degree: float, seed: int, *, connect: bool = True
) -> Graph:
    """Unit-weight random geometric graph on n points in the unit square.

    The radius is chosen for the requested expected degree. With
    ``connect=True`` the components are chained together by single edges
    between their lowest-id vertices, so the result is connected without
    noticeably changing its local structure.
    """
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    radius = math.sqrt(avg_degree / (math.pi * n))
    pairs = cKDTree(pts).query_pairs(radius, output_type="ndarray")
    if pairs.size:
        a = np.minimum(pairs[:, 0], pairs[:, 1]).astype(np.int64)
        b = np.maximum(pairs[:, 0], pairs[:, 1]).astype(np.int64)
        order = np.lexsort((b, a))
        a, b = a[order], b[order]
    else:
        a = b = np.zeros(0, dtype=np.int64)
    g = Graph.from_edge_arrays(n, a, b, np.ones(a.size, dtype=np.int64))
    if not connect:
        return g

    reps = []
    seen = np.zeros(n, dtype=bool)
    for v in range(n):
        if not seen[v]:
            seen |= bfs_distances(g, v) >= 0
            reps.append(v)
    if len(reps) == 1:
        return g
    extra_a = np.asarray(reps[:-1], dtype=np.int64)
    extra_b = np.asarray(reps[1:], dtype=np.int64)
    return Graph.from_edge_arrays(
        n,
        np.concatenate([a, extra_a]),
        np.concatenate([b, extra_b]),
        np.ones(a.size + extra_a.size, dtype=np.int64),
    )


def random_connected_graph(
    n: int, extra_edges: int, max_weight: int, rng: random.Random
) -> Graph:
    """Random spanning tree plus extra random edges, weights in [1, max_weight]."""
    if n < 1:
        raise ValueError("need n >= 1")
    edges: dict[tuple[int, int], int] = {}
    for v in range(1, n):
        u = rng.randrange(v)
        edges[(u, v)] = rng.randint(1, max_weight)
    attempts = 0
    while len(edges) < n - 1 + extra_edges and attempts < 20 * (extra_edges + 1):
        attempts += 1
        u, v = rng.randrange(n), rng.randrange(n)
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        if key in edges:
            continue
        edges[key] = rng.randint(1, max_weight)
    return Graph.from_edges(n, [(u, v, w) for (u, v), w in edges.items()])
