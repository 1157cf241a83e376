"""Initial mappings: identity from a partition, greedy baselines, BFS partitioner.

The greedy constructions are simple reference baselines, not tuned
reimplementations of any particular tool: both seed the heaviest
communication vertex on a PE of minimum eccentricity and then place one
vertex at a time, AllC scoring by totals (sum of weights to mapped
vertices, sum of distances to mapped neighbors' PEs) and Min by single
bests (max such weight, min such distance). All ties break toward the
lowest id, so both are deterministic.
"""

from __future__ import annotations

import math
import random
from collections import deque
from typing import Sequence

import numpy as np

from .graph import Graph, Partition
from .pcube import PcubeLabeling


def identity_mapping(p: Partition, pl: PcubeLabeling) -> list[int]:
    """Block i goes to PE i; requires block count == PE count."""
    if p.k != pl.n:
        raise ValueError(f"partition has {p.k} blocks but topology has {pl.n} PEs")
    return p.block.tolist()


def mapping_from_assignment(p: Partition, assignment: Sequence[int]) -> list[int]:
    """Compose a per-block PE assignment with the partition."""
    if len(assignment) != p.k:
        raise ValueError("assignment must cover every block")
    table = list(assignment)
    return [table[b] for b in p.block.tolist()]


def _weight_matrix(gc: Graph) -> np.ndarray:
    w = np.zeros((gc.n, gc.n), dtype=np.int64)
    eu, ev, ew = gc.edge_arrays
    w[eu, ev] = ew
    w[ev, eu] = ew
    return w


def _greedy(gc: Graph, dist: np.ndarray, total_scoring: bool) -> list[int]:
    k = gc.n
    if dist.shape[0] != k:
        raise ValueError(
            f"communication graph has {k} vertices but topology has {dist.shape[0]} PEs"
        )
    w = _weight_matrix(gc)
    assignment = [-1] * k
    used = np.zeros(k, dtype=bool)
    big = np.iinfo(np.int64).max

    seed_c = int(np.argmax(w.sum(axis=1)))
    seed_p = int(np.argmin(dist.max(axis=1)))
    assignment[seed_c] = seed_p
    used[seed_p] = True
    mapped = np.zeros(k, dtype=bool)
    mapped[seed_c] = True

    # score[c]: connectivity of unmapped c to the mapped set; with one vertex
    # mapped, total and best-single scores coincide.
    score = w[:, seed_c].copy()
    for _ in range(k - 1):
        s = np.where(mapped, -1, score)
        c = int(np.argmax(s))
        images = [assignment[u] for u in gc.neighbors(c)[0].tolist() if assignment[u] >= 0]
        if images:
            d = dist[:, images].astype(np.int64)
            cost = d.sum(axis=1) if total_scoring else d.min(axis=1)
        else:
            cost = np.zeros(k, dtype=np.int64)
        p = int(np.argmin(np.where(used, big, cost)))
        assignment[c] = p
        used[p] = True
        mapped[c] = True
        if total_scoring:
            score += w[:, c]
        else:
            score = np.maximum(score, w[:, c])
    return assignment


def greedy_allc(gc: Graph, dist: np.ndarray) -> list[int]:
    """Total-volume / total-distance greedy bijection of blocks onto PEs."""
    return _greedy(gc, dist, total_scoring=True)


def greedy_min(gc: Graph, dist: np.ndarray) -> list[int]:
    """Best-single-edge / closest-PE greedy bijection of blocks onto PEs."""
    return _greedy(gc, dist, total_scoring=False)


def grow_partition(ga: Graph, k: int, eps: float, rng: random.Random) -> Partition:
    """Breadth-first block growing from k random seeds, respecting the cap.

    Blocks stop growing at (1 + eps) * ceil(n / k) vertices; anything left
    unreached joins the least-full adjacent block with room, falling back
    to the globally least-full block. The result always satisfies the
    balance constraint it was given.
    """
    n = ga.n
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    cap = int((1.0 + eps) * math.ceil(n / k))
    indptr, nbrs, _ = ga.adj_lists
    block = [-1] * n
    sizes = [0] * k
    queue = deque((s, b) for b, s in enumerate(rng.sample(range(n), k)))
    while queue:
        v, b = queue.popleft()
        if block[v] >= 0 or sizes[b] >= cap:
            continue
        block[v] = b
        sizes[b] += 1
        for i in range(indptr[v], indptr[v + 1]):
            if block[nbrs[i]] < 0:
                queue.append((nbrs[i], b))
    for v in range(n):
        if block[v] >= 0:
            continue
        adjacent = {
            block[nbrs[i]]
            for i in range(indptr[v], indptr[v + 1])
            if block[nbrs[i]] >= 0 and sizes[block[nbrs[i]]] < cap
        }
        pool = adjacent if adjacent else (b for b in range(k) if sizes[b] < cap)
        b = min(pool, key=lambda x: (sizes[x], x))
        block[v] = b
        sizes[b] += 1
    return Partition(np.asarray(block), k)
