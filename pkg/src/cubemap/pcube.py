"""Recognize partial cubes and label them with Hamming-isometric bitvectors.

A connected bipartite graph is labeled by computing, for seed edges taken
in lexicographic order, the set of edges whose endpoints are split the same
way by shortest-path distances (the convex cut through the seed edge). Each
such edge class becomes one bit position: a vertex gets bit j = 0 iff it is
on the seed endpoint's side of cut j. For true partial cubes the classes
partition the edge set and the resulting labels reproduce graph distance as
Hamming distance; both properties are checked, the second one exhaustively.

On even tori this produces one class per antipodal edge pair of each ring,
so a 2a x 2b torus gets dimension a + b. Counting the two slices of every
cut separately would double that, but only the a + b form is compatible
with exact Hamming-distance geometry, which everything downstream relies on.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, CubemapError
from .graph import Graph, GraphFormatError, bfs_all_pairs
from .util import popcount

# Class count budget; keeps full labels inside one 64-bit word downstream.
MAX_DIM = 32


class RejectReason(enum.Enum):
    NOT_BIPARTITE = "NotBipartite"
    OVERLAPPING_CLASSES = "OverlappingClasses"
    ISOMETRY_VIOLATION = "IsometryViolation"


class NotPartialCubeError(CubemapError):
    """The graph admits no Hamming-isometric labeling.

    ``witness`` is checkable by the caller: the offending edge for
    NOT_BIPARTITE, a pair (edge, seed_edge) whose classes overlap for
    OVERLAPPING_CLASSES, and a vertex pair with mismatched distances for
    ISOMETRY_VIOLATION.
    """

    def __init__(self, reason: RejectReason, witness: tuple):
        self.reason = reason
        self.witness = witness
        super().__init__(f"not a partial cube: {reason.value}, witness {witness}")


@dataclass(frozen=True)
class PcubeLabeling:
    """Per-vertex bit labels of width ``dim`` plus the edge-class index."""

    dim: int
    labels: list[int]
    class_of_edge: dict[tuple[int, int], int]

    @property
    def n(self) -> int:
        return len(self.labels)

    def label_hex(self, v: int) -> str:
        return f"{self.labels[v]:0{max(1, (self.dim + 3) // 4)}x}"


def _check_bipartite(g: Graph, dist: np.ndarray) -> None:
    # An edge whose endpoints sit at equal-parity distance from vertex 0
    # closes an odd cycle.
    eu, ev, _ = g.edge_arrays
    bad = np.flatnonzero((dist[0, eu] & 1) == (dist[0, ev] & 1))
    if bad.size:
        i = int(bad[0])
        raise NotPartialCubeError(
            RejectReason.NOT_BIPARTITE, (int(eu[i]), int(ev[i]))
        )


def theta_class(
    g: Graph, dist: np.ndarray, edge: tuple[int, int]
) -> tuple[set[tuple[int, int]], set[int], set[int]]:
    """Edges split by the distance comparison toward ``edge``'s endpoints.

    Returns (class edges as canonical (u, v) pairs, side of x, side of y).
    Caller must ensure the graph is connected and bipartite, so the two
    sides partition the vertices with no ties.
    """
    x, y = edge
    on_y_side = dist[:, x] > dist[:, y]
    eu, ev, _ = g.edge_arrays
    crossing = on_y_side[eu] != on_y_side[ev]
    cls = {(int(u), int(v)) for u, v in zip(eu[crossing], ev[crossing])}
    w_xy = set(np.flatnonzero(~on_y_side).tolist())
    w_yx = set(np.flatnonzero(on_y_side).tolist())
    return cls, w_xy, w_yx


def _isometry_witness(
    dist: np.ndarray, labels: np.ndarray
) -> tuple[int, int] | None:
    x = labels[:, None] ^ labels[None, :]
    ham = popcount(x.ravel()).reshape(x.shape)
    bad = np.argwhere(ham != dist)
    if bad.size:
        return int(bad[0][0]), int(bad[0][1])
    return None


def label_partial_cube(g: Graph) -> PcubeLabeling:
    """Label a connected graph, or raise NotPartialCubeError.

    Seed edges are taken in (min endpoint, max endpoint) order; bit j of a
    vertex label is 0 iff the vertex lies on the side of seed j's first
    endpoint. A final exhaustive Hamming-vs-BFS check certifies the result.
    """
    if g.n == 0:
        raise GraphFormatError("cannot label an empty graph")
    dist = bfs_all_pairs(g)  # raises DisconnectedGraphError
    _check_bipartite(g, dist)

    eu, ev, _ = g.edge_arrays
    n_edges = eu.size
    class_of = np.full(n_edges, -1, dtype=np.int64)
    labels = np.zeros(g.n, dtype=np.uint64)
    dim = 0
    for idx in range(n_edges):
        if class_of[idx] >= 0:
            continue
        if dim >= MAX_DIM:
            raise CapacityError(
                f"more than {MAX_DIM} edge classes; topology too large to label"
            )
        x, y = int(eu[idx]), int(ev[idx])
        on_y_side = dist[:, x] > dist[:, y]
        members = np.flatnonzero(on_y_side[eu] != on_y_side[ev])
        clash = members[class_of[members] >= 0]
        if clash.size:
            f = int(clash[0])
            raise NotPartialCubeError(
                RejectReason.OVERLAPPING_CLASSES,
                ((int(eu[f]), int(ev[f])), (x, y)),
            )
        class_of[members] = dim
        labels |= on_y_side.astype(np.uint64) << np.uint64(dim)
        dim += 1

    witness = _isometry_witness(dist, labels)
    if witness is not None:
        raise NotPartialCubeError(RejectReason.ISOMETRY_VIOLATION, witness)
    class_of_edge = {
        (int(u), int(v)): int(c) for u, v, c in zip(eu, ev, class_of)
    }
    return PcubeLabeling(dim=dim, labels=labels.tolist(), class_of_edge=class_of_edge)


def verify_isometry(g: Graph, lab: PcubeLabeling) -> bool:
    """Exhaustively check Hamming(labels) == BFS distance for all pairs."""
    if len(lab.labels) != g.n:
        return False
    dist = bfs_all_pairs(g)
    labels = np.asarray(lab.labels, dtype=np.uint64)
    return _isometry_witness(dist, labels) is None


# --- labeled-topology JSON interchange ---


def labeling_to_json(g: Graph, lab: PcubeLabeling) -> dict:
    """Schema: {n, dim, edges: [[u, v], ...], labels: [hex, ...]}.

    Hex digits are big-endian over bit positions with bit 0 = class 0.
    """
    eu, ev, _ = g.edge_arrays
    return {
        "n": g.n,
        "dim": lab.dim,
        "edges": [[int(u), int(v)] for u, v in zip(eu, ev)],
        "labels": [lab.label_hex(v) for v in range(g.n)],
    }


def labeling_from_json(obj: dict) -> tuple[Graph, PcubeLabeling]:
    """Rebuild the graph and labeling; class ids are recovered from the labels."""
    try:
        n = int(obj["n"])
        dim = int(obj["dim"])
        edges = [(int(u), int(v), 1) for u, v in obj["edges"]]
        labels = [int(h, 16) for h in obj["labels"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphFormatError(f"bad labeled-topology JSON: {exc}") from exc
    if len(labels) != n:
        raise GraphFormatError("label count does not match n")
    if any(lb >> dim for lb in labels):
        raise GraphFormatError("label wider than declared dim")
    g = Graph.from_edges(n, edges)
    class_of_edge = {}
    for u, v, _ in g.edges():
        diff = labels[u] ^ labels[v]
        if diff == 0 or diff & (diff - 1):
            raise GraphFormatError(
                f"edge ({u},{v}) does not differ in exactly one bit"
            )
        class_of_edge[(u, v)] = diff.bit_length() - 1
    return g, PcubeLabeling(dim=dim, labels=labels, class_of_edge=class_of_edge)
