"""Undirected weighted graphs and their plumbing.

Holds the CSR-backed graph container, METIS/Chaco text I/O, generators for
grid/torus/hypercube processor topologies, unweighted all-pairs BFS
distances, and block contraction (building a communication graph from a
partition). Vertex ids are 0-based in memory; the METIS format's 1-based
ids are shifted at the parse/serialize boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CubemapError

TOPOLOGY_KINDS = ("grid2d", "grid3d", "torus2d", "torus3d", "hypercube", "file")


class GraphFormatError(CubemapError):
    """Malformed graph/partition/mapping text."""


class DisconnectedGraphError(CubemapError):
    """An operation that needs finite distances got a disconnected graph."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph with positive integer edge weights, CSR adjacency.

    Each undirected edge is stored twice (both directions); ``m`` counts it
    once. Adjacency is sorted by neighbor id, contains no self-loops and no
    duplicate entries, and is symmetric with equal weights by construction.
    """

    n: int
    indptr: np.ndarray  # int64, shape (n+1,)
    nbr: np.ndarray     # int64, shape (2m,)
    wt: np.ndarray      # int64, shape (2m,)

    @property
    def m(self) -> int:
        return self.nbr.size // 2

    def degree(self, u: int) -> int:
        return int(self.indptr[u + 1] - self.indptr[u])

    def neighbors(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[u], self.indptr[u + 1]
        return self.nbr[lo:hi], self.wt[lo:hi]

    @cached_property
    def adj_lists(self) -> tuple[list[int], list[int], list[int]]:
        """(indptr, nbr, wt) as plain lists, for tight Python loops."""
        return self.indptr.tolist(), self.nbr.tolist(), self.wt.tolist()

    @cached_property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(eu, ev, ew) with eu < ev, one row per undirected edge, (u, v)-sorted."""
        row = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
        keep = self.nbr > row
        return row[keep], self.nbr[keep], self.wt[keep]

    def edges(self) -> Iterable[tuple[int, int, int]]:
        eu, ev, ew = self.edge_arrays
        return zip(eu.tolist(), ev.tolist(), ew.tolist())

    @property
    def total_weight(self) -> int:
        eu, ev, ew = self.edge_arrays
        return int(ew.sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.nbr, other.nbr)
            and np.array_equal(self.wt, other.wt)
        )

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int, int]]) -> "Graph":
        """Build from (u, v, w) triples, validating the container invariants."""
        eu, ev, ew = [], [], []
        seen = set()
        for u, v, w in edges:
            if u == v:
                raise GraphFormatError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"edge ({u},{v}) out of range for n={n}")
            if int(w) < 1:
                raise GraphFormatError(f"edge ({u},{v}) has non-positive weight {w}")
            key = (u, v) if u < v else (v, u)
            if key in seen:
                raise GraphFormatError(f"duplicate edge ({key[0]},{key[1]})")
            seen.add(key)
            eu.append(u)
            ev.append(v)
            ew.append(int(w))
        return cls.from_edge_arrays(
            n,
            np.asarray(eu, dtype=np.int64),
            np.asarray(ev, dtype=np.int64),
            np.asarray(ew, dtype=np.int64),
        )

    @classmethod
    def from_edge_arrays(
        cls, n: int, eu: np.ndarray, ev: np.ndarray, ew: np.ndarray
    ) -> "Graph":
        """Build from parallel edge arrays (one row per undirected edge, pre-validated)."""
        src = np.concatenate([eu, ev])
        dst = np.concatenate([ev, eu])
        w2 = np.concatenate([ew, ew])
        order = np.argsort(src * np.int64(n) + dst)
        src, dst, w2 = src[order], dst[order], w2[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(n=n, indptr=indptr, nbr=dst, wt=w2)


@dataclass(frozen=True)
class TopologySpec:
    """Parsed processor-topology request, e.g. grid2d:16x16 or hypercube:8."""

    kind: str
    dims: tuple[int, ...] = ()
    path: str | None = None

    def __post_init__(self):
        if self.kind not in TOPOLOGY_KINDS:
            raise ValueError(f"unknown topology kind {self.kind!r}")
        if self.kind == "file":
            if not self.path:
                raise ValueError("file topology needs a path")
            return
        if self.kind == "hypercube":
            if len(self.dims) != 1 or self.dims[0] < 1:
                raise ValueError("hypercube takes one dimension >= 1")
        else:
            want = 2 if self.kind.endswith("2d") else 3
            if len(self.dims) != want or any(d < 2 for d in self.dims):
                raise ValueError(f"{self.kind} takes {want} extents >= 2")

    def __str__(self) -> str:
        if self.kind == "file":
            return f"file:{self.path}"
        return f"{self.kind}:" + "x".join(str(d) for d in self.dims)


def parse_topology_spec(text: str) -> TopologySpec:
    """Parse a CLI topology string like 'torus3d:8x8x8' or 'file:net.graph'."""
    kind, _, rest = text.partition(":")
    if kind == "file":
        return TopologySpec(kind="file", path=rest)
    if kind not in TOPOLOGY_KINDS:
        raise ValueError(f"unknown topology kind {kind!r}")
    try:
        dims = tuple(int(d) for d in rest.split("x")) if rest else ()
    except ValueError as exc:
        raise ValueError(f"bad dimensions in topology spec {text!r}") from exc
    return TopologySpec(kind=kind, dims=dims)


def generate_topology(spec: TopologySpec) -> Graph:
    """Deterministic topology construction.

    Grids and tori number vertices row-major over their extents; the
    hypercube uses the binary index. Tori with an extent of 2 collapse the
    wrap-around edge onto the lattice edge instead of duplicating it. Odd
    tori are generated as requested; whether they admit an isometric bit
    labeling is decided later by the labeler, not here.
    """
    if spec.kind == "file":
        return parse_metis(Path(spec.path).read_text())
    if spec.kind == "hypercube":
        d = spec.dims[0]
        n = 1 << d
        edges = [(v, v | (1 << b), 1) for v in range(n) for b in range(d) if not v & (1 << b)]
        return Graph.from_edges(n, edges)

    dims = spec.dims
    wrap = spec.kind.startswith("torus")
    strides = [1] * len(dims)
    for i in range(len(dims) - 2, -1, -1):
        strides[i] = strides[i + 1] * dims[i + 1]

    edges = []
    for vid in range(math.prod(dims)):
        rem = vid
        coord = []
        for s in strides:
            coord.append(rem // s)
            rem %= s
        for axis, ext in enumerate(dims):
            c = coord[axis]
            if c + 1 < ext:
                edges.append((vid, vid + strides[axis], 1))
            elif wrap and ext > 2:
                edges.append((vid - (ext - 1) * strides[axis], vid, 1))
    return Graph.from_edges(math.prod(dims), edges)


def parse_metis(text: str) -> Graph:
    """Parse METIS/Chaco text into a Graph (1-based ids shifted to 0-based).

    Supports the optional edge-weight flag in the format field; vertex
    weights/sizes are rejected. The adjacency must be symmetric with equal
    weights on both directions, and the header's edge count must match.
    """
    lines = [ln for ln in text.splitlines() if not ln.lstrip().startswith("%")]
    if not lines:
        raise GraphFormatError("empty graph file")
    header = lines[0].split()
    if len(header) < 2:
        raise GraphFormatError(f"malformed header {lines[0]!r}")
    try:
        n, m_header = int(header[0]), int(header[1])
    except ValueError as exc:
        raise GraphFormatError(f"malformed header {lines[0]!r}") from exc
    if n < 0 or m_header < 0:
        raise GraphFormatError(f"malformed header {lines[0]!r}")
    has_ew = False
    if len(header) >= 3:
        fmt = header[2].zfill(3)
        if len(header) > 4 or len(fmt) != 3 or any(c not in "01" for c in fmt):
            raise GraphFormatError(f"malformed header {lines[0]!r}")
        if fmt[0] == "1" or fmt[1] == "1":
            raise GraphFormatError("vertex weights/sizes are not supported")
        has_ew = fmt[2] == "1"
        if len(header) == 4:
            try:
                ncon = int(header[3])
            except ValueError as exc:
                raise GraphFormatError(f"malformed header {lines[0]!r}") from exc
            if ncon > 1:
                raise GraphFormatError("multiple vertex weight constraints are not supported")
    body = lines[1:]
    if len(body) < n:
        raise GraphFormatError(f"expected {n} vertex lines, found {len(body)}")
    if any(ln.strip() for ln in body[n:]):
        raise GraphFormatError("trailing non-blank lines after adjacency")

    adj: list[dict[int, int]] = [dict() for _ in range(n)]
    entries = 0
    for u in range(n):
        tokens = body[u].split()
        if has_ew:
            if len(tokens) % 2:
                raise GraphFormatError(f"vertex {u + 1}: odd token count with edge weights")
            pairs = [(tokens[i], tokens[i + 1]) for i in range(0, len(tokens), 2)]
        else:
            pairs = [(t, "1") for t in tokens]
        for vtok, wtok in pairs:
            try:
                v1, w = int(vtok), int(wtok)
            except ValueError as exc:
                raise GraphFormatError(f"vertex {u + 1}: bad token {vtok!r}/{wtok!r}") from exc
            if not 1 <= v1 <= n:
                raise GraphFormatError(f"vertex {u + 1}: neighbor {v1} out of range")
            v = v1 - 1
            if v == u:
                raise GraphFormatError(f"vertex {u + 1}: self-loop")
            if w <= 0:
                raise GraphFormatError(f"edge ({u + 1},{v1}): weight {w} <= 0")
            if v in adj[u]:
                raise GraphFormatError(f"vertex {u + 1}: duplicate neighbor {v1}")
            adj[u][v] = w
            entries += 1

    for u in range(n):
        for v, w in adj[u].items():
            if adj[v].get(u) != w:
                raise GraphFormatError(
                    f"asymmetric adjacency between vertices {u + 1} and {v + 1}"
                )
    if entries != 2 * m_header:
        raise GraphFormatError(
            f"header declares {m_header} edges, adjacency encodes {entries / 2:g}"
        )
    edges = [(u, v, w) for u in range(n) for v, w in adj[u].items() if u < v]
    return Graph.from_edges(n, edges)


def serialize_metis(g: Graph) -> str:
    """Serialize so that parse_metis(serialize_metis(g)) == g."""
    weighted = bool((g.wt != 1).any()) if g.wt.size else False
    out = [f"{g.n} {g.m} 001" if weighted else f"{g.n} {g.m}"]
    for u in range(g.n):
        nbrs, wts = g.neighbors(u)
        if weighted:
            out.append(" ".join(f"{v + 1} {w}" for v, w in zip(nbrs.tolist(), wts.tolist())))
        else:
            out.append(" ".join(str(v + 1) for v in nbrs.tolist()))
    return "\n".join(out) + "\n"


def bfs_distances(g: Graph, source: int) -> np.ndarray:
    """Unweighted shortest-path lengths from one source (-1 where unreachable)."""
    indptr, nbrs, _ = g.adj_lists
    dist_l = [-1] * g.n
    dist_l[source] = 0
    frontier = [source]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for u in frontier:
            for i in range(indptr[u], indptr[u + 1]):
                w = nbrs[i]
                if dist_l[w] < 0:
                    dist_l[w] = d
                    nxt.append(w)
        frontier = nxt
    return np.asarray(dist_l, dtype=np.int32)


def is_connected(g: Graph) -> bool:
    if g.n == 0:
        return True
    return bool((bfs_distances(g, 0) >= 0).all())


def bfs_all_pairs(g: Graph) -> np.ndarray:
    """All-pairs hop distances as an (n, n) int32 matrix.

    Raises DisconnectedGraphError if any pair is unreachable.
    """
    dist = np.empty((g.n, g.n), dtype=np.int32)
    for s in range(g.n):
        row = bfs_distances(g, s)
        if (row < 0).any():
            raise DisconnectedGraphError(f"vertex {s} cannot reach the whole graph")
        dist[s] = row
    return dist


@dataclass(frozen=True)
class Partition:
    """Per-vertex block assignment into blocks 0..k-1."""

    block: np.ndarray
    k: int

    def __post_init__(self):
        object.__setattr__(self, "block", np.asarray(self.block, dtype=np.int64))
        if self.k < 1:
            raise ValueError("partition needs k >= 1")
        if self.block.size and (self.block.min() < 0 or self.block.max() >= self.k):
            raise ValueError("block id out of range")

    @property
    def n(self) -> int:
        return self.block.size

    def block_sizes(self) -> np.ndarray:
        return np.bincount(self.block, minlength=self.k)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.block, other.block)


def contract_blocks(g: Graph, p: Partition) -> Graph:
    """Contract each block to a single vertex, summing crossing edge weights."""
    if p.n != g.n:
        raise ValueError(f"partition covers {p.n} vertices, graph has {g.n}")
    eu, ev, ew = g.edge_arrays
    bu, bv = p.block[eu], p.block[ev]
    keep = bu != bv
    a = np.minimum(bu[keep], bv[keep])
    b = np.maximum(bu[keep], bv[keep])
    key = a * p.k + b
    uniq, inv = np.unique(key, return_inverse=True)
    w = np.zeros(uniq.size, dtype=np.int64)
    np.add.at(w, inv, ew[keep])
    return Graph.from_edge_arrays(p.k, uniq // p.k, uniq % p.k, w)


# --- flat per-line integer files (partition and mapping conventions) ---


def _parse_int_lines(text: str, what: str) -> list[int]:
    values = []
    for lineno, ln in enumerate(text.splitlines(), start=1):
        s = ln.strip()
        if not s or s.startswith("%"):
            continue
        try:
            values.append(int(s))
        except ValueError as exc:
            raise GraphFormatError(f"{what} line {lineno}: not an integer: {s!r}") from exc
    return values


def read_partition(text: str, k: int | None = None) -> Partition:
    """One block id per line, line i = vertex i. k defaults to max id + 1."""
    blocks = _parse_int_lines(text, "partition")
    if not blocks:
        raise GraphFormatError("empty partition file")
    return Partition(np.asarray(blocks), k if k is not None else max(blocks) + 1)


def write_partition(p: Partition) -> str:
    return "\n".join(str(b) for b in p.block.tolist()) + "\n"


def read_mapping(text: str) -> list[int]:
    """One PE id per line, line i = vertex i."""
    values = _parse_int_lines(text, "mapping")
    if not values:
        raise GraphFormatError("empty mapping file")
    return values


def write_mapping(mapping: Sequence[int]) -> str:
    return "\n".join(str(p) for p in mapping) + "\n"
