"""Communication-cost objectives over labels, plus swap gains and balance.

All values are exact integers; floats only show up in balance ratios and
reports. Costs are summed over all edges: an edge whose endpoints agree on
the masked positions contributes 0, so no explicit edge subsets need to be
maintained (they are still available as a diagnostic, see agreement_sets).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import Graph, Partition
from .labels import LabelLayout, LabelState
from .util import popcount


@dataclass(frozen=True)
class ObjectiveValue:
    """Snapshot of all quality metrics for one labeled state."""

    coco: int
    div: int
    coco_plus: int
    edge_cut: int
    balance_eps: float

    def __post_init__(self):
        if self.coco_plus != self.coco - self.div:
            raise ValueError("coco_plus must equal coco - div")


def _labels_u64(ls: LabelState) -> np.ndarray:
    return np.fromiter(ls.labels, dtype=np.uint64, count=ls.n)


def coco_div(ga: Graph, ls: LabelState) -> tuple[int, int]:
    """(hop-weighted communication cost, extension diversity) in one pass."""
    eu, ev, ew = ga.edge_arrays
    arr = _labels_u64(ls)
    d = arr[eu] ^ arr[ev]
    c = int(ew @ popcount(d & np.uint64(ls.layout.proc_mask)))
    v = int(ew @ popcount(d & np.uint64(ls.layout.ext_mask)))
    return c, v


def coco(ga: Graph, ls: LabelState) -> int:
    """Sum of edge weight times processor-part Hamming distance."""
    return coco_div(ga, ls)[0]


def div(ga: Graph, ls: LabelState) -> int:
    """Sum of edge weight times extension-part Hamming distance."""
    return coco_div(ga, ls)[1]


def coco_plus(ga: Graph, ls: LabelState) -> int:
    c, v = coco_div(ga, ls)
    return c - v


def coco_from_distances(
    ga: Graph, mapping: Sequence[int], dist: np.ndarray
) -> int:
    """Distance-table form of the communication cost (the labels' oracle twin)."""
    eu, ev, ew = ga.edge_arrays
    pe = np.asarray(mapping, dtype=np.int64)
    return int(ew @ dist[pe[eu], pe[ev]].astype(np.int64))


def edge_cut(ga: Graph, p: Partition) -> int:
    """Total weight of edges whose endpoints lie in different blocks."""
    if p.n != ga.n:
        raise ValueError("partition does not cover the graph")
    eu, ev, ew = ga.edge_arrays
    return int(ew[p.block[eu] != p.block[ev]].sum())


def agreement_sets(
    ga: Graph, ls: LabelState
) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Diagnostic: edges with equal processor parts, edges with equal extensions."""
    eu, ev, _ = ga.edge_arrays
    arr = _labels_u64(ls)
    d = arr[eu] ^ arr[ev]
    same_proc = np.flatnonzero((d & np.uint64(ls.layout.proc_mask)) == 0)
    same_ext = np.flatnonzero((d & np.uint64(ls.layout.ext_mask)) == 0)

    def pairs(idx):
        return [(int(eu[i]), int(ev[i])) for i in idx]

    return pairs(same_proc), pairs(same_ext)


def swap_gain(
    g: Graph,
    labels: Sequence[int],
    layout: LabelLayout,
    u: int,
    v: int,
) -> int:
    """Exact change of coco - div if u and v exchanged labels (negative = better).

    Only edges incident to u or v can change; the edge {u, v} itself, if
    present, is invariant under the swap and is skipped.
    """
    if u == v:
        raise ValueError("swap needs two distinct vertices")
    if isinstance(labels, np.ndarray):
        labels = labels.tolist()
    indptr, nbrs, wts = g.adj_lists
    return _pair_gain(labels, indptr, nbrs, wts, layout.proc_mask, layout.ext_mask, u, v)


def _pair_gain(labels, indptr, nbrs, wts, pm, em, u, v):
    # Shared hot loop; plain-int arithmetic on purpose.
    lu = labels[u]
    lv = labels[v]
    gain = 0
    for a, la, lb in ((u, lu, lv), (v, lv, lu)):
        skip = v if a == u else u
        for i in range(indptr[a], indptr[a + 1]):
            w = nbrs[i]
            if w == skip:
                continue
            x = labels[w]
            do = la ^ x
            dn = lb ^ x
            gain += wts[i] * (
                (dn & pm).bit_count()
                - (dn & em).bit_count()
                - (do & pm).bit_count()
                + (do & em).bit_count()
            )
    return gain


def balance_check(p: Partition, eps: float) -> bool:
    """True iff every block size is at most (1 + eps) * ceil(n / k)."""
    if p.n == 0:
        return True
    return bool(p.block_sizes().max() <= (1.0 + eps) * math.ceil(p.n / p.k))


def achieved_balance(p: Partition) -> float:
    """Smallest eps for which balance_check passes."""
    if p.n == 0:
        return 0.0
    return float(p.block_sizes().max()) / math.ceil(p.n / p.k) - 1.0


def evaluate(ga: Graph, ls: LabelState, n_pes: int) -> ObjectiveValue:
    """All metrics of a label state; block structure is read off the labels."""
    c, d = coco_div(ga, ls)
    eu, ev, ew = ga.edge_arrays
    arr = _labels_u64(ls)
    pm = np.uint64(ls.layout.proc_mask)
    cut = int(ew[(arr[eu] & pm) != (arr[ev] & pm)].sum())
    _, counts = np.unique(arr & pm, return_counts=True)
    bal = float(counts.max()) / math.ceil(ga.n / n_pes) - 1.0 if ga.n else 0.0
    return ObjectiveValue(coco=c, div=d, coco_plus=c - d, edge_cut=cut, balance_eps=bal)
