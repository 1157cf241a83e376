"""Multi-hierarchical label-swapping optimizer.

One pass ("hierarchy") permutes the label positions at random, then
repeatedly (a) swaps the labels of sibling vertices, i.e. vertices whose
current labels differ only in the lowest active digit, whenever that
strictly lowers coco - div at the current level, and (b) contracts sibling
pairs into coarse vertices, cutting the lowest digit off every label. The
coarse levels are then reassembled into a full-width labeling that follows
each vertex's coarse ancestry as far as the fixed label set allows, the
permutation is undone, and the candidate is kept unless it is strictly
worse than the state before the pass.

Gains at the finest level are exact; at coarser levels they are estimates
of the fine-level effect, which is why a finished hierarchy may be
reverted. All arithmetic on objectives is exact integer arithmetic and the
whole run is a pure function of (graph, topology labeling, mapping, seed).
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import Graph
from .labels import (
    LabelState,
    decode_mapping,
    extend_labels,
    permute_positions,
    unpermute,
)
from .objective import _pair_gain, coco_div
from .pcube import PcubeLabeling
from .util import popcount


@dataclass
class HierarchyLevel:
    """One coarsening level: graph, per-vertex labels, 1-based level index.

    Labels at level i have width dim_ga - (i - 1) and are unique within the
    level.
    """

    graph: Graph
    labels: np.ndarray  # uint64
    level_index: int


@dataclass(frozen=True)
class TimerConfig:
    n_hierarchies: int = 50
    seed: int = 0
    strict_decrease: bool = True

    def __post_init__(self):
        if self.n_hierarchies < 0:
            raise ValueError("n_hierarchies must be >= 0")
        if not self.strict_decrease:
            raise ValueError("only the strict-decrease swap policy is implemented")


@dataclass(frozen=True)
class TraceRecord:
    """Per-hierarchy log entry (values are the state after accept/revert)."""

    index: int
    coco: int
    div: int
    coco_plus: int
    swaps: int
    accepted: bool
    millis: float

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "coco": self.coco,
            "div": self.div,
            "coco_plus": self.coco_plus,
            "swaps": self.swaps,
            "accepted": self.accepted,
            "millis": self.millis,
        }


def _sibling_pairs(labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vertex pairs whose labels agree on everything but the lowest digit.

    Uniqueness caps every shared prefix at two members, so sorting the
    labels makes siblings adjacent; pairs come out in ascending prefix
    order.
    """
    order = np.argsort(labels)
    sl = labels[order]
    hit = np.flatnonzero((sl[:-1] >> np.uint64(1)) == (sl[1:] >> np.uint64(1)))
    return order[hit], order[hit + 1]


def _batch_pair_gains(
    g: Graph, labels_arr: np.ndarray, us: np.ndarray, vs: np.ndarray, pm: int, em: int
) -> list[int]:
    """Exact gains of all pairs against the current labels, vectorized."""
    npairs = us.size
    members = np.concatenate([us, vs])
    partners = np.concatenate([vs, us])
    deg = g.indptr[members + 1] - g.indptr[members]
    total = int(deg.sum())
    if total == 0:
        return [0] * npairs
    starts = g.indptr[members]
    offsets = np.concatenate(([0], np.cumsum(deg)[:-1]))
    flat = np.repeat(starts - offsets, deg) + np.arange(total, dtype=np.int64)
    nb = g.nbr[flat]
    lw = labels_arr[nb]
    d_new = np.repeat(labels_arr[partners], deg) ^ lw
    d_old = np.repeat(labels_arr[members], deg) ^ lw
    pm64, em64 = np.uint64(pm), np.uint64(em)
    contrib = g.wt[flat] * (
        popcount(d_new & pm64)
        - popcount(d_new & em64)
        - popcount(d_old & pm64)
        + popcount(d_old & em64)
    )
    contrib[nb == np.repeat(partners, deg)] = 0  # the pair's own edge is invariant
    gains = np.zeros(npairs, dtype=np.int64)
    pair_ids = np.repeat(
        np.concatenate([np.arange(npairs), np.arange(npairs)]), deg
    )
    np.add.at(gains, pair_ids, contrib)
    return gains.tolist()


_GAIN_CHUNK = 384


def swap_phase(level: HierarchyLevel, proc_mask: int, ext_mask: int) -> int:
    """Single deterministic sweep over sibling pairs; returns the swap count.

    Each pair is swapped iff the exact level-local gain is negative, with
    gains evaluated against the labels as already modified by earlier swaps
    in the same sweep. Gains are batch-computed one chunk of pairs at a
    time; within a chunk a precomputed gain can only be stale if an earlier
    swap touched one of the pair's neighbors (pairs are vertex-disjoint),
    and exactly those pairs fall back to a scalar recomputation. Swapping
    siblings permutes the label set, so labels stay unique.
    """
    us, vs = _sibling_pairs(level.labels)
    npairs = us.size
    if npairs == 0:
        return 0
    g = level.graph
    labels_arr = level.labels.copy()
    labels = labels_arr.tolist()
    indptr, nbrs, wts = g.adj_lists
    us_l, vs_l = us.tolist(), vs.tolist()
    pair_of_arr = np.full(g.n, -1, dtype=np.int64)
    pair_of_arr[us] = np.arange(npairs)
    pair_of_arr[vs] = np.arange(npairs)
    pair_of = pair_of_arr.tolist()
    stale = bytearray(npairs)
    swaps = 0
    for lo in range(0, npairs, _GAIN_CHUNK):
        hi = min(lo + _GAIN_CHUNK, npairs)
        gains = _batch_pair_gains(
            g, labels_arr, us[lo:hi], vs[lo:hi], proc_mask, ext_mask
        )
        for k in range(lo, hi):
            u, v = us_l[k], vs_l[k]
            if stale[k]:
                gain = _pair_gain(labels, indptr, nbrs, wts, proc_mask, ext_mask, u, v)
            else:
                gain = gains[k - lo]
            if gain < 0:
                labels[u], labels[v] = labels[v], labels[u]
                labels_arr[u], labels_arr[v] = labels_arr[v], labels_arr[u]
                swaps += 1
                for a in (u, v):
                    for i in range(indptr[a], indptr[a + 1]):
                        p = pair_of[nbrs[i]]
                        if k < p < hi:
                            stale[p] = 1
    if swaps:
        level.labels = np.fromiter(labels, dtype=np.uint64, count=len(labels))
    return swaps


def contract(level: HierarchyLevel, parents: list[np.ndarray]) -> HierarchyLevel:
    """Merge sibling pairs, cut the lowest digit, and append the parent map.

    Parallel edges created by a merge are combined by weight summation and
    intra-pair edges are dropped. When no pair exists the graph object is
    reused and only the labels lose a digit.
    """
    prefix = level.labels >> np.uint64(1)
    coarse_labels, parent = np.unique(prefix, return_inverse=True)
    parent = parent.astype(np.int64)
    if coarse_labels.size == level.graph.n:
        # No merges: keep the vertex numbering (and the graph) as is.
        parents.append(np.arange(level.graph.n, dtype=np.int64))
        return HierarchyLevel(level.graph, prefix, level.level_index + 1)
    parents.append(parent)
    nc = coarse_labels.size
    eu, ev, ew = level.graph.edge_arrays
    cu, cv = parent[eu], parent[ev]
    keep = cu != cv
    a = np.minimum(cu[keep], cv[keep])
    b = np.maximum(cu[keep], cv[keep])
    key = a * nc + b
    uniq, inv = np.unique(key, return_inverse=True)
    w = np.zeros(uniq.size, dtype=np.int64)
    np.add.at(w, inv, ew[keep])
    g = Graph.from_edge_arrays(nc, uniq // nc, uniq % nc, w)
    return HierarchyLevel(g, coarse_labels, level.level_index + 1)


def assemble(
    levels: Sequence[HierarchyLevel],
    parents: Sequence[np.ndarray],
    label_set: frozenset[int],
    msbs: Sequence[int],
) -> list[int]:
    """Rebuild a full-width labeling from the level labels, bijectively.

    Digit 0 comes from the current finest-level label and the top digit is
    the fixed per-vertex msb. Every digit in between is chosen level-
    synchronously: vertices sharing (msb, low-digit prefix) form a group
    whose remaining labels are exactly the label-set members with that
    prefix; each vertex prefers the lowest digit of its ancestor at the
    matching level, capacity slots going to preferring vertices first in
    ascending id order, the overflow taking the other digit. The group
    counts always match the remaining label counts, which makes the result
    a bijection onto the label set by construction.
    """
    dim = len(levels) + 1
    fine = levels[0].labels.tolist()
    n = len(fine)
    level_labels = [lv.labels.tolist() for lv in levels]
    parent_lists = [p.tolist() for p in parents]

    result = [0] * n
    # groups: (msb, prefix) -> (vertices ascending, matching labels)
    groups: dict[tuple[int, int], tuple[list[int], list[int]]] = {}
    for v in range(n):
        key = (msbs[v], fine[v] & 1)
        groups.setdefault(key, ([], []))[0].append(v)
    for lab in sorted(label_set):
        key = ((lab >> (dim - 1)) & 1, lab & 1)
        entry = groups.get(key)
        if entry is None:
            raise AssertionError("label set does not match the vertex msb/digit counts")
        entry[1].append(lab)
    for key, (vs, labs) in groups.items():
        if len(vs) != len(labs):
            raise AssertionError(f"group {key}: {len(vs)} vertices vs {len(labs)} labels")

    anc = list(range(n))
    for i in range(1, dim - 1):
        par = parent_lists[i - 1]
        lv = level_labels[i]
        bit = 1 << i
        nxt: dict[tuple[int, int], tuple[list[int], list[int]]] = {}
        for (m, pref), (vs, labs) in groups.items():
            if len(vs) == 1:
                # Only one label left: the remaining digits are forced.
                result[vs[0]] = labs[0]
                continue
            labs0 = [lab for lab in labs if not lab & bit]
            labs1 = [lab for lab in labs if lab & bit]
            pref0, pref1 = [], []
            for v in vs:
                anc[v] = par[anc[v]]
                (pref1 if lv[anc[v]] & 1 else pref0).append(v)
            c0 = len(labs0)
            if len(pref0) <= c0:
                c1 = len(labs1)
                if len(pref1) == c1:
                    zeros, ones = pref0, pref1
                else:
                    zeros = sorted(pref0 + pref1[c1:])
                    ones = pref1[:c1]
            else:
                zeros = pref0[:c0]
                ones = sorted(pref1 + pref0[c0:])
            if zeros:
                nxt[(m, pref)] = (zeros, labs0)
            if ones:
                nxt[(m, pref | bit)] = (ones, labs1)
        groups = nxt

    for (m, pref), (vs, labs) in groups.items():
        if len(vs) != 1:
            raise AssertionError("assembled prefixes did not resolve to single labels")
        result[vs[0]] = labs[0]
    return result


def run_hierarchy(
    ga: Graph, ls: LabelState, rng: random.Random
) -> tuple[LabelState, int]:
    """One permute / (swap, contract)* / assemble / unpermute pass.

    Returns the candidate state and the total swap count; accepting or
    reverting the candidate is the caller's decision. Degenerate widths
    (dim_ga <= 2) have an empty level loop and return the input unchanged.
    """
    dim = ls.layout.dim_ga
    if dim <= 2:
        return ls, 0
    perm = list(range(dim))
    rng.shuffle(perm)
    pls = permute_positions(ls, perm)
    pm, em = pls.layout.proc_mask, pls.layout.ext_mask

    level = HierarchyLevel(ga, np.fromiter(pls.labels, np.uint64, ga.n), 1)
    levels = [level]
    parents: list[np.ndarray] = []
    swaps = 0
    for i in range(2, dim):
        shift = level.level_index - 1
        swaps += swap_phase(level, pm >> shift, em >> shift)
        level = contract(level, parents)
        levels.append(level)

    msbs = (levels[0].labels >> np.uint64(dim - 1)).tolist()
    new_labels = assemble(levels, parents, pls.label_set, msbs)
    candidate = LabelState.from_labels(pls.layout, new_labels)
    return unpermute(candidate), swaps


def run_timer(
    ga: Graph,
    pl: PcubeLabeling,
    mapping: Sequence[int],
    cfg: TimerConfig,
    *,
    allow_empty_pes: bool = False,
) -> tuple[list[int], LabelState, list[TraceRecord]]:
    """Full optimization: label extension plus cfg.n_hierarchies passes.

    A candidate is kept unless its coco - div is strictly worse than the
    current state's, so the objective is non-increasing over accepted
    states. Deterministic for a fixed (graph, labeling, mapping, seed).
    """
    rng = random.Random(cfg.seed)
    ls = extend_labels(ga, mapping, pl, rng, allow_empty_pes=allow_empty_pes)
    cur_c, cur_d = coco_div(ga, ls)
    trace: list[TraceRecord] = []
    for h in range(cfg.n_hierarchies):
        t0 = time.perf_counter()
        candidate, swaps = run_hierarchy(ga, ls, rng)
        cand_c, cand_d = coco_div(ga, candidate)
        accepted = cand_c - cand_d <= cur_c - cur_d
        if accepted:
            ls, cur_c, cur_d = candidate, cand_c, cand_d
        trace.append(
            TraceRecord(
                index=h,
                coco=cur_c,
                div=cur_d,
                coco_plus=cur_c - cur_d,
                swaps=swaps,
                accepted=accepted,
                millis=(time.perf_counter() - t0) * 1e3,
            )
        )
    return decode_mapping(ls, pl), ls, trace
