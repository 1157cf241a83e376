import random
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubemap.graph import Graph, generate_topology, parse_topology_spec
from cubemap.labels import extend_labels, decode_mapping
from cubemap.objective import _pair_gain, coco_div, coco_plus
from cubemap.pcube import label_partial_cube
from cubemap.synth import random_connected_graph
from cubemap.timer import (
    HierarchyLevel,
    TimerConfig,
    _sibling_pairs,
    assemble,
    contract,
    run_hierarchy,
    run_timer,
    swap_phase,
)


def level_of(g, labels):
    return HierarchyLevel(g, np.array(labels, dtype=np.uint64), 1)


def level_coco_plus(level, pm, em):
    labels = level.labels.tolist()
    total = 0
    for u, v, w in level.graph.edges():
        d = labels[u] ^ labels[v]
        total += w * ((d & pm).bit_count() - (d & em).bit_count())
    return total


def random_level(rng, max_n=80):
    n = rng.randint(4, max_n)
    g = random_connected_graph(n, rng.randint(0, 2 * n), rng.randint(1, 9), rng)
    width = max(2, (n - 1).bit_length() + rng.randint(0, 2))
    labels = rng.sample(range(1 << width), n)
    pmbits = rng.sample(range(width), rng.randint(0, width))
    pm = sum(1 << b for b in pmbits)
    em = ((1 << width) - 1) ^ pm
    return level_of(g, labels), pm, em, width


def reference_swap_phase(level, pm, em):
    """Plain sequential sweep used as the oracle for the batched one."""
    us, vs = _sibling_pairs(level.labels)
    labels = level.labels.tolist()
    indptr, nbrs, wts = level.graph.adj_lists
    swaps = 0
    for u, v in zip(us.tolist(), vs.tolist()):
        if _pair_gain(labels, indptr, nbrs, wts, pm, em, u, v) < 0:
            labels[u], labels[v] = labels[v], labels[u]
            swaps += 1
    level.labels = np.fromiter(labels, dtype=np.uint64, count=len(labels))
    return swaps


# --- swap_phase ---


def test_swap_phase_no_siblings():
    g = random_connected_graph(3, 0, 1, random.Random(0))
    lvl = level_of(g, [0b00, 0b10, 0b11])  # 0 has no sibling: 0b01 missing
    before = lvl.labels.copy()
    assert swap_phase(lvl, 0b11, 0b00) == 0
    assert np.array_equal(lvl.labels, before)


def test_swap_phase_two_vertex_pair_exchanges_labels():
    # pair (0, 1) with labels 0/1, one weighted edge from 0 to a fixed
    # third vertex; position 1 is processor, position 0 extension.
    # Before: edge 0-2 costs coco 1, div 0. After the swap vertex 0 holds
    # label 01, so the edge costs coco 1, div 1: gain -1, swap happens.
    g = Graph.from_edges(3, [(0, 2, 1)])
    lvl = level_of(g, [0b00, 0b01, 0b10])
    assert swap_phase(lvl, 0b10, 0b01) == 1
    assert lvl.labels.tolist() == [0b01, 0b00, 0b10]


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_swap_phase_matches_sequential_reference(seed):
    rng = random.Random(seed)
    lvl, pm, em, _ = random_level(rng)
    ref = HierarchyLevel(lvl.graph, lvl.labels.copy(), 1)
    s1 = swap_phase(lvl, pm, em)
    s2 = reference_swap_phase(ref, pm, em)
    assert s1 == s2
    assert np.array_equal(lvl.labels, ref.labels)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_swap_phase_never_increases_level_objective(seed):
    rng = random.Random(seed)
    lvl, pm, em, _ = random_level(rng)
    before_labels = sorted(lvl.labels.tolist())
    before = level_coco_plus(lvl, pm, em)
    swaps = swap_phase(lvl, pm, em)
    after = level_coco_plus(lvl, pm, em)
    assert after <= before
    if swaps == 0:
        assert after == before
    assert sorted(lvl.labels.tolist()) == before_labels  # labels permuted only


# --- contract ---


def test_contract_all_siblings_halves():
    g = Graph.from_edges(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1), (0, 3, 1)])
    lvl = level_of(g, [0b00, 0b01, 0b10, 0b11])
    parents = []
    nxt = contract(lvl, parents)
    assert nxt.graph.n == 2
    assert nxt.labels.tolist() == [0, 1]
    assert nxt.level_index == 2
    # two crossing edges merge into weight 2; intra-pair edges vanish
    assert list(nxt.graph.edges()) == [(0, 1, 2)]


def test_contract_no_siblings_keeps_graph():
    g = random_connected_graph(3, 0, 2, random.Random(1))
    lvl = level_of(g, [0b000, 0b010, 0b100])
    parents = []
    nxt = contract(lvl, parents)
    assert nxt.graph is g
    assert nxt.labels.tolist() == [0b00, 0b01, 0b10]
    assert parents[0].tolist() == [0, 1, 2]


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_contract_weight_conservation_and_parent_labels(seed):
    rng = random.Random(seed)
    lvl, _, _, _ = random_level(rng)
    fine = lvl.labels.tolist()
    fine_weight = lvl.graph.total_weight
    intra = sum(
        w for u, v, w in lvl.graph.edges() if fine[u] >> 1 == fine[v] >> 1
    )
    parents = []
    nxt = contract(lvl, parents)
    assert nxt.graph.total_weight == fine_weight - intra
    par = parents[0].tolist()
    coarse = nxt.labels.tolist()
    for v, lab in enumerate(fine):
        assert coarse[par[v]] == lab >> 1
    assert len(set(coarse)) == nxt.graph.n


# --- assemble ---


def test_assemble_reproduces_input_without_swaps():
    rng = random.Random(5)
    for _ in range(50):
        n = rng.randint(4, 64)
        g = random_connected_graph(n, rng.randint(0, n), rng.randint(1, 5), rng)
        width = max(2, (n - 1).bit_length() + rng.randint(0, 2))
        labels = rng.sample(range(1 << width), n)
        lvl = level_of(g, labels)
        levels, parents = [lvl], []
        for _ in range(2, width):
            lvl = contract(lvl, parents)
            levels.append(lvl)
        msbs = [(x >> (width - 1)) & 1 for x in labels]
        assert assemble(levels, parents, frozenset(labels), msbs) == labels


def test_assemble_propagates_a_coarse_swap():
    # Four vertices, width 3: pairs {0,1} (labels 000, 001) and {2,3}
    # (010, 011) contract to coarse labels 00 and 01. Swapping the coarse
    # labels makes each fine vertex prefer the other pair's prefix, so the
    # assembled labeling exchanges the pairs' label sets.
    g = Graph.from_edges(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1)])
    labels = [0b000, 0b001, 0b010, 0b011]
    lvl = level_of(g, labels)
    levels, parents = [lvl], []
    nxt = contract(lvl, parents)
    assert nxt.labels.tolist() == [0b00, 0b01]
    nxt.labels = np.array([0b01, 0b00], dtype=np.uint64)  # the coarse swap
    levels.append(nxt)
    out = assemble(levels, parents, frozenset(labels), [0, 0, 0, 0])
    assert out == [0b010, 0b011, 0b000, 0b001]


def test_assemble_overflow_takes_other_digit():
    # Fabricated coarse level whose labels both end in digit 1, so every
    # fine vertex prefers digit 1; only the low digit of a parent label
    # matters for the preference. Each (msb, digit0) group holds one label
    # per digit value, so the lower id wins the preferred digit and the
    # other vertex takes the inverted one.
    g = Graph.from_edges(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1)])
    labels = [0b000, 0b001, 0b010, 0b011]
    lvl = level_of(g, labels)
    coarse = HierarchyLevel(
        Graph.from_edges(2, [(0, 1, 1)]), np.array([0b01, 0b11], dtype=np.uint64), 2
    )
    parents = [np.array([0, 0, 1, 1])]
    out = assemble([lvl, coarse], parents, frozenset(labels), [0, 0, 0, 0])
    # group (msb 0, digit0 0) = vertices {0, 2}, both prefer digit1 = 1:
    # vertex 0 takes 010, vertex 2 falls back to 000; likewise for {1, 3}
    assert out == [0b010, 0b011, 0b000, 0b001]


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_assemble_bijection_with_random_swaps(seed):
    rng = random.Random(seed)
    n = rng.randint(4, 64)
    g = random_connected_graph(n, rng.randint(0, n), rng.randint(1, 5), rng)
    width = max(2, (n - 1).bit_length() + rng.randint(0, 2))
    labels = rng.sample(range(1 << width), n)
    lvl = level_of(g, labels)
    levels, parents = [lvl], []
    for _ in range(2, width):
        # random sibling swaps before contracting, like the optimizer does
        us, vs = _sibling_pairs(lvl.labels)
        lab = lvl.labels.tolist()
        for u, v in zip(us.tolist(), vs.tolist()):
            if rng.random() < 0.5:
                lab[u], lab[v] = lab[v], lab[u]
        lvl.labels = np.array(lab, dtype=np.uint64)
        lvl = contract(lvl, parents)
        levels.append(lvl)
    msbs = [(x >> (width - 1)) & 1 for x in levels[0].labels.tolist()]
    out = assemble(levels, parents, frozenset(labels), msbs)
    assert sorted(out) == sorted(labels)  # bijection onto the label set
    for v, lab in enumerate(out):
        assert (lab >> (width - 1)) & 1 == msbs[v]


# --- run_hierarchy ---


def make_state(rng, spec="grid2d:2x2", n=12):
    gp = generate_topology(parse_topology_spec(spec))
    pl = label_partial_cube(gp)
    ga = random_connected_graph(n, rng.randint(0, n), rng.randint(1, 9), rng)
    mapping = list(range(gp.n)) + [rng.randrange(gp.n) for _ in range(n - gp.n)]
    ls = extend_labels(ga, mapping, pl, rng)
    return ga, gp, pl, mapping, ls


def test_run_hierarchy_degenerate_width_returns_input():
    rng = random.Random(2)
    gp = generate_topology(parse_topology_spec("grid2d:2x2"))
    pl = label_partial_cube(gp)
    ga = random_connected_graph(4, 2, 3, rng)
    ls = extend_labels(ga, [0, 1, 2, 3], pl, rng)
    assert ls.layout.dim_ga == 2
    cand, swaps = run_hierarchy(ga, ls, rng)
    assert swaps == 0
    assert cand.labels == ls.labels


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_run_hierarchy_conserves_labels_and_blocks(seed):
    rng = random.Random(seed)
    ga, gp, pl, mapping, ls = make_state(rng)
    cand, _ = run_hierarchy(ga, ls, rng)
    assert sorted(cand.labels) == sorted(ls.labels)
    assert cand.layout == ls.layout
    assert Counter(decode_mapping(cand, pl)) == Counter(mapping)


# --- run_timer ---


def test_run_timer_zero_hierarchies_is_identity():
    rng = random.Random(3)
    ga, gp, pl, mapping, _ = make_state(rng)
    out, ls, trace = run_timer(ga, pl, mapping, TimerConfig(n_hierarchies=0, seed=1))
    assert out == mapping
    assert trace == []


def test_run_timer_objective_never_worsens():
    rng = random.Random(4)
    for _ in range(5):
        ga, gp, pl, mapping, ls0 = make_state(rng, n=rng.randint(8, 40))
        out, ls, trace = run_timer(ga, pl, mapping, TimerConfig(n_hierarchies=12, seed=9))
        values = [t.coco_plus for t in trace]
        assert all(a >= b for a, b in zip(values, values[1:]))
        assert coco_plus(ga, ls) == values[-1]


def test_run_timer_deterministic():
    rng = random.Random(6)
    ga, gp, pl, mapping, _ = make_state(rng, spec="grid2d:4x4", n=40)
    r1 = run_timer(ga, pl, mapping, TimerConfig(n_hierarchies=15, seed=42))
    r2 = run_timer(ga, pl, mapping, TimerConfig(n_hierarchies=15, seed=42))
    assert r1[0] == r2[0]
    assert r1[1].labels == r2[1].labels
    assert [t.to_dict() | {"millis": None} for t in r1[2]] == [
        t.to_dict() | {"millis": None} for t in r2[2]
    ]


def test_run_timer_trace_fields():
    rng = random.Random(7)
    ga, gp, pl, mapping, _ = make_state(rng)
    _, _, trace = run_timer(ga, pl, mapping, TimerConfig(n_hierarchies=3, seed=0))
    assert [t.index for t in trace] == [0, 1, 2]
    for t in trace:
        d = t.to_dict()
        assert d["coco"] - d["div"] == d["coco_plus"]
        assert isinstance(d["accepted"], bool)
        assert d["millis"] >= 0


def test_timer_config_validation():
    with pytest.raises(ValueError):
        TimerConfig(n_hierarchies=-1)
    with pytest.raises(ValueError):
        TimerConfig(strict_decrease=False)
