"""Unique bit labels on the application graph.

A vertex label concatenates the label of its processor (high positions)
with an extension part (low positions) that disambiguates vertices mapped
to the same PE. Bit index 0 is the least significant position and is the
digit cut first when the optimizer contracts labels digit by digit, so
under an identity permutation the extension digits coarsen away before any
processor digit does.

Labels are plain ints capped at 64 active bits; the layout tracks which
positions currently carry processor vs. extension information, also under
position permutations.
"""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapacityError, IntegrityError
from .graph import Graph
from .pcube import PcubeLabeling
from .util import scatter_bits

# Full labels must fit one machine word for single-XOR distance evaluation.
MAX_LABEL_BITS = 64


def dim_ga(dim_gp: int, block_sizes: Sequence[int]) -> int:
    """Total label width: processor width plus bits for the largest block."""
    if not block_sizes:
        raise ValueError("need at least one block")
    if min(block_sizes) < 1:
        raise ValueError("block sizes must be >= 1")
    width = dim_gp + (max(block_sizes) - 1).bit_length()
    if width > MAX_LABEL_BITS:
        raise CapacityError(
            f"label width {width} exceeds the {MAX_LABEL_BITS}-bit budget"
        )
    return width


@dataclass(frozen=True)
class LabelLayout:
    """Widths, processor/extension position masks, and the active permutation.

    ``perm`` maps original bit position -> current position; it is the
    identity in the canonical layout, where the extension occupies the low
    ``dim_ga - dim_gp`` positions and the processor part the rest.
    """

    dim_gp: int
    dim_ga: int
    proc_mask: int
    ext_mask: int
    perm: tuple[int, ...]

    def __post_init__(self):
        full = (1 << self.dim_ga) - 1
        if self.proc_mask & self.ext_mask:
            raise ValueError("processor and extension masks overlap")
        if self.proc_mask | self.ext_mask != full:
            raise ValueError("masks must cover exactly the active positions")
        if self.proc_mask.bit_count() != self.dim_gp:
            raise ValueError("processor mask width mismatch")
        if sorted(self.perm) != list(range(self.dim_ga)):
            raise ValueError("perm is not a permutation of the positions")

    @classmethod
    def initial(cls, dim_gp: int, dim_ga: int) -> "LabelLayout":
        ext_width = dim_ga - dim_gp
        return cls(
            dim_gp=dim_gp,
            dim_ga=dim_ga,
            proc_mask=((1 << dim_gp) - 1) << ext_width,
            ext_mask=(1 << ext_width) - 1,
            perm=tuple(range(dim_ga)),
        )

    @property
    def ext_width(self) -> int:
        return self.dim_ga - self.dim_gp

    @property
    def is_unpermuted(self) -> bool:
        return self.perm == tuple(range(self.dim_ga))


@dataclass(frozen=True, eq=False)
class LabelState:
    """Bijective vertex labeling plus its inverse index and the fixed label set."""

    layout: LabelLayout
    labels: list[int]
    index: dict[int, int]
    label_set: frozenset[int]

    @classmethod
    def from_labels(cls, layout: LabelLayout, labels: list[int]) -> "LabelState":
        index = {lab: v for v, lab in enumerate(labels)}
        if len(index) != len(labels):
            raise IntegrityError("labels are not unique")
        return cls(
            layout=layout,
            labels=labels,
            index=index,
            label_set=frozenset(labels),
        )

    @property
    def n(self) -> int:
        return len(self.labels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabelState):
            return NotImplemented
        return self.layout == other.layout and self.labels == other.labels


def extend_labels(
    ga: Graph,
    mapping: Sequence[int],
    pl: PcubeLabeling,
    rng: random.Random,
    *,
    allow_empty_pes: bool = False,
) -> LabelState:
    """Lift the processor labeling to unique application-vertex labels.

    Vertices of each block are numbered in an rng-shuffled order and the
    number is written in binary into the extension positions; one shared
    rng permutation then scrambles the extension positions. Both choices
    keep the labels provably unique while randomizing the starting point.
    """
    if len(mapping) != ga.n:
        raise ValueError(f"mapping covers {len(mapping)} vertices, graph has {ga.n}")
    n_pes = pl.n
    blocks: list[list[int]] = [[] for _ in range(n_pes)]
    for v, pe in enumerate(mapping):
        if not 0 <= pe < n_pes:
            raise ValueError(f"vertex {v} mapped to unknown PE {pe}")
        blocks[pe].append(v)
    empties = [pe for pe, b in enumerate(blocks) if not b]
    if empties:
        if not allow_empty_pes:
            raise ValueError(
                f"{len(empties)} PEs have no vertices (first: {empties[0]}); "
                "pass allow_empty_pes=True to accept"
            )
        warnings.warn(f"{len(empties)} PEs have no vertices", stacklevel=2)

    width = dim_ga(pl.dim, [len(b) for b in blocks if b])
    ext_width = width - pl.dim
    ext_positions = list(range(ext_width))
    rng.shuffle(ext_positions)

    labels = [0] * ga.n
    for pe, vs in enumerate(blocks):
        rng.shuffle(vs)
        base = pl.labels[pe] << ext_width
        for i, v in enumerate(vs):
            labels[v] = base | scatter_bits(i, ext_positions)
    return LabelState.from_labels(LabelLayout.initial(pl.dim, width), labels)


def decode_mapping(ls: LabelState, pl: PcubeLabeling) -> list[int]:
    """Invert the processor part of each label back to its PE id."""
    if not ls.layout.is_unpermuted:
        raise ValueError("decode_mapping needs the canonical (unpermuted) layout")
    ext_width = ls.layout.ext_width
    pe_of = {lab: pe for pe, lab in enumerate(pl.labels)}
    out = []
    for v, lab in enumerate(ls.labels):
        pe = pe_of.get(lab >> ext_width)
        if pe is None:
            raise IntegrityError(
                f"vertex {v}: processor part {lab >> ext_width:#x} matches no PE"
            )
        out.append(pe)
    return out


def _apply_positions(labels: Sequence[int], positions: Sequence[int]) -> list[int]:
    """Move bit i of every label to positions[i], vectorized."""
    arr = np.fromiter(labels, dtype=np.uint64, count=len(labels))
    out = np.zeros_like(arr)
    one = np.uint64(1)
    for i, p in enumerate(positions):
        out |= ((arr >> np.uint64(i)) & one) << np.uint64(p)
    return out.tolist()


def permute_positions(ls: LabelState, perm: Sequence[int]) -> LabelState:
    """Rearrange every label's bit positions by ``perm`` (masks follow along)."""
    perm = tuple(perm)
    if sorted(perm) != list(range(ls.layout.dim_ga)):
        raise ValueError("perm is not a permutation of the active positions")
    old = ls.layout
    layout = LabelLayout(
        dim_gp=old.dim_gp,
        dim_ga=old.dim_ga,
        proc_mask=scatter_bits(old.proc_mask, perm),
        ext_mask=scatter_bits(old.ext_mask, perm),
        perm=tuple(perm[p] for p in old.perm),
    )
    return LabelState.from_labels(layout, _apply_positions(ls.labels, perm))


def unpermute(ls: LabelState) -> LabelState:
    """Restore the canonical layout (exact inverse of the applied permutations)."""
    cur = ls.layout.perm
    inv = [0] * len(cur)
    for i, p in enumerate(cur):
        inv[p] = i
    return permute_positions(ls, inv)


def label_dump_csv(ls: LabelState) -> str:
    """Debug dump: 'vertex,hex_label' per line."""
    digits = max(1, (ls.layout.dim_ga + 3) // 4)
    rows = ["vertex,hex_label"]
    rows += [f"{v},{lab:0{digits}x}" for v, lab in enumerate(ls.labels)]
    return "\n".join(rows) + "\n"
