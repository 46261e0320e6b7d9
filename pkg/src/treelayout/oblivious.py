"""Block-size-independent ("cache-oblivious") linear order.

The order is built by nested refinement: lay the whole tree out once
(top-level clustering plus budget recursion) at a power-of-two block
size near the square root of N, then rerun the budget recursion alone
inside every block at the square root of that block's own size, and so
on down to pieces of at most two nodes.  Each piece is connected and
its nodes' subtree sizes are recounted within the piece.

Halving the exponent at every round splits pieces at roughly half their
height, so a root-to-node path stays inside few pieces of any given
scale; since every round's blocks occupy consecutive runs of the final
order, an aligned size-B slice overlaps few blocks of the scale just
above B, for every B at once.  (Refining by plain halving of the block
size instead would shave one level per round and degenerate to a
breadth-first order, whose deep-path cost grows with N; see the
measured ratio checks in the test suite.)  Runs in O(N lg lg N).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .aware import _budget_partition, layout_aware
from .tree import TreeError, TreeTopology

__all__ = [
    "LinearOrder",
    "layout_oblivious",
    "refinement_levels",
    "blocks_at",
    "block_ids",
    "order_to_json",
    "order_from_json",
]


@dataclass
class LinearOrder:
    """Bijection between nodes and storage positions.

    ``order[i]`` is the node at position ``i``; ``position[x]`` inverts
    it.  The tree root sits at position 0.
    """

    order: tuple
    position: tuple = field(init=False)

    def __post_init__(self):
        order = tuple(self.order)
        object.__setattr__(self, "order", order)
        n = len(order)
        pos = [-1] * n
        for i, x in enumerate(order):
            if not isinstance(x, int) or not 0 <= x < n or pos[x] != -1:
                raise TreeError("order is not a permutation of 0..%d" % (n - 1))
            pos[x] = i
        object.__setattr__(self, "position", tuple(pos))

    @property
    def n(self) -> int:
        return len(self.order)


def _piece_budget(size: int) -> int:
    """Power-of-two budget near sqrt(size); always in [2, size)."""
    return 1 << max(1, size.bit_length() // 2)


def _refine(tree: TreeTopology, trace: Optional[list] = None) -> list:
    """Partition hierarchy down to pieces of <= 2 nodes (finest level)."""
    n = tree.n
    if n == 1:
        blocks = [[tree.root]]
        if trace is not None:
            trace.append([[tree.root]])
        return blocks
    top = layout_aware(tree, _piece_budget(n), Fraction(1))
    blocks = top.blocks
    blk = list(top.block_of)
    if trace is not None:
        trace.append([list(P) for P in blocks])

    rev = tree.preorder()[::-1]
    left, right, parent = tree.left, tree.right, tree.parent
    wloc = [0] * n
    nblk = [0] * n
    while any(len(P) > 2 for P in blocks):
        # subtree sizes counted within each piece: a child in another
        # piece contributes nothing
        for x in rev:
            wl = 1
            b = blk[x]
            c = left[x]
            if c is not None and blk[c] == b:
                wl += wloc[c]
            c = right[x]
            if c is not None and blk[c] == b:
                wl += wloc[c]
            wloc[x] = wl
        new_blocks: list = []
        for i, P in enumerate(blocks):
            if len(P) <= 2:
                nblk[P[0]] = len(new_blocks)
                if len(P) == 2:
                    nblk[P[1]] = len(new_blocks)
                new_blocks.append(P)
            else:
                _budget_partition(left, right, parent, wloc, P[0],
                                  _piece_budget(len(P)),
                                  new_blocks, blk=blk, pid=i, nblk=nblk)
        blocks = new_blocks
        blk, nblk = nblk, blk
        if trace is not None:
            trace.append([list(P) for P in blocks])
    return blocks


def layout_oblivious(tree: TreeTopology) -> LinearOrder:
    """Single linear order serving every block size at once."""
    blocks = _refine(tree)
    return LinearOrder(tuple(x for P in blocks for x in P))


def refinement_levels(tree: TreeTopology) -> list:
    """Partitions from coarsest to finest, one per refinement round.

    Verification hook: every partition covers all nodes, its blocks are
    contiguous in the final order, and each block nests inside one block
    of the round before.
    """
    trace: list = []
    _refine(tree, trace)
    return trace


class _AlignedBlocks:
    """Block id function for an order cut into aligned size-B slices."""

    __slots__ = ("position", "B", "offset")

    def __init__(self, position, B: int, offset: int):
        self.position = position
        self.B = B
        self.offset = offset

    def __call__(self, x: int) -> int:
        return (self.position[x] + self.offset) // self.B

    def __getitem__(self, x: int) -> int:
        return (self.position[x] + self.offset) // self.B


def blocks_at(order: LinearOrder, B: int, offset: int = 0) -> _AlignedBlocks:
    """Implicit block ids: node at position p lands in block
    ``(p + offset) // B``.  Offset 0 is the canonical alignment; other
    offsets model unknown alignment of the storage start."""
    if B < 1:
        raise TreeError("B must be positive")
    if not 0 <= offset < B:
        raise TreeError("offset must lie in [0, B)")
    return _AlignedBlocks(order.position, B, offset)


def block_ids(order: LinearOrder, B: int, offset: int = 0) -> list:
    """Materialized per-node block ids (fast path for the simulator)."""
    if B < 1:
        raise TreeError("B must be positive")
    if not 0 <= offset < B:
        raise TreeError("offset must lie in [0, B)")
    return [(p + offset) // B for p in order.position]


def order_to_json(order: LinearOrder) -> dict:
    return {"order": list(order.order)}


def order_from_json(obj, tree: Optional[TreeTopology] = None) -> LinearOrder:
    try:
        seq = obj["order"]
    except (TypeError, KeyError) as exc:
        raise TreeError("order json missing field: %s" % exc) from None
    order = LinearOrder(tuple(seq))
    if tree is not None:
        if order.n != tree.n:
            raise TreeError("order length %d != tree size %d" % (order.n, tree.n))
        if order.order[0] != tree.root:
            raise TreeError("order must start at the root")
    return order


def save_order(order: LinearOrder, path) -> None:
    with open(path, "w") as fh:
        json.dump(order_to_json(order), fh)
        fh.write("\n")


def load_order(path, tree: Optional[TreeTopology] = None) -> LinearOrder:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise TreeError("invalid order json: %s" % exc) from None
    return order_from_json(obj, tree)
