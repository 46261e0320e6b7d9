"""Block-size-aware tree layout.

Two cooperating mechanisms produce blocks of at most B nodes:

* the top levels of the tree (a logarithmic number of them) are clustered
  level-by-level, ``floor(lg(B+1))`` levels per block, so that shallow
  queries behave like a B-tree search;
* every remaining subtree is split by a budget recursion: its root block
  receives capacity ``A = B``, a node keeps ``A - 1`` for its children and
  hands each child a share proportional to the child's subtree weight,
  and a node joins the block exactly when its budget is still >= 1.
  Children that fall out of the block start fresh blocks with full
  capacity B.

Budgets are exact rationals.  The literal recursion is exposed as
:func:`k_set`; the production engine uses an equivalent reciprocal-sum
membership test (a node x with block root r is in r's block iff
``sum(1/w(y) for y on the r..x path) <= B / w(r)``) evaluated in floating
point with a rigorous error bound and an exact rational fallback when a
comparison is too close to call.  Decisions are therefore exact and
bit-reproducible while staying O(1) per node in the common case.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .tree import TreeError, TreeTopology, compute_weights

__all__ = [
    "BlockAssignment",
    "k_set",
    "phase1_layout",
    "phase2_layout",
    "layout_aware",
    "exclusion_violations",
    "padded_order",
    "layout_to_json",
    "layout_from_json",
]

# covers two ulps per float operation; overestimating only costs extra
# exact fallbacks, never wrong answers
_U = 2.3e-16


@dataclass
class BlockAssignment:
    """Partition of (a region of) a tree into blocks of at most B nodes.

    ``blocks[i]`` lists the members of block ``i`` with the block's
    topmost node first; block ids follow preorder of the block roots.
    ``block_of`` maps node id -> block id, -1 for nodes outside the
    covered region.  ``phase2_roots`` are the subtree roots handled by the
    budget recursion; nodes strictly shallower than ``phase1_levels`` were
    clustered level-by-level instead.  ``c`` is the level-coverage
    parameter (None when unknown, e.g. for layouts read from disk).
    """

    B: int
    c: Optional[Fraction]
    blocks: list
    block_of: list
    phase2_roots: tuple
    phase1_levels: Optional[int]

    def covered_nodes(self) -> int:
        return sum(len(b) for b in self.blocks)


def k_set(tree: TreeTopology, x: int, A, weights) -> set:
    """Node set claimed for the block rooted at ``x`` by the budget
    recursion, evaluated literally with exact rationals.

    ``x`` keeps the budget ``A`` if ``A >= 1`` and passes
    ``(A - 1) * w(child) / w(x)`` to each child; a missing child absorbs
    nothing.  Returns the empty set when ``A < 1``.
    """
    a0 = Fraction(A)
    out = set()
    left, right = tree.left, tree.right
    stack = [(x, a0)]
    while stack:
        y, a = stack.pop()
        if a < 1:
            continue
        out.add(y)
        rem = a - 1
        wy = weights[y]
        c = left[y]
        if c is not None:
            stack.append((c, rem * weights[c] / wy))
        c = right[y]
        if c is not None:
            stack.append((c, rem * weights[c] / wy))
    return out


def _exact_reciprocal_le(ws, B: int, wr: int) -> bool:
    """Exact test ``sum(1/w for w in ws) <= B / wr``.

    Pairwise-merges the unit fractions so the integers stay balanced; no
    gcd reductions are needed for a comparison.
    """
    pairs = [(1, w) for w in ws]
    while len(pairs) > 1:
        nxt = []
        for i in range(0, len(pairs) - 1, 2):
            n1, d1 = pairs[i]
            n2, d2 = pairs[i + 1]
            nxt.append((n1 * d2 + n2 * d1, d1 * d2))
        if len(pairs) & 1:
            nxt.append(pairs[-1])
        pairs = nxt
    num, den = pairs[0]
    return num * wr <= B * den


def _budget_partition(left, right, parent, w, root: int, B: int, blocks: list,
                      blk=None, pid: int = -1, nblk=None) -> None:
    """Split the piece rooted at ``root`` into budget-rule blocks.

    Appends member lists (preorder within the piece, root first) to
    ``blocks``.  When ``blk`` is given the piece is restricted to nodes
    with ``blk[node] == pid``; when ``nblk`` is given the new global block
    index is recorded for every node.  ``w`` must hold subtree sizes
    *within the piece*.
    """
    b0 = len(blocks)
    targets = [B / w[root]]
    broots = [root]
    blocks.append([root])
    if nblk is not None:
        nblk[root] = b0
    stack = []
    t0 = 1.0 / w[root]
    e0 = _U * t0
    c = right[root]
    if c is not None and (blk is None or blk[c] == pid):
        stack.append((c, 0, t0, e0))
    c = left[root]
    if c is not None and (blk is None or blk[c] == pid):
        stack.append((c, 0, t0, e0))

    push = stack.append
    pop = stack.pop
    while stack:
        x, b, S, E = pop()
        wx = w[x]
        t = 1.0 / wx
        s2 = S + t
        tgt = targets[b]
        margin = tgt - s2
        tol = E + _U * (t + s2 + tgt)
        if margin > tol:
            include = True
        elif margin < -tol:
            include = False
        else:
            r = broots[b]
            ws = [wx]
            y = x
            while y != r:
                y = parent[y]
                ws.append(w[y])
            include = _exact_reciprocal_le(ws, B, w[r])
        if include:
            blocks[b0 + b].append(x)
            if nblk is not None:
                nblk[x] = b0 + b
            ce = E + _U * (t + s2)
            c = right[x]
            if c is not None and (blk is None or blk[c] == pid):
                push((c, b, s2, ce))
            c = left[x]
            if c is not None and (blk is None or blk[c] == pid):
                push((c, b, s2, ce))
        else:
            nb = len(blocks) - b0
            targets.append(B / wx)
            broots.append(x)
            blocks.append([x])
            if nblk is not None:
                nblk[x] = b0 + nb
            ce = _U * t
            c = right[x]
            if c is not None and (blk is None or blk[c] == pid):
                push((c, nb, t, ce))
            c = left[x]
            if c is not None and (blk is None or blk[c] == pid):
                push((c, nb, t, ce))


def _phase1_levels(n: int, c: Fraction, height: int) -> int:
    """Number of top levels covered by level clustering: the least L with
    ``L >= c * lg2(n)``, capped at ``height + 1``.  Exact despite the
    float log estimate."""
    if n <= 1:
        return 0
    a, b = c.numerator, c.denominator
    x = a * math.log2(n) / b
    if x > height + 1.5:
        return height + 1
    L = max(0, math.ceil(x - 1e-9))
    na = n ** a
    while (1 << (L * b)) < na:
        L += 1
    while L > 0 and (1 << ((L - 1) * b)) >= na:
        L -= 1
    return min(L, height + 1)


def _as_c(c) -> Fraction:
    c = Fraction(c)
    if c <= 0:
        raise TreeError("c must be positive")
    return c


def phase1_layout(tree: TreeTopology, B: int, c=Fraction(1)):
    """Cluster the top ``ceil(c * lg2 N)`` levels into blocks of at most
    ``floor(lg(B+1))`` levels each and return the remaining subtree roots.

    Returns ``(assignment, phase2_roots)``; the assignment covers only the
    clustered region (``block_of`` is -1 below it).  Every stratum root
    starts a block holding its descendants within the stratum, so a block
    never exceeds ``2**floor(lg(B+1)) - 1 <= B`` nodes.  The last stratum
    is truncated at the level boundary rather than overshooting it.
    """
    if B < 1:
        raise TreeError("B must be positive")
    c = _as_c(c)
    L1 = _phase1_levels(tree.n, c, tree.height)
    stride = (B + 1).bit_length() - 1
    blocks: list = []
    p2roots: list = []
    left, right, depth = tree.left, tree.right, tree.depth
    stack = [(tree.root, -1)]
    while stack:
        x, b = stack.pop()
        d = depth[x]
        if d >= L1:
            p2roots.append(x)
            continue
        if d % stride == 0:
            b = len(blocks)
            blocks.append([x])
        else:
            blocks[b].append(x)
        cc = right[x]
        if cc is not None:
            stack.append((cc, b))
        cc = left[x]
        if cc is not None:
            stack.append((cc, b))
    # popping left children first makes discovery order the preorder of
    # block roots, so block ids are already in their final order
    block_of = [-1] * tree.n
    for i, mem in enumerate(blocks):
        for v in mem:
            block_of[v] = i
    asg = BlockAssignment(B=B, c=c, blocks=blocks, block_of=block_of,
                          phase2_roots=tuple(p2roots), phase1_levels=L1)
    return asg, tuple(p2roots)


def phase2_layout(tree: TreeTopology, root: int, B: int,
                  weights=None) -> BlockAssignment:
    """Lay out the subtree of ``root`` with the budget recursion alone.

    Block 0 is the node set of :func:`k_set` at ``(root, B)``; each child
    of an included node that fell outside restarts with full capacity B.
    """
    if B < 1:
        raise TreeError("B must be positive")
    if weights is None:
        weights = compute_weights(tree)
    blocks: list = []
    _budget_partition(tree.left, tree.right, tree.parent, weights, root, B,
                      blocks)
    block_of = [-1] * tree.n
    for i, mem in enumerate(blocks):
        for v in mem:
            block_of[v] = i
    return BlockAssignment(B=B, c=None, blocks=blocks, block_of=block_of,
                           phase2_roots=(root,),
                           phase1_levels=tree.depth[root])


def layout_aware(tree: TreeTopology, B: int, c=Fraction(1)) -> BlockAssignment:
    """Full layout for a known block size: level clustering on the top
    ``ceil(c * lg2 N)`` levels, budget recursion below.

    One preorder pass assigns every node to a block; block ids follow
    preorder of the block roots (root block first, children left to
    right).  Runs in O(N).
    """
    if B < 1:
        raise TreeError("B must be positive")
    c = _as_c(c)
    w = compute_weights(tree)
    L1 = _phase1_levels(tree.n, c, tree.height)
    stride = (B + 1).bit_length() - 1
    left, right, parent, depth = tree.left, tree.right, tree.parent, tree.depth

    blocks: list = []
    targets: list = []
    broots: list = []
    p2roots: list = []
    # stack entries: (node, block id, reciprocal path sum, error bound);
    # the last two are meaningful only below the clustered levels
    stack = [(tree.root, -1, 0.0, 0.0)]
    pop = stack.pop
    push = stack.append
    while stack:
        x, b, S, E = pop()
        d = depth[x]
        if d < L1:
            if d % stride == 0:
                b = len(blocks)
                blocks.append([x])
                targets.append(0.0)
                broots.append(x)
            else:
                blocks[b].append(x)
            cs, ce = 0.0, 0.0
        elif d == L1 or b < 0:
            # fresh budget at a recursion root (always included: B >= 1)
            p2roots.append(x)
            b = len(blocks)
            blocks.append([x])
            targets.append(B / w[x])
            broots.append(x)
            cs = 1.0 / w[x]
            ce = _U * cs
        else:
            wx = w[x]
            t = 1.0 / wx
            s2 = S + t
            tgt = targets[b]
            margin = tgt - s2
            tol = E + _U * (t + s2 + tgt)
            if margin > tol:
                include = True
            elif margin < -tol:
                include = False
            else:
                r = broots[b]
                ws = [wx]
                y = x
                while y != r:
                    y = parent[y]
                    ws.append(w[y])
                include = _exact_reciprocal_le(ws, B, w[r])
            if include:
                blocks[b].append(x)
                cs = s2
                ce = E + _U * (t + s2)
            else:
                b = len(blocks)
                blocks.append([x])
                targets.append(B / wx)
                broots.append(x)
                cs = t
                ce = _U * t
        cc = right[x]
        if cc is not None:
            push((cc, b, cs, ce))
        cc = left[x]
        if cc is not None:
            push((cc, b, cs, ce))

    block_of = [-1] * tree.n
    for i, mem in enumerate(blocks):
        for v in mem:
            block_of[v] = i
    return BlockAssignment(B=B, c=c, blocks=blocks, block_of=block_of,
                           phase2_roots=tuple(p2roots), phase1_levels=L1)


def exclusion_violations(tree: TreeTopology, weights,
                         asg: BlockAssignment) -> int:
    """Count budget-rule block boundaries violating the depth bound.

    Whenever a block root y sits strictly below the recursion roots, the
    path index k of y from the enclosing block's root r must satisfy
    ``k > B * w(y)/w(r) - 1``, i.e. ``(k+1) * w(r) > B * w(y)``.  Returns
    the number of violations; the layout algorithm should produce none.
    """
    if asg.phase1_levels is None:
        raise TreeError("assignment lacks phase information")
    L1 = asg.phase1_levels
    depth, parent = tree.depth, tree.parent
    B = asg.B
    bad = 0
    for mem in asg.blocks:
        y = mem[0]
        if depth[y] <= L1:
            continue
        r = asg.blocks[asg.block_of[parent[y]]][0]
        k = depth[y] - depth[r]
        if not (k + 1) * weights[r] > B * weights[y]:
            bad += 1
    return bad


def padded_order(asg: BlockAssignment) -> list:
    """Aware layout as a linear order with aligned B-slot regions.

    Block i occupies slots ``[i*B, (i+1)*B)``; unused slots are None.
    Mapping a slot index s to block ``s // B`` reproduces ``block_of``
    exactly, which lets the block-assignment and linear-order cost paths
    cross-check each other.
    """
    B = asg.B
    out: list = [None] * (len(asg.blocks) * B)
    for i, mem in enumerate(asg.blocks):
        base = i * B
        for j, v in enumerate(mem):
            out[base + j] = v
    return out


def layout_to_json(asg: BlockAssignment) -> dict:
    c = asg.c
    return {
        "B": asg.B,
        "c": None if c is None else "%d/%d" % (c.numerator, c.denominator),
        "blocks": [list(mem) for mem in asg.blocks],
    }


def layout_from_json(obj, n: Optional[int] = None) -> BlockAssignment:
    try:
        B = obj["B"]
        blocks = obj["blocks"]
    except (TypeError, KeyError) as exc:
        raise TreeError("layout json missing field: %s" % exc) from None
    if not isinstance(B, int) or B < 1:
        raise TreeError("B must be a positive integer")
    cs = obj.get("c")
    c = None if cs is None else Fraction(cs)
    if n is None:
        n = 1 + max((v for mem in blocks for v in mem), default=0)
    block_of = [-1] * n
    for i, mem in enumerate(blocks):
        if len(mem) > B:
            raise TreeError("block %d exceeds size B=%d" % (i, B))
        for v in mem:
            if not isinstance(v, int) or not 0 <= v < n:
                raise TreeError("node id out of range in layout: %r" % (v,))
            if block_of[v] != -1:
                raise TreeError("node %d in two blocks" % v)
            block_of[v] = i
    if -1 in block_of:
        raise TreeError("layout does not cover node %d" % block_of.index(-1))
    return BlockAssignment(B=B, c=c, blocks=[list(m) for m in blocks],
                           block_of=block_of, phase2_roots=(),
                           phase1_levels=None)
