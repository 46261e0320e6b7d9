"""Static binary-tree topologies, subtree weights, and tree generators.

Trees are immutable once built: node ids are dense integers ``0..n-1`` and
every structural query is an O(1) array lookup.  The generators cover the
shapes used by the benchmark harness: perfect trees, left-spine paths,
uniformly random shapes, and an adversarial branching-plus-paths family
that is expensive for any block layout.
"""
from __future__ import annotations

import json
import random
from collections import deque
from fractions import Fraction
from typing import Iterator, Optional, Sequence

__all__ = [
    "TreeError",
    "ResourceLimitError",
    "TreeTopology",
    "build_tree",
    "compute_weights",
    "density",
    "gen_perfect",
    "gen_path",
    "gen_random",
    "gen_lower_bound",
    "iter_shapes",
    "shape_of",
    "shape_to_tree",
    "mirror_shape",
    "tree_to_json",
    "tree_from_json",
    "save_tree",
    "load_tree",
]


class TreeError(ValueError):
    """Raised for malformed tree structures or inputs."""


class ResourceLimitError(RuntimeError):
    """Raised when an operation would exceed its configured size guard."""


MAX_PERFECT_HEIGHT = 40


class TreeTopology:
    """Immutable rooted binary tree over dense node ids.

    Parameters
    ----------
    left, right:
        Per-node child ids, ``None`` where a child is absent.
    root:
        Id of the root node.

    Construction validates that the arrays describe a single connected
    tree: every non-root node has exactly one parent, there are no cycles,
    and all ids lie in ``0..n-1``.  Depths are computed eagerly; preorder
    is computed lazily and cached.
    """

    __slots__ = ("n", "root", "left", "right", "parent", "depth",
                 "_pre", "_tin", "_height")

    def __init__(self, left: Sequence[Optional[int]],
                 right: Sequence[Optional[int]], root: int = 0):
        n = len(left)
        if n == 0:
            raise TreeError("tree must have at least one node")
        if len(right) != n:
            raise TreeError("left/right arrays differ in length")
        if not 0 <= root < n:
            raise TreeError("root id out of range")
        parent: list = [None] * n
        for x in range(n):
            for c in (left[x], right[x]):
                if c is None:
                    continue
                if not isinstance(c, int) or not 0 <= c < n:
                    raise TreeError("child id out of range: %r" % (c,))
                if c == x:
                    raise TreeError("cycle detected: node %d is its own child" % x)
                if parent[c] is not None:
                    raise TreeError("duplicate child slot: node %d has two parents" % c)
                parent[c] = x
        roots = [x for x in range(n) if parent[x] is None]
        if not roots:
            raise TreeError("cycle detected: every node has a parent")
        if len(roots) > 1:
            raise TreeError("disconnected node: %d parentless nodes" % len(roots))
        if roots[0] != root:
            raise TreeError("declared root %d is not the parentless node" % root)

        depth = [0] * n
        stack = [root]
        seen = 1
        while stack:
            x = stack.pop()
            d = depth[x] + 1
            for c in (left[x], right[x]):
                if c is not None:
                    depth[c] = d
                    stack.append(c)
                    seen += 1
        if seen != n:
            # unreachable nodes all have parents here, so they sit on cycles
            raise TreeError("cycle detected: %d nodes unreachable from root" % (n - seen))

        object.__setattr__(self, "n", n)
        object.__setattr__(self, "root", root)
        object.__setattr__(self, "left", tuple(left))
        object.__setattr__(self, "right", tuple(right))
        object.__setattr__(self, "parent", tuple(parent))
        object.__setattr__(self, "depth", tuple(depth))
        object.__setattr__(self, "_pre", None)
        object.__setattr__(self, "_tin", None)
        object.__setattr__(self, "_height", None)

    def __setattr__(self, name, value):
        raise AttributeError("TreeTopology is immutable")

    # -- derived, cached ------------------------------------------------

    @property
    def height(self) -> int:
        h = self._height
        if h is None:
            h = max(self.depth)
            object.__setattr__(self, "_height", h)
        return h

    def preorder(self) -> tuple:
        """Node ids in preorder (parent before children, left first)."""
        pre = self._pre
        if pre is None:
            left, right = self.left, self.right
            out = []
            push = out.append
            stack = [self.root]
            pop = stack.pop
            while stack:
                x = pop()
                push(x)
                c = right[x]
                if c is not None:
                    stack.append(c)
                c = left[x]
                if c is not None:
                    stack.append(c)
            pre = tuple(out)
            object.__setattr__(self, "_pre", pre)
        return pre

    def pre_index(self) -> tuple:
        """Preorder rank of each node; subtrees occupy contiguous ranks."""
        tin = self._tin
        if tin is None:
            order = self.preorder()
            t = [0] * self.n
            for i, x in enumerate(order):
                t[x] = i
            tin = tuple(t)
            object.__setattr__(self, "_tin", tin)
        return tin

    def __eq__(self, other):
        return (isinstance(other, TreeTopology)
                and self.root == other.root
                and self.left == other.left
                and self.right == other.right)

    def __hash__(self):
        return hash((self.root, self.left, self.right))

    def __repr__(self):
        return "TreeTopology(n=%d, root=%d, height=%d)" % (self.n, self.root, self.height)


def build_tree(edges, n: Optional[int] = None) -> TreeTopology:
    """Build a validated tree from ``(parent, child, side)`` triples.

    ``side`` is ``"L"`` or ``"R"``.  When ``n`` is omitted it is inferred
    as ``max id + 1`` (a single node for an empty edge list).  The root is
    the unique node that never appears as a child.
    """
    if n is None:
        n = 1
        for p, c, _s in edges:
            n = max(n, p + 1, c + 1)
    left: list = [None] * n
    right: list = [None] * n
    nkids = [0] * n
    for p, c, side in edges:
        if not (0 <= p < n and 0 <= c < n):
            raise TreeError("edge id out of range: (%r, %r)" % (p, c))
        if side not in ("L", "R"):
            raise TreeError("side must be 'L' or 'R', got %r" % (side,))
        nkids[p] += 1
        if nkids[p] > 2:
            raise TreeError("node %d has more than two children" % p)
        slot = left if side == "L" else right
        if slot[p] is not None:
            raise TreeError("duplicate child slot: node %d side %s" % (p, side))
        slot[p] = c
    has_parent = [False] * n
    for p, c, _s in edges:
        if has_parent[c]:
            raise TreeError("duplicate child slot: node %d has two parents" % c)
        has_parent[c] = True
    roots = [x for x in range(n) if not has_parent[x]]
    if not roots:
        raise TreeError("cycle detected: every node has a parent")
    if len(roots) > 1:
        raise TreeError("disconnected node: %d parentless nodes" % len(roots))
    return TreeTopology(left, right, roots[0])


def compute_weights(tree: TreeTopology) -> list:
    """Subtree size of every node; ``w[x] = 1 + w(left) + w(right)``.

    Missing children count as 0.  Returned list is treated as read-only.
    """
    w = [1] * tree.n
    parent = tree.parent
    for x in reversed(tree.preorder()):
        p = parent[x]
        if p is not None:
            w[p] += w[x]
    return w


def density(tree: TreeTopology, weights, node: int, subtree_root: int) -> Fraction:
    """Exact fraction ``w(node)/w(subtree_root)``.

    ``node`` must lie in the subtree of ``subtree_root``; densities along
    a root-to-node path are non-increasing.
    """
    tin = tree.pre_index()
    lo = tin[subtree_root]
    if not lo <= tin[node] < lo + weights[subtree_root]:
        raise TreeError("node %d outside subtree of %d" % (node, subtree_root))
    return Fraction(weights[node], weights[subtree_root])


# -- generators ---------------------------------------------------------


def gen_perfect(height: int) -> TreeTopology:
    """Perfect binary tree with all ``2**height`` leaves at depth ``height``."""
    if height < 0:
        raise TreeError("height must be nonnegative")
    if height > MAX_PERFECT_HEIGHT:
        raise ResourceLimitError("perfect-tree height %d exceeds guard %d"
                                 % (height, MAX_PERFECT_HEIGHT))
    n = (1 << (height + 1)) - 1
    left: list = [None] * n
    right: list = [None] * n
    limit = (n - 1) // 2
    for x in range(limit):
        left[x] = 2 * x + 1
        right[x] = 2 * x + 2
    return TreeTopology(left, right, 0)


def gen_path(n: int) -> TreeTopology:
    """Left-spine path: node ``i`` has single left child ``i+1``."""
    if n < 1:
        raise TreeError("n must be positive")
    left: list = [i + 1 for i in range(n - 1)] + [None]
    right: list = [None] * n
    return TreeTopology(left, right, 0)


def gen_random(n: int, seed: int) -> TreeTopology:
    """Uniformly random binary-tree shape on ``n`` nodes.

    Grows a random full binary tree one leaf at a time (each of the
    ``4k+2`` insertion positions equally likely, which makes all shapes
    equally likely), then strips the leaves so the internal nodes form the
    returned n-node tree.  Node ids are assigned in preorder.
    Deterministic for a fixed ``(n, seed)``.
    """
    if n < 1:
        raise TreeError("n must be positive")
    rng = random.Random(seed)
    size = 2 * n + 1
    left = [None] * size
    right = [None] * size
    par: list = [None] * size
    root = 0  # lone leaf; leaves get even ids, internals odd ids
    for k in range(n):
        x = rng.randrange(4 * k + 2)
        j = x >> 1
        m = 2 * k + 1
        leaf = 2 * k + 2
        p = par[j]
        par[m] = p
        if p is None:
            root = m
        elif left[p] == j:
            left[p] = m
        else:
            right[p] = m
        if x & 1:
            left[m], right[m] = leaf, j
        else:
            left[m], right[m] = j, leaf
        par[j] = m
        par[leaf] = m

    # strip leaves (even ids), relabel internals in preorder
    ids = {}
    out_left: list = [None] * n
    out_right: list = [None] * n
    nxt = 0
    stack = [root]
    order = []
    while stack:
        x = stack.pop()
        ids[x] = nxt
        order.append(x)
        nxt += 1
        cr = right[x]
        cl = left[x]
        if cr is not None and cr & 1:
            stack.append(cr)
        if cl is not None and cl & 1:
            stack.append(cl)
    for x in order:
        xi = ids[x]
        cl = left[x]
        if cl is not None and cl & 1:
            out_left[xi] = ids[cl]
        cr = right[x]
        if cr is not None and cr & 1:
            out_right[xi] = ids[cr]
    return TreeTopology(out_left, out_right, 0)


def gen_lower_bound(B: int, inv_p: int, target_n: int) -> TreeTopology:
    """Adversarial tree: branching bursts separated by long paths.

    One gadget is a perfect binary tree with ``inv_p`` leaves, each leaf
    extended by a path of ``L = max(1, round(B/inv_p))`` nodes; every path
    end roots a recursive copy.  A gadget has ``2*inv_p - 1 + inv_p*L``
    nodes, which always exceeds ``B``, so any block layout pays at least
    one extra transfer per gadget level.  Complete gadgets are attached
    breadth-first left-to-right; a final partial gadget (a breadth-first
    prefix) lands the total node count on ``target_n`` exactly.
    """
    if B < 1:
        raise TreeError("B must be positive")
    if inv_p < 2 or inv_p & (inv_p - 1):
        raise TreeError("inv_p must be a power of two >= 2, got %r" % (inv_p,))
    L = max(1, round(Fraction(B, inv_p)))
    gadget = 2 * inv_p - 1 + inv_p * L
    if target_n < gadget:
        raise TreeError("target_n=%d smaller than one gadget (%d nodes)"
                        % (target_n, gadget))

    left: list = []
    right: list = []

    def emit(parent: Optional[int], side: str) -> int:
        nid = len(left)
        left.append(None)
        right.append(None)
        if parent is not None:
            if side == "L":
                left[parent] = nid
            else:
                right[parent] = nid
        return nid

    def build_gadget(attach: Optional[int], budget: int):
        """Emit a BFS prefix of one gadget, at most ``budget`` nodes.

        Returns (nodes_emitted, path_end_ids); path ends are only
        reported when the gadget is complete.
        """
        top = 2 * inv_p - 1
        local: list = []
        count = 0
        # perfect top part, heap order = BFS order
        for k in range(top):
            if count >= budget:
                return count, []
            if k == 0:
                nid = emit(attach, "L")
            else:
                p = local[(k - 1) // 2]
                nid = emit(p, "L" if k & 1 else "R")
            local.append(nid)
            count += 1
        # paths hanging off the inv_p deepest leaves, level by level
        prev = local[inv_p - 1:]
        for _s in range(L):
            cur = []
            for i in range(inv_p):
                if count >= budget:
                    return count, []
                cur.append(emit(prev[i], "L"))
                count += 1
            prev = cur
        return count, prev

    remaining = target_n
    done, ends = build_gadget(None, remaining)
    remaining -= done
    queue = deque(ends)
    while remaining > 0:
        attach = queue.popleft()
        done, ends = build_gadget(attach, min(gadget, remaining))
        remaining -= done
        queue.extend(ends)
    return TreeTopology(left, right, 0)


# -- shape enumeration --------------------------------------------------

_SHAPE_MEMO: dict = {0: (None,)}


def _shapes(n: int) -> tuple:
    got = _SHAPE_MEMO.get(n)
    if got is not None:
        return got
    out = []
    for i in range(n):
        for l in _shapes(i):
            for r in _shapes(n - 1 - i):
                out.append((l, r))
    got = tuple(out)
    _SHAPE_MEMO[n] = got
    return got


def iter_shapes(n: int) -> Iterator:
    """All binary-tree shapes on ``n`` nodes as nested ``(left, right)``
    tuples (``None`` = empty), in a fixed deterministic order.  The count
    is the n-th Catalan number."""
    if n < 0:
        raise TreeError("n must be nonnegative")
    return iter(_shapes(n))


def mirror_shape(shape):
    """Left-right reflection of a shape tuple."""
    if shape is None:
        return None
    l, r = shape
    return (mirror_shape(r), mirror_shape(l))


def shape_to_tree(shape) -> TreeTopology:
    """Materialize a shape tuple as a topology with preorder ids."""
    if shape is None:
        raise TreeError("empty shape has no tree")
    left: list = []
    right: list = []
    stack = [(shape, None, "L")]
    while stack:
        s, parent, side = stack.pop()
        nid = len(left)
        left.append(None)
        right.append(None)
        if parent is not None:
            if side == "L":
                left[parent] = nid
            else:
                right[parent] = nid
        l, r = s
        if r is not None:
            stack.append((r, nid, "R"))
        if l is not None:
            stack.append((l, nid, "L"))
    return TreeTopology(left, right, 0)


def shape_of(tree: TreeTopology) -> tuple:
    """Shape tuple of a topology (inverse of :func:`shape_to_tree`)."""
    key: list = [None] * tree.n
    left, right = tree.left, tree.right
    for x in reversed(tree.preorder()):
        l, r = left[x], right[x]
        key[x] = (None if l is None else key[l],
                  None if r is None else key[r])
    return key[tree.root]


# -- serialization ------------------------------------------------------


def tree_to_json(tree: TreeTopology) -> dict:
    return {
        "n": tree.n,
        "root": tree.root,
        "nodes": [{"id": x, "left": tree.left[x], "right": tree.right[x]}
                  for x in range(tree.n)],
    }


def tree_from_json(obj) -> TreeTopology:
    try:
        n = obj["n"]
        root = obj["root"]
        nodes = obj["nodes"]
    except (TypeError, KeyError) as exc:
        raise TreeError("tree json missing field: %s" % exc) from None
    if not isinstance(n, int) or n < 1:
        raise TreeError("n must be a positive integer")
    if len(nodes) != n:
        raise TreeError("expected %d node records, got %d" % (n, len(nodes)))
    left: list = [None] * n
    right: list = [None] * n
    seen = [False] * n
    for rec in nodes:
        x = rec.get("id")
        if not isinstance(x, int) or not 0 <= x < n:
            raise TreeError("node id out of range: %r" % (x,))
        if seen[x]:
            raise TreeError("duplicate node id %d" % x)
        seen[x] = True
        left[x] = rec.get("left")
        right[x] = rec.get("right")
    return TreeTopology(left, right, root)


def save_tree(tree: TreeTopology, path) -> None:
    with open(path, "w") as fh:
        json.dump(tree_to_json(tree), fh)
        fh.write("\n")


def load_tree(path) -> TreeTopology:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise TreeError("invalid tree json: %s" % exc) from None
    return tree_from_json(obj)
