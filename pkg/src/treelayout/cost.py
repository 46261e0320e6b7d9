"""Transfer-cost model: simulator, piecewise bound, and a tiny-instance
optimal-layout oracle.

The cost of reaching a node is the number of distinct blocks met on the
root-to-node path (cold cache, downward walk: each block faults at most
once, so distinct-block counting is the transfer count).  The simulator
works for any per-node block id function, connected blocks or not.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional

from .tree import TreeError, ResourceLimitError, TreeTopology

__all__ = [
    "CostReport",
    "DepthCost",
    "BoundQuery",
    "path_cost",
    "cost_report",
    "worst_case_cost",
    "theoretical_bound",
    "solve_p",
    "budget_along_path",
    "brute_force_optimal",
]


@dataclass
class CostReport:
    """Worst-case transfer counts per depth for one (tree, layout) pair.

    ``worst_exact[D]`` is the max cost over nodes at depth exactly D;
    ``worst_cum[D]`` the max over depths <= D; ``argmax[D]`` one node
    attaining ``worst_exact[D]``.  Lists run from depth 0 to the tree
    height inclusive.
    """

    tree_id: Optional[str]
    B: Optional[int]
    kind: str
    height: int
    worst_exact: list
    worst_cum: list
    argmax: list


class DepthCost(NamedTuple):
    worst_exact: int
    worst_cum: int
    argmax: int
    capped: bool


@dataclass(frozen=True)
class BoundQuery:
    """A (N, D, B) triple with its piecewise bound value."""

    N: int
    D: int
    B: int
    value: float

    @classmethod
    def of(cls, N: int, D: int, B: int) -> "BoundQuery":
        return cls(N, D, B, theoretical_bound(N, D, B))


def path_cost(block_of, tree: TreeTopology, node: int) -> int:
    """Distinct blocks on the root-to-``node`` path."""
    if not 0 <= node < tree.n:
        raise TreeError("node %r not in tree" % (node,))
    parent = tree.parent
    seen = set()
    x: Optional[int] = node
    while x is not None:
        seen.add(block_of[x])
        x = parent[x]
    return len(seen)


def cost_report(tree: TreeTopology, block_of, B: Optional[int] = None,
                kind: str = "aware",
                tree_id: Optional[str] = None) -> CostReport:
    """Worst-case path cost at every depth in one O(N) traversal.

    Keeps a multiset of block ids on the current root path, so it is
    correct even when a block's nodes are scattered across the tree (as
    happens for aligned slices of a linear order).
    """
    left, right, depth = tree.left, tree.right, tree.depth
    height = tree.height
    worst = [0] * (height + 1)
    arg = [tree.root] * (height + 1)
    cnt: dict = {}
    distinct = 0
    # (node, entering) pairs; exit entries restore the path multiset
    stack = [(tree.root, True)]
    pop = stack.pop
    push = stack.append
    while stack:
        x, enter = pop()
        b = block_of[x]
        if enter:
            c = cnt.get(b, 0)
            if c == 0:
                distinct += 1
            cnt[b] = c + 1
            d = depth[x]
            if distinct > worst[d]:
                worst[d] = distinct
                arg[d] = x
            push((x, False))
            c2 = right[x]
            if c2 is not None:
                push((c2, True))
            c2 = left[x]
            if c2 is not None:
                push((c2, True))
        else:
            c = cnt[b] - 1
            cnt[b] = c
            if c == 0:
                distinct -= 1
    cum = worst[:]
    for d in range(1, height + 1):
        if cum[d - 1] > cum[d]:
            cum[d] = cum[d - 1]
    return CostReport(tree_id=tree_id, B=B, kind=kind, height=height,
                      worst_exact=worst, worst_cum=cum, argmax=arg)


def worst_case_cost(tree: TreeTopology, block_of, D: int,
                    report: Optional[CostReport] = None) -> DepthCost:
    """Worst cost over nodes at depth exactly D (and the <=D variant).

    Depths beyond the tree height are capped to the height and flagged.
    Pass a precomputed ``report`` to avoid re-simulating.
    """
    if D < 0:
        raise TreeError("D must be nonnegative")
    if report is None:
        report = cost_report(tree, block_of)
    h = report.height
    capped = D > h
    d = h if capped else D
    return DepthCost(report.worst_exact[d], report.worst_cum[d],
                     report.argmax[d], capped)


def theoretical_bound(N: int, D: int, B: int) -> float:
    """Piecewise worst-case transfer bound for a depth-D search.

    ``D / lg(1+B)`` while ``D <= lg N`` (B-tree regime),
    ``lg N / lg(1 + B lg N / D)`` while ``lg N <= D <= B lg N``,
    ``D / B`` beyond (scan regime).  Continuous across both boundaries;
    0 when D = 0.  When comparing against measured costs use
    ``max(value, 1)`` for D >= 1, since any nonempty walk costs a
    transfer.
    """
    if N < 1 or B < 1 or D < 0:
        raise TreeError("need N >= 1, B >= 1, D >= 0")
    if D == 0:
        return 0.0
    lgN = math.log2(N)
    if D <= lgN:
        return D / math.log2(1 + B)
    if D <= B * lgN:
        return lgN / math.log2(1 + B * lgN / D)
    return D / B


def solve_p(N: int, D: int, B: int) -> Fraction:
    """Solve ``u * lg u = B * lg N / (2 D)`` for ``u = 1/p``.

    Monotone bisection to relative tolerance 1e-9, with p clamped to
    ``[1/N, 1]``.  The result is an exact dyadic rational, so callers get
    bit-identical values for identical inputs.
    """
    if D < 1:
        raise TreeError("D must be >= 1")
    if N < 1 or B < 1:
        raise TreeError("need N >= 1, B >= 1")
    R = B * math.log2(N) / (2.0 * D)
    if R <= 0.0:
        return Fraction(1)
    hi = float(N)
    if N == 1 or hi * math.log2(hi) <= R:
        return Fraction(1, N)
    lo = 1.0
    while hi - lo > 1e-9 * lo:
        mid = (lo + hi) / 2.0
        if mid * math.log2(mid) < R:
            lo = mid
        else:
            hi = mid
    u = (lo + hi) / 2.0
    if u <= 1.0:
        return Fraction(1)
    return Fraction(1) / Fraction(u)


def budget_along_path(tree: TreeTopology, weights, B: int, path):
    """Budget sequence along a descending path, computed two ways.

    The step recurrence starts at ``m_0 = B`` and applies
    ``m_k = (m_{k-1} - 1) * w_k / w_{k-1}``; the closed form is
    ``p_k * (B - sum_{i<k} 1/p_i)`` with ``p_i = w_i / w_0``.  Returns
    ``(by_recurrence, by_closed_form)`` as lists of exact rationals; the
    two must be identical, which is exactly the algebra being tested.
    Budgets keep evolving past the point where they drop below 1.
    """
    if not path:
        raise TreeError("path must be nonempty")
    parent = tree.parent
    for a, b in zip(path, path[1:]):
        if parent[b] != a:
            raise TreeError("not a parent-to-child path at (%r, %r)" % (a, b))
    w0 = weights[path[0]]

    m = Fraction(B)
    recur = [m]
    for prev, cur in zip(path, path[1:]):
        m = (m - 1) * weights[cur] / weights[prev]
        recur.append(m)

    closed = []
    T = Fraction(0)  # running sum of 1/p_i
    for x in path:
        pk = Fraction(weights[x], w0)
        closed.append(pk * (B - T))
        T += 1 / pk
    return recur, closed


# -- brute-force oracle -------------------------------------------------


def brute_force_optimal(tree: TreeTopology, B: int, D: int,
                        state_budget: int = 10_000_000):
    """Exact minimum worst-case cost over *all* block partitions.

    Searches partitions of the node set into parts of size <= B (parts
    need not be connected; only the size cap is a model constraint),
    minimizing the max number of distinct parts met on root-to-node paths
    of length exactly D.  Returns ``(optimum, parts)`` with one witness
    partition covering every node.

    Only nodes that lie on some root-to-depth-D path influence the cost;
    the remaining nodes are packed into leftover space afterwards.  The
    search tries answers in increasing order and backtracks over
    first-use-canonical part choices, so the result is exhaustive-exact
    while visiting far fewer states; ``state_budget`` caps the visited
    states (ResourceLimitError beyond).
    """
    n = tree.n
    if n > 12:
        raise ResourceLimitError("brute force limited to 12 nodes, got %d" % n)
    if B < 1:
        raise TreeError("B must be positive")
    if not 0 <= D <= tree.height:
        raise TreeError("no nodes at depth %d (height %d)" % (D, tree.height))

    depth, parent = tree.depth, tree.parent
    relevant = [False] * n
    for x in range(n):
        if depth[x] == D:
            y: Optional[int] = x
            while y is not None and not relevant[y]:
                relevant[y] = True
                y = parent[y]
    rnodes = [x for x in tree.preorder() if relevant[x]]
    rkids: dict = {x: [] for x in rnodes}
    for x in rnodes:
        p = parent[x]
        if p is not None:
            rkids[p].append(x)

    # sizes/part_of are the persistent partial assignment; cnt/distinct/
    # room describe the current root path only (room = free slots in parts
    # already met on the path).  trail lets a failing choice roll back the
    # assignments made by its already-successful child subtrees.
    sizes: list = []
    cnt: list = []
    part_of: dict = {}
    trail: list = []
    state = {"distinct": 0, "room": 0, "visited": 0}

    def enter(x, j):
        if j == len(sizes):
            sizes.append(0)
            cnt.append(0)
        sizes[j] += 1
        part_of[x] = j
        trail.append((x, j))
        was = cnt[j]
        cnt[j] = was + 1
        if was == 0:
            state["distinct"] += 1
            state["room"] += B - sizes[j]
        else:
            state["room"] -= 1

    def leave_path(j):
        c = cnt[j] - 1
        cnt[j] = c
        if c == 0:
            state["distinct"] -= 1
            state["room"] -= B - sizes[j]

    def rollback(mark):
        while len(trail) > mark:
            y, j = trail.pop()
            sizes[j] -= 1
            if cnt[j] > 0:
                state["room"] += 1
            del part_of[y]
        while sizes and sizes[-1] == 0:
            sizes.pop()
            cnt.pop()

    def solve(x, c) -> bool:
        state["visited"] += 1
        if state["visited"] > state_budget:
            raise ResourceLimitError("brute-force state budget exceeded")
        nparts = len(sizes)
        onpath = [j for j in range(nparts) if cnt[j] > 0 and sizes[j] < B]
        fresh = next((j for j in range(nparts) if sizes[j] == 0), nparts)
        offpath = [j for j in range(nparts)
                   if cnt[j] == 0 and 0 < sizes[j] < B]
        for j in onpath + [fresh] + offpath:
            mark = len(trail)
            enter(x, j)
            ok = state["distinct"] <= c
            if ok:
                rem = D - depth[x]
                if rem > 0:
                    need = rem - state["room"]
                    if need > 0 and state["distinct"] + (need + B - 1) // B > c:
                        ok = False
            if ok:
                for ch in rkids[x]:
                    if not solve(ch, c):
                        ok = False
                        break
            leave_path(j)
            if ok:
                return True
            rollback(mark)
        return False

    lb = (D + 1 + B - 1) // B
    best = None
    for c in range(max(1, lb), D + 2):
        sizes.clear()
        cnt.clear()
        part_of.clear()
        trail.clear()
        state["distinct"] = 0
        state["room"] = 0
        if solve(tree.root, c):
            best = c
            break
    assert best is not None  # c = D + 1 always admits singleton parts

    # pack the nodes that sit on no depth-D path into leftover space
    for x in range(n):
        if x in part_of:
            continue
        for j in range(len(sizes)):
            if sizes[j] < B:
                part_of[x] = j
                sizes[j] += 1
                break
        else:
            part_of[x] = len(sizes)
            sizes.append(1)
    parts: list = [[] for _ in range(len(sizes))]
    for x in range(n):
        parts[part_of[x]].append(x)
    return best, parts
