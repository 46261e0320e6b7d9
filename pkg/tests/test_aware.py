"""Two-phase block layout for a known block size: K-recursion, strata, blocks."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from treelayout import (compute_weights, exclusion_violations, gen_path,
                        gen_perfect, gen_random, k_set, layout_aware,
                        layout_from_json, layout_to_json, padded_order,
                        phase1_layout, phase2_layout)


def assert_valid_assignment(tree, asg):
    """Partition, size cap, per-block connectivity with a unique top node."""
    seen = set()
    for bid, members in enumerate(asg.blocks):
        assert 0 < len(members) <= asg.B
        for x in members:
            assert x not in seen
            seen.add(x)
            assert asg.block_of[x] == bid
        tops = [x for x in members
                if tree.parent[x] is None or tree.parent[x] not in members]
        assert len(tops) == 1  # connected with a unique topmost node
    assert seen == set(range(tree.n))


# ------------------------------------------------------------ k_set

def test_kset_below_one_is_empty():
    t = gen_path(4)
    w = compute_weights(t)
    assert k_set(t, 0, Fraction(1, 2), w) == set()


def test_kset_perfect7_budget3():
    t = gen_perfect(2)
    w = compute_weights(t)
    # each child budget (3-1)*(3/7) = 6/7 < 1
    assert k_set(t, 0, 3, w) == {0}


def test_kset_path4_budget4():
    t = gen_path(4)
    w = compute_weights(t)
    # x1 gets 3*(3/4) = 9/4; x2 gets (9/4 - 1)*(2/3) = 5/6 < 1
    assert k_set(t, 0, 4, w) == {0, 1}


@given(n=st.integers(1, 70), seed=st.integers(0, 2**32 - 1),
       num=st.integers(0, 64 * 8), den=st.integers(1, 8))
@settings(max_examples=120, deadline=None)
def test_kset_size_and_shape(n, seed, num, den):
    t = gen_random(n, seed)
    w = compute_weights(t)
    A = Fraction(num, den)
    K = k_set(t, t.root, A, w)
    assert len(K) <= A  # |K| <= floor(A)
    if A >= 1:
        assert t.root in K
    for x in K:  # connected and downward closed from the root
        p = t.parent[x]
        assert p is None or p in K


# ------------------------------------------------------------ phase 1

def test_phase1_perfect7_fits_one_block():
    t = gen_perfect(2)
    asg, roots = phase1_layout(t, 7, c=Fraction(100))
    assert [sorted(b) for b in asg.blocks] == [[0, 1, 2, 3, 4, 5, 6]]
    assert roots == ()


def test_phase1_perfect7_b3():
    t = gen_perfect(2)
    asg, roots = phase1_layout(t, 3, c=Fraction(100))
    assert sorted(asg.blocks[0]) == [0, 1, 2]  # top floor(lg 4) = 2 levels
    assert len(asg.blocks) == 5
    assert roots == ()


def test_phase1_path1024_b15():
    t = gen_path(1024)
    asg, roots = phase1_layout(t, 15, c=Fraction(1))
    # 10 levels in strata of floor(lg 16) = 4: blocks of 4, 4, 2 nodes
    assert [len(b) for b in asg.blocks] == [4, 4, 2]
    assert list(roots) == [10]


def test_phase1_b1_singletons():
    t = gen_perfect(2)
    asg, roots = phase1_layout(t, 1, c=Fraction(100))
    assert all(len(b) == 1 for b in asg.blocks)
    assert roots == ()


# ------------------------------------------------------------ phase 2

def test_phase2_path4_b4():
    t = gen_path(4)
    asg = phase2_layout(t, 0, 4)
    assert [sorted(b) for b in asg.blocks] == [[0, 1], [2, 3]]


def test_phase2_perfect7_b3_singletons():
    t = gen_perfect(2)
    asg = phase2_layout(t, 0, 3)
    assert all(len(b) == 1 for b in asg.blocks)
    assert len(asg.blocks) == 7


def test_phase2_perfect7_b7():
    # K(root, 7) = {0, 1, 2}: children get (7-1)*(3/7) = 18/7, their
    # leaves (18/7 - 1)*(1/3) = 11/21 < 1, so the four leaves restart
    # with fresh budgets and become singleton blocks
    t = gen_perfect(2)
    asg = phase2_layout(t, 0, 7)
    assert sorted(asg.blocks[0]) == [0, 1, 2]
    assert sorted(len(b) for b in asg.blocks) == [1, 1, 1, 1, 3]


def test_phase2_block0_equals_kset():
    # the streaming engine must agree with the literal recursion
    for seed in range(40):
        rng = random.Random(seed)
        n = rng.randint(1, 60)
        B = rng.choice([1, 2, 3, 4, 7, 8, 15, 64])
        t = gen_random(n, seed=seed * 977 + 3)
        w = compute_weights(t)
        asg = phase2_layout(t, t.root, B)
        assert set(asg.blocks[0]) == k_set(t, t.root, B, w), (n, B, seed)


def test_phase2_fresh_budget_at_every_block_root():
    # every block equals the K-set of its own root with a fresh budget;
    # subtree weights don't depend on where the enclosing recursion cut
    t = gen_random(300, seed=5)
    B = 8
    asg = phase2_layout(t, t.root, B)
    w = compute_weights(t)
    for members in asg.blocks:
        assert set(members) == k_set(t, members[0], B, w)


# ------------------------------------------------------------ full layout

def test_aware_single_node():
    t = gen_path(1)
    for B in (1, 2, 64):
        asg = layout_aware(t, B)
        assert asg.blocks == ([0],) or list(asg.blocks) == [[0]]


def test_aware_perfect2047_b7_all_phase1():
    t = gen_perfect(10)
    asg = layout_aware(t, 7, Fraction(1))
    assert asg.phase2_roots == ()
    assert asg.phase1_levels == 11
    assert_valid_assignment(t, asg)


def test_aware_path1024_b15():
    t = gen_path(1024)
    asg = layout_aware(t, 15)
    sizes = [len(b) for b in asg.blocks]
    assert sizes[:3] == [4, 4, 2]
    # near-1 densities deliver ~B - k nodes per block; only the last few
    # blocks underfill further as the leftover path gets short
    assert all(s == 14 for s in sizes[3:-8])
    assert all(1 <= s <= 15 for s in sizes)
    assert sum(sizes) == 1024


def test_aware_block_ids_follow_discovery_order():
    t = gen_random(500, seed=11)
    asg = layout_aware(t, 16)
    pre = t.pre_index()
    roots = [b[0] for b in asg.blocks]
    assert roots == sorted(roots, key=lambda x: pre[x])


@given(n=st.integers(1, 400), seed=st.integers(0, 2**32 - 1),
       B=st.sampled_from([1, 2, 3, 4, 8, 16, 64, 256]))
@settings(max_examples=80, deadline=None)
def test_aware_partition_properties(n, seed, B):
    t = gen_random(n, seed)
    asg = layout_aware(t, B)
    assert_valid_assignment(t, asg)


def test_aware_deterministic():
    t = gen_random(2000, seed=99)
    a = layout_aware(t, 32)
    b = layout_aware(t, 32)
    assert a.blocks == b.blocks and a.block_of == b.block_of


def test_exclusion_bound_zero_violations():
    for seed in (0, 1, 2):
        t = gen_random(3000, seed=seed)
        w = compute_weights(t)
        for B in (2, 8, 64):
            asg = layout_aware(t, B)
            assert exclusion_violations(t, w, asg) == 0


# ------------------------------------------------------------ serialization

def test_layout_json_roundtrip():
    t = gen_random(200, seed=3)
    asg = layout_aware(t, 9, Fraction(3, 2))
    obj = layout_to_json(asg)
    assert obj["c"] == "3/2"
    back = layout_from_json(obj, n=t.n)
    assert list(back.blocks) == [list(b) for b in asg.blocks]
    assert back.B == 9


def test_layout_json_rejects_oversized_block():
    obj = {"B": 2, "c": "1", "blocks": [[0, 1, 2]]}
    with pytest.raises(Exception):
        layout_from_json(obj, n=3)


def test_layout_json_rejects_duplicates():
    obj = {"B": 4, "c": "1", "blocks": [[0, 1], [1, 2]]}
    with pytest.raises(Exception):
        layout_from_json(obj, n=3)


def test_padded_order_shape():
    t = gen_random(50, seed=21)
    asg = layout_aware(t, 8)
    slots = padded_order(asg)
    assert len(slots) == 8 * len(asg.blocks)
    ids = [x for x in slots if x is not None]
    assert sorted(ids) == list(range(50))
    for i, members in enumerate(asg.blocks):
        chunk = [x for x in slots[8 * i:8 * (i + 1)] if x is not None]
        assert chunk == list(members)
