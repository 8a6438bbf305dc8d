import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nocollide import dop as D
from nocollide.errors import InvalidParameter, NoParent, ParseError, TooLarge
from nocollide.oracles import count_tree


def P(text, K):
    return D.parse_dop(text, K)


# --- construction and text format ----------------------------------------------


def test_make_root():
    assert D.format_dop(D.make_root(3)) == "[{1,2,3}]"
    assert D.format_dop(D.make_root(1)) == "[{1}]"
    with pytest.raises(InvalidParameter):
        D.make_root(0)


def test_parse_example_from_text():
    d = P("[{1,3,5}>_1{2,6,7}>_2{4}]", 7)
    assert d.parts == (frozenset({1, 3, 5}), frozenset({2, 6, 7}), frozenset({4}))
    assert d.sign_order == (1, 2)
    assert D.parse_dop("[{1,2,3}]", 3) == D.make_root(3)


def test_parse_rejects_bad_label():
    with pytest.raises(ParseError):
        P("[{1}>_2{2}]", 2)


@pytest.mark.parametrize(
    "text",
    ["", "[{1,2}", "{1,2}]", "[{1}>{2}]", "[{1}>_1{1}]", "[{1}>_1{}]", "[{1,2}]x", "[{1}>_1{3}]"],
)
def test_parse_rejects_malformed(text):
    with pytest.raises(ParseError):
        P(text, 2)


def test_parse_error_has_position():
    with pytest.raises(ParseError) as info:
        P("[{1}>_2{2}]", 2)
    assert info.value.position is not None


def test_parse_accepts_unsorted_blocks_but_not_whitespace():
    assert P("[{3,1}>_1{2}]", 3) == P("[{1,3}>_1{2}]", 3)
    with pytest.raises(ParseError):
        P(" [{1,3}>_1{2}]", 3)


def test_format_round_trip_over_tree():
    for node in D.enumerate_tree(4, 2):
        assert D.parse_dop(D.format_dop(node), 4) == node


# --- decided sets, parent, children ------------------------------------------------


def test_decided_sets_inner():
    ds = D.decided_sets(P("[{1}>_1{2,3}]", 3), 2)
    assert ds.i_p == 1
    assert ds.a_set == {1} and ds.b_set == {2, 3}
    assert not ds.is_leaf


def test_decided_sets_leaf_from_text():
    ds = D.decided_sets(P("[{4,8}>_2{2,6,7}>_1{1,3,5}]", 8), 2)
    assert ds.a_set == {4, 8} and ds.b_set == set() and ds.is_leaf


def test_root_is_leaf_when_k_equals_m():
    ds = D.decided_sets(D.make_root(4), 4)
    assert ds.a_set == {1, 2, 3, 4} and ds.b_set == set() and ds.is_leaf


def test_parent_examples():
    assert D.format_dop(D.parent(P("[{1,3,5}>_1{2,6,7}>_2{4}]", 7))) == "[{1,3,5}>_1{2,4,6,7}]"
    assert D.parent(P("[{1}>_1{2,3}]", 3)) == D.make_root(3)
    with pytest.raises(NoParent):
        D.parent(D.make_root(3))


def test_children_examples():
    assert len(D.children(D.make_root(3), 2)) == 6
    kids = [D.format_dop(k) for k in D.children(P("[{1}>_1{2,3}]", 3), 2)]
    assert kids == ["[{1}>_1{2}>_2{3}]", "[{1}>_1{3}>_2{2}]"]
    leaf = P("[{1}>_1{2}>_2{3}]", 3)
    assert D.children(leaf, 2) == []


def test_children_have_the_node_as_parent():
    for node in D.enumerate_tree(5, 2):
        for kid in D.children(node, 2):
            assert D.parent(kid) == node
            assert kid.depth == node.depth + 1


def test_adjacency_examples():
    root = D.make_root(3)
    a, b = P("[{1}>_1{2,3}]", 3), P("[{2}>_1{1,3}]", 3)
    assert D.is_adjacent(root, a, 2)
    assert D.is_adjacent(a, a, 2)
    assert not D.is_adjacent(a, b, 2)


def test_depth_examples():
    assert D.depth(D.make_root(3)) == 0
    assert D.depth(P("[{1}>_1{2,3}]", 3)) == 1
    assert D.depth(P("[{1}>_1{2}>_2{3}]", 3)) == 2


def test_ancestors_run_root_first():
    node = P("[{1}>_1{2}>_2{3}]", 3)
    chain = D.ancestors(node)
    assert chain[0] == D.make_root(3) and chain[-1] == node
    assert [d.depth for d in chain] == [0, 1, 2]


# --- enumeration and counts ---------------------------------------------------


def test_enumerate_small_trees():
    nodes = list(D.enumerate_tree(3, 2))
    assert len(nodes) == 13
    assert sum(D.is_leaf(d, 2) for d in nodes) == 9
    assert [D.format_dop(d) for d in D.enumerate_tree(2, 1)] == ["[{1,2}]", "[{1}>_1{2}]", "[{2}>_1{1}]"]
    assert list(D.enumerate_tree(3, 3)) == [D.make_root(3)]


@pytest.mark.parametrize("K,m", [(2, 1), (3, 1), (3, 2), (4, 2), (4, 3), (5, 2), (5, 3)])
def test_closed_count_matches_walk(K, m):
    assert D.tree_size(K, m) == count_tree(K, m)


def test_enumeration_has_no_duplicates_and_is_closed_under_parent():
    nodes = list(D.enumerate_tree(5, 3))
    assert len(nodes) == len(set(nodes))
    seen = set(nodes)
    for node in nodes:
        if not node.is_root:
            assert D.parent(node) in seen


def test_enumerate_refuses_huge_trees():
    with pytest.raises(TooLarge):
        list(D.enumerate_tree(9, 4, cap=1000))


# --- feasibility and membership --------------------------------------------------


def test_feas_examples():
    f = lambda s: frozenset(s)
    assert D.feas(D.make_root(3), 2) == {f({1, 2}), f({1, 3}), f({2, 3})}
    assert D.feas(P("[{1}>_1{2,3}]", 3), 2) == {f({1, 2}), f({1, 3})}
    assert D.feas(P("[{2,3}>_1{1}]", 3), 2) == {f({2, 3})}


def test_membership_examples():
    assert D.validate_membership(P("[{4,8}>_2{2,6,7}>_1{1,3,5}]", 8), 2)
    assert not D.validate_membership(P("[{4,8}>_1{2,6,7}>_2{1,3,5}]", 8), 2)
    assert D.validate_membership(D.make_root(5), 2)


def test_membership_agrees_with_enumeration():
    # every well-formed DOP on 4 arms with 3 parts, checked against the tree
    tree = set(D.enumerate_tree(4, 2))
    arms = range(1, 5)
    for labels in itertools.product(range(3), repeat=4):
        if set(labels) != {0, 1, 2}:
            continue
        parts = tuple(frozenset(a for a, l in zip(arms, labels) if l == i) for i in range(3))
        for sigma in ((1, 2), (2, 1)):
            d = D.Dop(4, parts, sigma)
            assert D.validate_membership(d, 2) == (d in tree)


# --- properties ----------------------------------------------------------------


@st.composite
def tree_nodes(draw, max_k=6):
    K = draw(st.integers(2, max_k))
    m = draw(st.integers(1, K - 1))
    node = D.make_root(K)
    while not D.is_leaf(node, m) and draw(st.booleans()):
        kids = D.children(node, m)
        node = kids[draw(st.integers(0, len(kids) - 1))]
    return node, m


@given(tree_nodes())
@settings(max_examples=300, deadline=None)
def test_decided_set_invariants(sample):
    node, m = sample
    ds = D.decided_sets(node, m)
    assert len(ds.a_set) <= m and not ds.a_set & ds.b_set
    assert ds.is_leaf == (len(ds.a_set) == m) == (not ds.b_set)
    if not ds.is_leaf:
        assert len(ds.a_set) + len(ds.b_set) > m
    assert D.validate_membership(node, m)


@given(tree_nodes())
@settings(max_examples=300, deadline=None)
def test_splits_round_trip(sample):
    node, m = sample
    assert D.from_splits(node.arm_count, m, D.splits_of(node)) == node


@given(tree_nodes(), st.randoms())
@settings(max_examples=200, deadline=None)
def test_relabel_preserves_membership(sample, rnd):
    node, m = sample
    arms = list(range(1, node.arm_count + 1))
    image = arms[:]
    rnd.shuffle(image)
    moved = D.relabel(node, dict(zip(arms, image)))
    assert D.validate_membership(moved, m)
    assert D.feas(moved, m) == {frozenset(dict(zip(arms, image))[a] for a in s) for s in D.feas(node, m)}
