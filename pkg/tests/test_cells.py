import csv
import io

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from nocollide import dop as D
from nocollide.cells import (
    CellQuery,
    Thresholds,
    assign_cell,
    best_cut_child,
    gap_of,
    range_of,
    sample_slice,
    slice_csv,
    slice_neighbours,
    slice_triangle,
    slice_weights,
    sorted_block,
)
from nocollide.errors import InvalidParameter, UndefinedStatistic

X = (0.9, 0.5, 0.1)


def P(text, K=3):
    return D.parse_dop(text, K)


def fmt(d):
    return D.format_dop(d)


# --- statistics -----------------------------------------------------------------


def test_range_examples():
    assert range_of(D.make_root(3), X, 2) == pytest.approx(0.8)
    assert range_of(P("[{1}>_1{2,3}]"), X, 2) == pytest.approx(0.4)
    assert range_of(D.make_root(4), (0.3,) * 4, 2) == 0.0


def test_gap_examples():
    assert gap_of(P("[{1}>_1{2,3}]"), X) == pytest.approx(0.4)
    assert gap_of(P("[{1,2}>_1{3}]"), X) == pytest.approx(0.4)
    assert gap_of(P("[{1}>_1{2}]", 2), (0.2, 0.7)) == pytest.approx(-0.5)


def test_statistics_undefined_where_documented():
    with pytest.raises(UndefinedStatistic):
        gap_of(D.make_root(3), X)
    with pytest.raises(UndefinedStatistic):
        range_of(P("[{1}>_1{2}>_2{3}]"), X, 2)
    with pytest.raises(UndefinedStatistic):
        sorted_block(P("[{1}>_1{2}>_2{3}]"), X, 2)


def test_sorted_block_examples():
    assert sorted_block(D.make_root(3), X, 2) == (1, 2, 3)
    assert sorted_block(D.make_root(3), (0.5, 0.9, 0.5), 2) == (2, 1, 3)
    assert sorted_block(P("[{1}>_1{2,3}]"), (0.6, 0.1, 0.7), 2) == (3, 2)


def test_best_cut_examples():
    child, gap = best_cut_child(D.make_root(3), X, 2)
    assert fmt(child) == "[{1}>_1{2,3}]" and gap == pytest.approx(0.4)
    child, gap = best_cut_child(D.make_root(3), (0.9, 0.8, 0.1), 2)
    assert fmt(child) == "[{1,2}>_1{3}]" and gap == pytest.approx(0.7)
    _, gap = best_cut_child(D.make_root(4), (0.4,) * 4, 2)
    assert gap == 0.0


# --- the partition map ------------------------------------------------------------


def test_hand_trace_descends_to_leaf():
    q = CellQuery(X, 0.01, 2)
    assert fmt(assign_cell(q, Thresholds.constant(0.2, 3))) == "[{1}>_1{2}>_2{3}]"


def test_hand_trace_stops_at_root_on_exact_interface():
    q = CellQuery((0.9, 0.74, 0.1), 0.01, 2)
    assert assign_cell(q, Thresholds.constant(0.2, 3)) == D.make_root(3)


@pytest.mark.parametrize("K,m", [(2, 1), (3, 2), (5, 3), (6, 1)])
def test_constant_input_maps_to_root(K, m):
    rng = np.random.default_rng(K * 10 + m)
    for _ in range(20):
        c = Thresholds(tuple(rng.random(K) / K))
        q = CellQuery((float(rng.random()),) * K, float(10 ** rng.uniform(-4, 0)), m)
        assert assign_cell(q, c) == D.make_root(K)


def test_query_and_threshold_validation():
    with pytest.raises(InvalidParameter):
        CellQuery((0.5, 1.2), 0.1, 1)
    with pytest.raises(InvalidParameter):
        CellQuery((0.5, 0.2), 0.0, 1)
    with pytest.raises(InvalidParameter):
        CellQuery((0.5, 0.2), 0.1, 3)
    with pytest.raises(InvalidParameter):
        Thresholds((0.2, 0.6))
    with pytest.raises(InvalidParameter):
        assign_cell(CellQuery(X, 0.1, 2), Thresholds.constant(0.1, 4))


def test_output_is_a_tree_node_obeyed_by_x():
    rng = np.random.default_rng(7)
    for _ in range(500):
        K = int(rng.integers(2, 7))
        m = int(rng.integers(1, K + 1))
        x = tuple(rng.random(K))
        node = assign_cell(CellQuery(x, float(10 ** rng.uniform(-4, -1)), m), Thresholds(tuple(rng.random(K) / K)))
        assert D.validate_membership(node, m)
        for hi, lo in zip(node.parts, node.parts[1:]):
            assert min(x[a - 1] for a in hi) >= max(x[a - 1] for a in lo)


def test_smaller_eps_never_stops_earlier_on_separated_input():
    # well separated values with c = 0 cut at the first gap every time
    x = (0.95, 0.7, 0.45, 0.2)
    node = assign_cell(CellQuery(x, 1e-3, 2), Thresholds.constant(0.0, 4))
    assert D.is_leaf(node, 2)
    assert D.decided_sets(node, 2).a_set == {1, 2}


distinct_points = st.integers(2, 6).flatmap(
    lambda K: st.lists(st.floats(0.0, 1.0), min_size=K, max_size=K, unique=True)
)


@given(distinct_points, st.randoms(), st.floats(1e-3, 1e-1), st.data())
@settings(max_examples=300, deadline=None)
def test_permutation_equivariance(x, rnd, eps, data):
    K = len(x)
    assume(len(set(x)) == K)
    m = data.draw(st.integers(1, K))
    c = Thresholds(tuple(data.draw(st.floats(0.0, 1.0 / K)) for _ in range(K)))
    image = list(range(1, K + 1))
    rnd.shuffle(image)
    sigma = dict(zip(range(1, K + 1), image))
    y = [0.0] * K
    for a in range(1, K + 1):
        y[sigma[a] - 1] = x[a - 1]
    base = assign_cell(CellQuery(tuple(x), eps, m), c)
    moved = assign_cell(CellQuery(tuple(y), eps, m), c)
    assert moved == D.relabel(base, sigma)


@given(st.lists(st.floats(0.0, 1.0), min_size=3, max_size=5), st.floats(1e-3, 1e-1), st.data())
@settings(max_examples=300, deadline=None)
def test_close_inputs_land_on_adjacent_nodes(x, eps, data):
    K = len(x)
    m = data.draw(st.integers(1, min(3, K)))
    c = Thresholds(tuple(data.draw(st.floats(0.0, 1.0 / K)) for _ in range(K)))
    y = tuple(
        min(1.0, max(0.0, v + data.draw(st.floats(-eps, eps)))) for v in x
    )
    px = assign_cell(CellQuery(tuple(x), eps, m), c)
    py = assign_cell(CellQuery(y, eps, m), c)
    assert D.is_adjacent(px, py, m)


# --- slices --------------------------------------------------------------------


def test_slice_triangle_stays_in_cube_and_on_plane():
    for level in (0.3, 1.0, 1.5, 2.4):
        for corner in slice_triangle(level):
            assert sum(corner) == pytest.approx(level)
            assert all(0.0 <= v <= 1.0 for v in corner)


def test_slice_grid_sizes():
    assert len(slice_weights(2)) == 4
    assert len(slice_weights(200)) == 40_000
    with pytest.raises(InvalidParameter):
        slice_weights(1)
    with pytest.raises(InvalidParameter):
        sample_slice(2, Thresholds.constant(0.1, 3), 0.01, 1.5, 1)


def test_slice_center_is_root():
    pts = sample_slice(2, Thresholds.constant(0.2, 3), 0.01, 1.5, 7)
    centre = [pt for pt in pts if len(set(pt.weights)) == 1]
    assert len(centre) == 1
    assert centre[0].x == pytest.approx((0.5, 0.5, 0.5))
    assert centre[0].label == D.make_root(3)


def test_slice_neighbours_are_adjacent_on_full_grid():
    rng = np.random.default_rng(11)
    c = Thresholds(tuple(rng.random(3) / 3))
    eps = 0.01
    pts = sample_slice(2, c, eps, 1.5, 200)
    by_w = {pt.weights: pt for pt in pts}
    pairs = 0
    for pt in pts:
        for w in slice_neighbours(pt.weights):
            other = by_w[w]
            assert max(abs(a - b) for a, b in zip(pt.x, other.x)) <= eps
            assert D.is_adjacent(pt.label, other.label, 2), (pt, other)
            pairs += 1
    assert pairs > 100_000
    # the slice is not trivially all root
    assert len({pt.label for pt in pts}) > 5


def test_slice_csv_round_trips_labels():
    pts = sample_slice(2, Thresholds.constant(0.2, 3), 0.01, 1.5, 4)
    rows = list(csv.reader(io.StringIO(slice_csv(pts))))
    assert rows[0] == ["x1", "x2", "x3", "label"]
    assert len(rows) == len(pts) + 1
    for row, pt in zip(rows[1:], pts):
        assert D.parse_dop(row[3], 3) == pt.label
        assert all(len(v.split(".")[1]) == 6 for v in row[:3])
