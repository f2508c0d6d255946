from itertools import permutations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rlmtrack.assoc import (
    associate_two_stage,
    gated_iou_assignment,
    hungarian,
    iou,
    iou_matrix,
    pairwise_iou,
)
from rlmtrack.normbox import make_std_box


def brute_force_cost(cost):
    n, m = cost.shape
    if n <= m:
        return min(sum(cost[i, p[i]] for i in range(n)) for p in permutations(range(m), n))
    return min(sum(cost[p[j], j] for j in range(m)) for p in permutations(range(n), m))


def check_partition(a, n, m):
    rows = [r for r, _ in a.matches] + list(a.unmatched_tracks)
    cols = [c for _, c in a.matches] + list(a.unmatched_dets)
    assert sorted(rows) == list(range(n))
    assert sorted(cols) == list(range(m))


def test_iou_examples():
    assert iou((0, 0, 10, 10), (0, 0, 10, 10)) == 1.0
    assert iou((0, 0, 10, 10), (20, 0, 10, 10)) == 0.0
    assert iou((0, 0, 10, 10), (5, 0, 10, 10)) == pytest.approx(1 / 3)
    # Touching edges share no area.
    assert iou((0, 0, 10, 10), (10, 0, 10, 10)) == 0.0


def test_iou_on_mapped_boxes():
    a = make_std_box((0.0, 0.0), 10.0, 1.0, 0.9, 4)
    b = make_std_box((5.0, 0.0), 10.0, 1.0, 0.9, 4)
    assert iou(a, b) == pytest.approx(1 / 3)


def test_iou_matrix_shapes():
    assert iou_matrix(np.zeros((0, 4)), [(0, 0, 1, 1)]).shape == (0, 1)
    assert iou_matrix([(0, 0, 1, 1)], np.zeros((0, 4))).shape == (1, 0)


def test_pairwise_matches_matrix():
    rng = np.random.default_rng(0)
    a = np.column_stack([rng.uniform(0, 50, (6, 2)), rng.uniform(1, 30, (6, 2))])
    b = np.column_stack([rng.uniform(0, 50, (4, 2)), rng.uniform(1, 30, (4, 2))])
    np.testing.assert_array_equal(pairwise_iou(a[:, None], b[None]), iou_matrix(a, b))


def test_hungarian_examples():
    a = hungarian(np.array([[1.0, 2.0], [2.0, 4.0]]))
    assert sorted(a.matches) == [(0, 1), (1, 0)]
    assert a.total_cost == 4.0
    b = hungarian(np.array([[0.3]]))
    assert b.matches == [(0, 0)] and b.total_cost == pytest.approx(0.3)


def test_hungarian_empty():
    a = hungarian(np.zeros((0, 3)))
    assert a.matches == [] and a.unmatched_dets == [0, 1, 2]
    b = hungarian(np.zeros((2, 0)))
    assert b.unmatched_tracks == [0, 1]


def test_hungarian_rectangular_and_gated():
    cost = np.array([[0.1, 5.0, 0.4], [5.0, 5.0, 5.0]])
    a = hungarian(cost, gate=5.0)
    assert a.matches == [(0, 0)]
    assert a.unmatched_tracks == [1] and a.unmatched_dets == [1, 2]
    check_partition(a, 2, 3)


def test_hungarian_tie_break_is_deterministic():
    cost = np.zeros((3, 3))
    first = hungarian(cost).matches
    for _ in range(5):
        assert hungarian(cost).matches == first
    assert first == [(0, 0), (1, 1), (2, 2)]


def test_hungarian_brute_force_1000():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n, m = rng.integers(1, 8, size=2)
        cost = rng.uniform(0, 10, size=(n, m))
        a = hungarian(cost)
        assert len(a.matches) == min(n, m)
        assert a.total_cost == pytest.approx(brute_force_cost(cost), abs=1e-9)
        check_partition(a, n, m)


def test_gate_soundness():
    trk = [(0, 0, 10, 10), (100, 100, 10, 10)]
    det = [(1, 0, 10, 10), (108, 100, 10, 10)]
    a = gated_iou_assignment(trk, det, iou_min=0.5)
    assert a.matches == [(0, 0)]
    ious = iou_matrix(trk, det)
    assert all(ious[r, c] >= 0.5 for r, c in a.matches)


# -- two-stage cascade -------------------------------------------------------------


def test_cascade_no_dets():
    s1, s2 = associate_two_stage([(0, 0, 10, 10), (50, 0, 10, 10)], np.zeros((0, 4)), np.zeros((0, 4)))
    assert s1.unmatched_tracks == [0, 1]
    assert s2.matches == [] and s2.unmatched_tracks == [0, 1]


def test_cascade_stage_one_only():
    s1, s2 = associate_two_stage([(0, 0, 10, 10)], [(0, 0, 10, 10)], np.zeros((0, 4)))
    assert s1.matches == [(0, 0)]
    assert s2.matches == [] and s2.unmatched_tracks == []


def test_cascade_recovers_occluded_track():
    trk = [(0, 0, 10, 10), (100, 0, 10, 10)]
    high = [(0, 0, 10, 10)]
    # (100,0,10,10) vs (102.5,0,10,10): 75/125 = 0.6
    low = [(102.5, 0, 10, 10)]
    assert iou(trk[1], low[0]) == pytest.approx(0.6)
    s1, s2 = associate_two_stage(trk, high, low)
    assert s1.matches == [(0, 0)]
    assert s2.matches == [(1, 0)]
    assert s2.unmatched_dets == []


def test_low_dets_never_leftover_for_birth():
    # A low detection that matches nothing is only reported as unmatched in stage 2.
    s1, s2 = associate_two_stage(np.zeros((0, 4)), [(0, 0, 5, 5)], [(50, 50, 5, 5)])
    assert s1.unmatched_dets == [0]
    assert s2.unmatched_dets == [0]


boxes = st.lists(
    st.tuples(st.floats(0, 100), st.floats(0, 100), st.floats(1, 40), st.floats(1, 40)), min_size=0, max_size=7
)


@given(boxes, boxes, boxes)
def test_cascade_exclusivity(trk, high, low):
    trk = np.asarray(trk, dtype=float).reshape(-1, 4)
    high = np.asarray(high, dtype=float).reshape(-1, 4)
    low = np.asarray(low, dtype=float).reshape(-1, 4)
    s1, s2 = associate_two_stage(trk, high, low, iou_min=0.1)
    t1 = {r for r, _ in s1.matches}
    t2 = {r for r, _ in s2.matches}
    assert not t1 & t2
    assert t2 <= set(s1.unmatched_tracks)
    check_partition(s1, len(trk), len(high))
    for r, c in s1.matches:
        assert iou(trk[r], high[c]) >= 0.1
    for r, c in s2.matches:
        assert iou(trk[r], low[c]) >= 0.1


@given(boxes, boxes, st.randoms(use_true_random=False))
def test_permutation_invariance(trk, det, rnd):
    trk = np.asarray(trk, dtype=float).reshape(-1, 4)
    det = np.asarray(det, dtype=float).reshape(-1, 4)
    perm = list(range(len(det)))
    rnd.shuffle(perm)
    a = gated_iou_assignment(trk, det)
    b = gated_iou_assignment(trk, det[perm])
    assert len(a.matches) == len(b.matches)
    assert a.total_cost == pytest.approx(b.total_cost, abs=1e-9)


@given(boxes, boxes)
def test_iou_symmetric_and_bounded(a, b):
    m = iou_matrix(a, b)
    assert np.all((m >= 0) & (m <= 1 + 1e-12))
    np.testing.assert_allclose(m, iou_matrix(b, a).T)
