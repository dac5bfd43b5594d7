import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from subhyp.geom import (
    Point, Segment, Square, box_union_topology, classify_squares, dist_point_segment_inf,
    dist_squares, uniform_dist,
)

coord = st.floats(-10, 10, allow_nan=False)
radius = st.floats(0.01, 5, allow_nan=False)
squares = st.builds(lambda x, y, r: Square(Point(x, y), r), coord, coord, radius)
# Dyadic squares: exact in binary floating point, so contact cases are common.
dyadic = st.builds(lambda x, y, r: Square(Point(x / 8, y / 8), r / 8),
                   st.integers(-24, 24), st.integers(-24, 24), st.integers(1, 16))


class TestUniformDist:
    @pytest.mark.parametrize("a, b, expected", [((0, 0), (0, 0), 0), ((0, 0), (3, 4), 4), ((1, 2), (-2, 3), 3)])
    def test_examples(self, a, b, expected):
        assert uniform_dist(a, b) == expected

    @given(coord, coord, coord, coord, coord, coord)
    def test_triangle_inequality(self, ax, ay, bx, by, cx, cy):
        a, b, c = (ax, ay), (bx, by), (cx, cy)
        assert uniform_dist(a, c) <= uniform_dist(a, b) + uniform_dist(b, c) + 1e-12
        assert uniform_dist(a, b) == uniform_dist(b, a)


class TestClassifySquares:
    def test_side_contact(self):
        rel = classify_squares(Square((0, 0), 1), Square((2, 0), 1))
        assert rel.tag == "touching"
        assert rel.interface == Segment(Point(1, -1), Point(1, 1))
        assert rel.contact == Point(1, 0)

    def test_nested(self):
        assert classify_squares(Square((0, 0), 2), Square((0.5, 0), 1)).tag == "nested"

    def test_corner_contact(self):
        rel = classify_squares(Square((0, 0), 1), Square((2, 2), 1))
        assert rel.tag == "touching"
        assert rel.is_point_contact
        assert rel.interface.a == Point(1, 1)

    def test_overlap_and_separation(self):
        assert classify_squares(Square((0, 0), 1), Square((1.5, 0.5), 1)).tag == "overlapping"
        assert classify_squares(Square((0, 0), 1), Square((3, 0), 0.5)).tag == "separated"

    def test_touching_tolerance_is_relative(self):
        a = Square((0.1, 0.2), 0.3)
        for gap, tag in ((1e-11, "touching"), (-1e-11, "touching"), (1e-6, "separated"), (-1e-6, "overlapping")):
            b = Square((0.1 + 0.3 + 0.7 + gap, 0.25), 0.7)
            assert classify_squares(a, b).tag == tag

    @given(squares, squares)
    def test_symmetric(self, s1, s2):
        r12, r21 = classify_squares(s1, s2), classify_squares(s2, s1)
        assert r12.tag == r21.tag
        assert r12.interface == r21.interface

    @given(dyadic, dyadic)
    def test_distance_zero_iff_not_separated(self, s1, s2):
        tag = classify_squares(s1, s2).tag
        assert (dist_squares(s1, s2) == 0) == (tag != "separated")

    @given(dyadic, dyadic)
    def test_contact_point_on_centre_segment_and_both_closures(self, s1, s2):
        rel = classify_squares(s1, s2)
        if rel.tag != "touching":
            return
        a = np.array(rel.contact)
        c1, c2 = np.array(s1.center), np.array(s2.center)
        # collinear with and between the centres
        cross = (c2 - c1)[0] * (a - c1)[1] - (c2 - c1)[1] * (a - c1)[0]
        assert abs(cross) < 1e-9
        assert np.dot(a - c1, a - c2) <= 1e-12
        assert s1.contains(a, closed=True, tol=1e-12) and s2.contains(a, closed=True, tol=1e-12)


class TestDistances:
    @pytest.mark.parametrize("p, seg, expected", [
        ((0, 0), ((1, -1), (1, 1)), 1.0),
        ((0, 0), ((2, 2), (2, 2)), 2.0),
        ((0, 0), ((1, 3), (3, 1)), 2.0),
    ])
    def test_point_segment(self, p, seg, expected):
        assert dist_point_segment_inf(p, Segment(Point(*seg[0]), Point(*seg[1]))) == pytest.approx(expected, abs=1e-12)

    @given(coord, coord, coord, coord, coord, coord)
    def test_point_segment_matches_dense_sampling(self, px, py, ax, ay, bx, by):
        t = np.linspace(0, 1, 20001)
        pts = np.column_stack([ax + t * (bx - ax), ay + t * (by - ay)])
        dense = np.max(np.abs(pts - [px, py]), axis=1).min()
        exact = dist_point_segment_inf((px, py), Segment(Point(ax, ay), Point(bx, by)))
        step = uniform_dist((ax, ay), (bx, by)) / 20000
        assert exact <= dense + 1e-9
        assert dense - exact <= step + 1e-9

    @pytest.mark.parametrize("c2, expected", [((5, 0), 3.0), ((2, 0), 0.0), ((4, 5), 3.0)])
    def test_squares(self, c2, expected):
        assert dist_squares(Square((0, 0), 1), Square(c2, 1)) == expected

    def test_squares_against_boundary_samples(self):
        s1, s2 = Square((0, 0), 1), Square((4, 5), 1)
        t = np.linspace(-1, 1, 401)
        ring = np.concatenate([np.column_stack([t, np.full_like(t, s)]) for s in (-1, 1)]
                              + [np.column_stack([np.full_like(t, s), t]) for s in (-1, 1)])
        a, b = ring + s1.center, ring + s2.center
        brute = np.max(np.abs(a[:, None, :] - b[None, :, :]), axis=2).min()
        assert dist_squares(s1, s2) == pytest.approx(brute, abs=1e-12)


class TestBoxUnionTopology:
    def test_single_box_is_a_disk(self):
        assert box_union_topology([(0, 1, 0, 1)]) == (1, 1)

    def test_disjoint_boxes(self):
        assert box_union_topology([(0, 1, 0, 1), (2, 3, 0, 1)]) == (2, 2)

    def test_corner_contact_does_not_connect_open_boxes(self):
        assert box_union_topology([(0, 1, 0, 1), (1, 2, 1, 2)]) == (2, 2)

    def test_ring_has_a_hole(self):
        ring = [(0, 3, 0, 1), (0, 3, 2, 3), (0, 1, 0, 3), (2, 3, 0, 3)]
        assert box_union_topology(ring) == (1, 0)

    def test_open_segment_ending_on_a_side_stays_apart(self):
        seg = Segment(Point(1, 0.5), Point(2, 0.5))
        assert box_union_topology([(0, 1, 0, 1), (2, 3, 0, 1)], [seg])[0] == 3

    def test_side_segments_can_close_a_loop(self):
        # Four unit boxes around a centre point, glued along three of their four shared sides.
        boxes = [(0, 1, 0, 1), (1, 2, 0, 1), (1, 2, 1, 2), (0, 1, 1, 2)]
        sides = [Segment(Point(1, 0), Point(1, 1)), Segment(Point(1, 1), Point(2, 1)),
                 Segment(Point(1, 1), Point(1, 2))]
        assert box_union_topology(boxes, sides) == (1, 1)
        # The fourth side alone would leave the centre vertex out: a punctured square.
        sides.append(Segment(Point(0, 1), Point(1, 1)))
        assert box_union_topology(boxes, sides) == (1, 0)

    def test_shared_side_is_not_in_the_union(self):
        # Two open boxes sharing a side are disjoint unless the side is added.
        boxes = [(0, 1, 0, 1), (1, 2, 0, 1)]
        assert box_union_topology(boxes)[0] == 2
        assert box_union_topology(boxes, [Segment(Point(1, 0), Point(1, 1))]) == (1, 1)


def test_square_rejects_bad_radius():
    with pytest.raises(ValueError):
        Square((0, 0), 0)
    with pytest.raises(ValueError):
        Square((0, 0), math.inf)
