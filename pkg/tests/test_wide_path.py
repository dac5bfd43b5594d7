import dataclasses

import numpy as np
import pytest

from subhyp.domain import label_region
from subhyp.errors import ChainTooLong, PointOutside
from subhyp.geom import Point, Segment, Square, classify_squares
from subhyp.wide_path import build_wide_chain, complement_report, verify_wide_invariants, wide_set_masks

from conftest import U_FROM, U_TO


def inflated(chain, index, factor):
    squares = list(chain.squares)
    squares[index] = squares[index].scaled(factor)
    return dataclasses.replace(chain, squares=squares)


class TestUCorridor:
    def test_length(self, u_wide):
        assert u_wide.k == 12

    def test_runs_down_the_left_arm(self, u_wide):
        for i, cy in enumerate((4.5, 3.5, 2.5, 1.5)):
            assert u_wide.squares[i] == Square(Point(0.5, cy), 0.5)

    def test_ends_at_target(self, u_wide):
        assert u_wide.squares[-1].contains(U_TO, closed=True)
        assert u_wide.final_rule == "exact"

    def test_segment_interfaces_and_no_hats(self, u_wide):
        assert all(h is None for h in u_wide.hats)
        assert u_wide.hat_delta is None
        assert u_wide.connectors[0] == Segment(Point(0, 4), Point(1, 4))
        assert len(u_wide.connectors) == u_wide.k - 1

    def test_invariants(self, u_domain, u_grid, u_wide):
        rep = verify_wide_invariants(u_wide, u_domain, u_grid)
        assert rep.passed, rep.to_dict()["failures"]

    def test_inflated_square_breaks_disjointness(self, u_domain, u_grid, u_wide):
        rep = verify_wide_invariants(inflated(u_wide, 1, 1.1), u_domain, u_grid)
        assert not rep.passed
        assert rep.to_dict()["checks"]["pairwise_disjoint"] is False

    def test_removing_an_interface_disconnects_neighbours(self, u_grid, u_wide):
        # Every grid path through the chain from S_i to S_{i+1} passes within h of T_i.
        squares, _ = wide_set_masks(u_wide, u_grid)
        union = np.logical_or.reduce(squares)
        gx, gy = np.meshgrid(u_grid.xs, u_grid.ys)
        for i, seg in enumerate(u_wide.connectors):
            (x0, x1), (y0, y1) = sorted((seg.a.x, seg.b.x)), sorted((seg.a.y, seg.b.y))
            h = u_grid.h
            near = (gx >= x0 - h) & (gx <= x1 + h) & (gy >= y0 - h) & (gy <= y1 + h)
            lab, _ = label_region(union & ~near)
            a = lab[u_grid.cell_of(u_wide.squares[i].center)]
            b = lab[u_grid.cell_of(u_wide.squares[i + 1].center)]
            assert a and b and a != b, f"interface {i + 1} is not needed"

    def test_complement(self, u_domain, u_grid, u_wide):
        for g in (u_grid, u_domain.grid(u_grid.h / 2)):
            rep = complement_report(u_wide, u_domain, g)
            assert rep.passed, rep.to_dict()
            assert rep.multiplicity <= 3

    def test_too_long(self, u_domain, u_grid):
        with pytest.raises(ChainTooLong):
            build_wide_chain(u_domain, u_grid, U_FROM, U_TO, max_k=3)

    def test_endpoint_outside(self, u_domain, u_grid):
        with pytest.raises(PointOutside):
            build_wide_chain(u_domain, u_grid, U_FROM, (2.5, 3))


class TestUnitSquare:
    @pytest.mark.parametrize("y", [(0.9, 0.9), (0.5, 0.5), (0.1, 0.7)])
    def test_single_square(self, unit_square, y):
        chain = build_wide_chain(unit_square, unit_square.grid(0.02), (0.5, 0.5), y)
        assert chain.k == 1
        assert chain.connectors == []

    def test_complement_multiplicity_one(self, unit_square):
        g = unit_square.grid(0.02)
        chain = build_wide_chain(unit_square, g, (0.5, 0.5), (0.9, 0.9))
        rep = complement_report(chain, unit_square, g)
        assert rep.passed and rep.multiplicity == 1


class TestStaircase:
    def test_invariants(self, stair_domain, stair_grid, stair_wide):
        rep = verify_wide_invariants(stair_wide, stair_domain, stair_grid)
        assert rep.passed, rep.to_dict()["failures"]

    def test_point_contacts_get_equal_hats(self, stair_wide):
        hats = [(i, h) for i, h in enumerate(stair_wide.hats) if h is not None]
        assert hats
        for i, hat in hats:
            rel = classify_squares(stair_wide.squares[i], stair_wide.squares[i + 1])
            assert rel.is_point_contact
            assert hat.center == rel.interface.a
            assert hat.radius == stair_wide.hat_delta.delta
            assert hat.diam <= 0.25 * min(stair_wide.squares[i].diam, stair_wide.squares[i + 1].diam)

    def test_hat_radius_is_an_eighth_of_the_minimum(self, stair_wide):
        hd = stair_wide.hat_delta
        assert hd.delta == pytest.approx(min(hd.d1, hd.d2, hd.d3) / 8)

    def test_skip_one_closures_meet_in_at_most_a_point(self, stair_domain, stair_grid, stair_wide):
        rep = verify_wide_invariants(stair_wide, stair_domain, stair_grid)
        assert rep.to_dict()["checks"]["skip_one_meet_at_most_point"]

    def test_complement(self, stair_domain, stair_grid, stair_wide):
        rep = complement_report(stair_wide, stair_domain, stair_grid)
        assert rep.passed, rep.to_dict()
