import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import ndimage
from shapely.geometry import Polygon

from subhyp.errors import BadParams
from subhyp.generators import DomainSpec, comb, generate, ngon, random_rectilinear, spiral, square, staircase


def simply_connected(d, h):
    g = d.grid(h)
    _, parts = ndimage.label(g.inside)
    _, outside = ndimage.label(np.pad(~g.inside, 1, constant_values=True))
    return parts == 1 and outside == 1


class TestShapes:
    def test_square(self):
        assert square(2.0).area == pytest.approx(4.0)

    def test_ngon_area_tends_to_disk(self):
        assert ngon(64).area == pytest.approx(np.pi, rel=2e-3)

    def test_staircase(self):
        d = staircase(6, 0.05)
        assert d.area == pytest.approx(6 + 5 * 0.05 ** 2 * (1 - 0.5))
        assert d.contains((0.5, 0.5)) and d.contains((5.5, 5.5))
        assert d.contains((1.0, 1.0))

    def test_comb_teeth_positions(self):
        d = comb(3, depth=0.9, ratio=0.5)
        # Tooth i covers x in (0.5**i, 1.5 * 0.5**i) from y = 0.1 up.
        for i in (1, 2, 3):
            left = 0.5 ** i
            assert not d.contains((1.25 * left, 0.5))
            assert d.contains((1.75 * left, 0.5))
        assert d.contains((0.05, 0.05))

    def test_spiral(self):
        d = spiral(2)
        assert len(d.vertices) == 4 * 2 * 2 + 2
        assert simply_connected(d, 0.1)

    @pytest.mark.parametrize("fn, kwargs", [
        (square, {"side": 0}), (ngon, {"n": 2}), (staircase, {"omega": 1.5}), (comb, {"depth": 1.0}),
        (spiral, {"turns": 0}), (random_rectilinear, {"cells": 0}),
    ])
    def test_bad_params(self, fn, kwargs):
        with pytest.raises(BadParams):
            fn(**kwargs)


class TestRandomRectilinear:
    def test_deterministic(self):
        assert np.array_equal(random_rectilinear(20, 3).vertices, random_rectilinear(20, 3).vertices)

    def test_seed_changes_shape(self):
        assert not np.array_equal(random_rectilinear(20, 3).vertices, random_rectilinear(20, 4).vertices)

    @given(st.integers(1, 40), st.integers(0, 10_000))
    def test_polyomino_is_simple_and_simply_connected(self, cells, seed):
        d = random_rectilinear(cells, seed)
        assert d.area == pytest.approx(cells)
        poly = Polygon(d.vertices)
        assert poly.is_valid and len(poly.interiors) == 0
        assert simply_connected(d, 0.25)


class TestGenerate:
    def test_by_name(self):
        d = generate(DomainSpec("comb", {"n": 4}))
        assert np.array_equal(d.vertices, comb(4).vertices)

    def test_seed_feeds_random_rectilinear(self):
        d = generate(DomainSpec("random_rectilinear", {"cells": 12}, seed=9))
        assert np.array_equal(d.vertices, random_rectilinear(12, 9).vertices)

    @pytest.mark.parametrize("spec", [DomainSpec("blob", {}), DomainSpec("square", {"colour": 1})])
    def test_rejects(self, spec):
        with pytest.raises(BadParams):
            generate(spec)
