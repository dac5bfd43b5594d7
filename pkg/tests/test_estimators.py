import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from subhyp.errors import BadParams
from subhyp.estimators import ChainBuilder, ExtensionClassifier, SubhyperbolicMetric
from subhyp.generators import U_CORRIDOR, square
from subhyp.metrics import d_alpha
from subhyp.narrow_path import NarrowChain
from subhyp.validation import check_domain, check_points
from subhyp.wide_path import WideChain

from conftest import U_FROM, U_TO

U_PAIR = [[*U_FROM, *U_TO]]


class TestSubhyperbolicMetric:
    def test_params_round_trip(self):
        est = SubhyperbolicMetric(alpha=0.25, h=0.1)
        assert est.get_params() == {"alpha": 0.25, "h": 0.1, "max_cells": None}
        assert clone(est).get_params() == est.get_params()

    def test_transform_matches_function(self, u_domain, u_grid):
        est = SubhyperbolicMetric(alpha=0.5, h=0.02).fit(U_CORRIDOR)
        out = est.transform(U_PAIR + [[*U_TO, *U_FROM]])
        assert out.shape == (2, 1)
        expected = d_alpha(u_domain, u_grid, U_FROM, U_TO, 0.5).value
        assert out[0, 0] == pytest.approx(expected)
        assert out[1, 0] == pytest.approx(expected)

    def test_pairwise_is_symmetric_with_zero_diagonal(self):
        est = SubhyperbolicMetric(h=0.05).fit(square(1.0))
        mat = est.pairwise([(0.2, 0.2), (0.5, 0.7), (0.8, 0.3)])
        assert mat.shape == (3, 3)
        assert np.array_equal(mat, mat.T)
        assert np.all(np.diag(mat) == 0)

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            SubhyperbolicMetric().transform(U_PAIR)

    @pytest.mark.parametrize("alpha", [-0.1, 1.5])
    def test_bad_alpha(self, alpha):
        with pytest.raises(BadParams):
            SubhyperbolicMetric(alpha=alpha).fit(square(1.0))

    def test_bad_shape(self):
        est = SubhyperbolicMetric(h=0.1).fit(square(1.0))
        with pytest.raises(ValueError):
            est.transform([[0.5, 0.5, 0.5]])


class TestExtensionClassifier:
    def test_square(self):
        clf = ExtensionClassifier(p=4, budget=60, h=0.02).fit()
        assert clf.alpha_ == 2 / 3
        assert clf.predict([square(1.0)]).tolist() == ["extension_likely"]
        assert clf.verdicts_[0].s_alpha_estimate.value <= 3 / clf.alpha_

    def test_bad_p(self):
        with pytest.raises(BadParams):
            ExtensionClassifier(p=2).fit()


class TestChainBuilder:
    @pytest.mark.parametrize("kind, cls", [("wide", WideChain), ("narrow", NarrowChain)])
    def test_kinds(self, kind, cls):
        chains = ChainBuilder(kind=kind, h=0.02).fit(U_CORRIDOR).transform(U_PAIR)
        assert isinstance(chains[0], cls) and chains[0].k == 12

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            ChainBuilder(kind="medium").fit(square(1.0))


class TestValidation:
    def test_domain_inputs(self, tmp_path, u_domain):
        path = tmp_path / "u.json"
        path.write_text('{"vertices": [[0, 0], [5, 0], [5, 5], [4, 5], [4, 1], [1, 1], [1, 5], [0, 5]]}')
        for src in (u_domain, U_CORRIDOR, {"vertices": U_CORRIDOR}, path, str(path)):
            assert np.array_equal(check_domain(src).vertices, u_domain.vertices)

    def test_points(self):
        assert check_points([0.1, 0.2], 2).shape == (1, 2)
        with pytest.raises(ValueError):
            check_points([[0.1, np.nan]], 2)
