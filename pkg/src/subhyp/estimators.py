"""Estimator-style wrappers so the constructions compose with scikit-learn tooling.

``fit`` binds a domain (and rasterises it); ``transform`` / ``predict``
answer queries against it.  Nothing is learned from data: the wrappers exist
for ``get_params`` / ``set_params``, cloning and pipeline use.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .metrics import EXTENSION_LIKELY, INCONCLUSIVE, NON_EXTENSION_SUSPECTED, classify_extension, d_alpha_many
from .narrow_path import build_narrow_chain
from .validation import DomainLike, check_alpha, check_domain, check_domains, check_exponent, check_points, check_positive
from .wide_path import build_wide_chain


def _bind(est: BaseEstimator, domain: DomainLike) -> None:
    d = check_domain(domain)
    if est.max_cells is not None:
        d.max_cells = int(est.max_cells)
    est.domain_ = d
    est.h_ = d.default_h() if est.h is None else check_positive(est.h, "h")
    est.grid_ = d.grid(est.h_)


class SubhyperbolicMetric(BaseEstimator):
    """Grid geodesic distance ``d_alpha`` on a fitted domain.

    ``transform`` takes rows ``(x1, y1, x2, y2)`` and returns one distance per
    row as an ``(n, 1)`` array; :meth:`pairwise` returns the full matrix for a
    point set.
    """

    def __init__(self, alpha: float = 0.5, h: Optional[float] = None, max_cells: Optional[int] = None):
        self.alpha = alpha
        self.h = h
        self.max_cells = max_cells

    def fit(self, X: DomainLike, y=None) -> "SubhyperbolicMetric":
        check_alpha(self.alpha)
        _bind(self, X)
        return self

    def _distances(self, sources: np.ndarray, targets: np.ndarray) -> np.ndarray:
        return d_alpha_many(self.domain_, self.grid_, sources, targets, self.alpha)

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "grid_")
        pairs = check_points(X, 4)
        out = np.empty(len(pairs))
        # One Dijkstra per distinct source point.
        sources, inverse = np.unique(pairs[:, :2], axis=0, return_inverse=True)
        inverse = np.ravel(inverse)
        for k, src in enumerate(sources):
            rows = np.flatnonzero(inverse == k)
            out[rows] = self._distances(src, pairs[rows, 2:])
        return out.reshape(-1, 1)

    def pairwise(self, X) -> np.ndarray:
        check_is_fitted(self, "grid_")
        pts = check_points(X, 2)
        mat = np.vstack([self._distances(p, pts) for p in pts])
        return 0.5 * (mat + mat.T)


class ExtensionClassifier(ClassifierMixin, BaseEstimator):
    """Extension-domain verdict per domain from the growth of sampled ``s_alpha`` estimates.

    ``predict`` returns one of ``extension_likely``, ``non_extension_suspected``
    or ``inconclusive`` for each input domain; the full verdicts of the last
    call are kept in ``verdicts_``.
    """

    def __init__(self, p: float = 4.0, m: int = 2, budget: int = 240, h: Optional[float] = None,
                 seed: int = 0, max_cells: Optional[int] = None):
        self.p = p
        self.m = m
        self.budget = budget
        self.h = h
        self.seed = seed
        self.max_cells = max_cells

    def fit(self, X=None, y=None) -> "ExtensionClassifier":
        self.alpha_ = check_exponent(self.p)
        check_positive(self.budget, "budget")
        self.classes_ = np.array([EXTENSION_LIKELY, INCONCLUSIVE, NON_EXTENSION_SUSPECTED])
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "classes_")
        self.verdicts_ = []
        for d in check_domains(X):
            if self.max_cells is not None:
                d.max_cells = int(self.max_cells)
            h = d.default_h() if self.h is None else check_positive(self.h, "h")
            self.verdicts_.append(classify_extension(d, d.grid(h), self.p, self.m, int(self.budget), self.seed))
        return np.array([v.decision for v in self.verdicts_], dtype=object)


class ChainBuilder(BaseEstimator):
    """Wide or narrow square chains between point pairs of a fitted domain.

    ``transform`` takes rows ``(x1, y1, x2, y2)`` and returns an object array
    of chains.
    """

    def __init__(self, kind: str = "narrow", h: Optional[float] = None, max_k: int = 10_000,
                 max_cells: Optional[int] = None):
        self.kind = kind
        self.h = h
        self.max_k = max_k
        self.max_cells = max_cells

    def fit(self, X: DomainLike, y=None) -> "ChainBuilder":
        if self.kind not in ("wide", "narrow"):
            raise ValueError(f"kind must be 'wide' or 'narrow', got {self.kind!r}")
        _bind(self, X)
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "grid_")
        pairs = check_points(X, 4)
        out = np.empty(len(pairs), dtype=object)
        for i, row in enumerate(pairs):
            chain = build_wide_chain(self.domain_, self.grid_, row[:2], row[2:], max_k=self.max_k)
            out[i] = build_narrow_chain(chain, self.domain_) if self.kind == "narrow" else chain
        return out
