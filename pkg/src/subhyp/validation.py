"""Input coercion shared by the estimator layer."""

from __future__ import annotations

import json
from os import PathLike
from pathlib import Path
from typing import Any, Union

import numpy as np
from sklearn.utils.validation import check_array

from .domain import PolygonDomain, load_domain
from .errors import BadParams
from .metrics import _check_alpha, alpha_from_p

DomainLike = Union[PolygonDomain, dict, str, PathLike, np.ndarray, list]


def check_domain(domain: DomainLike) -> PolygonDomain:
    """Accept a domain, a ``{"vertices": ...}`` mapping, a path to such a JSON file or a vertex array."""
    if isinstance(domain, PolygonDomain):
        return domain
    if isinstance(domain, (str, PathLike)):
        domain = json.loads(Path(domain).read_text())
    if isinstance(domain, dict):
        if "vertices" not in domain:
            raise BadParams("domain mapping has no 'vertices' entry")
        domain = domain["vertices"]
    return load_domain(domain)


def check_domains(domains: Any) -> list[PolygonDomain]:
    if isinstance(domains, (PolygonDomain, dict, str, PathLike)):
        return [check_domain(domains)]
    return [check_domain(d) for d in domains]


def check_points(X: Any, width: int = 2, name: str = "X") -> np.ndarray:
    """Finite float array of shape ``(n, width)``; a single row may be given flat."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    arr = check_array(arr, dtype=float, ensure_all_finite=True, input_name=name)
    if arr.shape[1] != width:
        raise BadParams(f"{name} must have {width} columns, got {arr.shape[1]}")
    return arr


def check_alpha(alpha: float, allow_zero: bool = True) -> float:
    return _check_alpha(alpha, allow_zero)


def check_exponent(p: float) -> float:
    """Sobolev exponent ``p > 2``; returns the matching ``alpha = (p - 2) / (p - 1)``."""
    return alpha_from_p(p)


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not value > 0 or not np.isfinite(value):
        raise BadParams(f"{name} must be positive and finite", **{name: value})
    return value
