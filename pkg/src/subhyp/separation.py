"""Maximal touching squares and the search for a separating square.

Given a square ``sbar`` inside the domain whose boundary meets the domain
boundary, and a point ``B`` outside ``sbar^cl``, we look for a square ``K``
touching ``sbar`` such that either ``B ∈ K^cl`` or removing ``K^cl`` cuts
``sbar`` off from ``B``.  Candidates are the maximal squares ``K(z)`` grown
outward from anchors ``z`` on the boundary arc facing ``B``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

from .domain import (FOUR, BoundaryArc, GridField, Perimeter, PolygonDomain, boundary_arcs,
                     components_minus_square, label_region)
from .errors import (AnchorNotInOmega, AnchorNotOnBoundaryOfS, GeometryError, NoBoundaryContact, NotSeparable,
                     PointOutside, PreconditionViolated, ResolutionInsufficient)
from .geom import Point, Square, as_point, classify_squares, uniform_dist

SCAN_ANCHORS = 64
BISECTION_STEPS = 64

CONTAINS_B = "contains_B"
PLUS = "plus"
MINUS = "minus"
BOTH_BLOCKED = "both_blocked"
BOTH_OPEN = "both_open"  # grid artefact: never reported by the public classifier


@dataclass(frozen=True)
class TouchingSquare:
    anchor: Point
    square: Square
    host: Square


@dataclass
class Accessibility:
    verdict: str
    witness: Optional[tuple[int, int]] = None
    h: float = 0.0


@dataclass
class Separation:
    square: Square
    anchor: Point
    verdict: str
    param: float
    h: float
    evaluations: int = 0
    verified: tuple[bool, ...] = field(default_factory=tuple)


def _growth_directions(sbar: Square, anchors: np.ndarray) -> np.ndarray:
    return (anchors - np.asarray(sbar.center)) / sbar.radius


def touching_radii(d: PolygonDomain, sbar: Square, anchors: np.ndarray) -> np.ndarray:
    """Largest r with ``S(z + r u, r) ⊂ Ω`` for each anchor ``z``, ``u = (z - c)/R``.

    ``bd(z + r u) - r`` is non-increasing in r (bd is 1-Lipschitz and |u| = 1),
    so plain bisection on its sign is exact up to float resolution.
    """
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    u = _growth_directions(sbar, anchors)
    x0, x1, y0, y1 = d.bbox
    lo = np.zeros(len(anchors))
    hi = np.full(len(anchors), max(x1 - x0, y1 - y0))
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        ok = d.boundary_distances(anchors + mid[:, None] * u) >= mid
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return lo


def _check_anchor(d: PolygonDomain, sbar: Square, z: Point) -> None:
    if abs(uniform_dist(z, sbar.center) - sbar.radius) > d.tol:
        raise AnchorNotOnBoundaryOfS("anchor is not on the host boundary", anchor=list(z))
    if not d.contains(z):
        raise AnchorNotInOmega("anchor is not in the domain", anchor=list(z))


def _make_k(sbar: Square, z: Point, r: float) -> TouchingSquare:
    f = r / sbar.radius
    c = Point(z.x + f * (z.x - sbar.center.x), z.y + f * (z.y - sbar.center.y))
    return TouchingSquare(z, Square(c, r), sbar)


def maximal_touching_square(d: PolygonDomain, sbar: Square, z) -> TouchingSquare:
    z = as_point(z)
    _check_anchor(d, sbar, z)
    r = float(touching_radii(d, sbar, np.array([z]))[0])
    return _make_k(sbar, z, r)


def separates(g: GridField, q: Square, sbar: Square, b) -> bool:
    """Grid check that ``sbar`` and ``b`` lie in different components of ``Ω ∖ q^cl``."""
    lab = components_minus_square(g, q)
    lb = lab.label_at(b)
    if lb == 0:
        raise ResolutionInsufficient("query point has no grid cell outside the square", h=g.h)
    cells = g.square_mask(sbar, closed=False) & (lab.labels > 0)
    if cells.any():
        return lb not in set(np.unique(lab.labels[cells]).tolist())
    ls = lab.label_at(sbar.center)
    return ls != lb


class _ArcContext:
    """Grid data shared by every candidate square for one (sbar, B) query."""

    def __init__(self, d: PolygonDomain, g: GridField, sbar: Square, b: Point, arcs: BoundaryArc):
        self.d, self.g, self.sbar, self.b = d, g, sbar, b
        self.per = arcs.perimeter
        sbar_mask = g.square_mask(sbar, closed=True)
        labels, _ = label_region(g.inside & ~sbar_mask)
        cell = g.nearest_inside_cell(b, labels > 0)
        if cell is None:
            raise ResolutionInsufficient("B has no grid cell", h=g.h)
        self.region = labels == labels[cell]
        band = ndimage.binary_dilation(sbar_mask, FOUR) & self.region
        cells = np.argwhere(band)
        pts = g.centers(cells)
        params = np.array([self.per.relative(p) for p in pts])
        # The arc facing B is the one most band cells of B's component project onto.
        votes = np.zeros(len(arcs.intervals), dtype=int)
        owner = np.full(len(params), -1)
        for k, (lo, hi) in enumerate(arcs.intervals):
            # Cells past a corner at the arc's end may wrap to the other end of the perimeter.
            for shift in (0.0, self.per.length, -self.per.length):
                moved = params + shift
                hit = (moved > lo - g.h) & (moved < hi + g.h) & (owner < 0)
                params[hit] = moved[hit]
                owner[hit] = k
            votes[k] = int((owner == k).sum())
        if not len(votes) or votes.max() == 0:
            raise ResolutionInsufficient("no boundary arc of the square reaches B", h=g.h)
        self.arc_index = int(np.argmax(votes))
        self.arc = arcs.intervals[self.arc_index]
        keep = owner == self.arc_index
        self.band_cells = cells[keep]
        self.band_params = params[keep]

    def interface_params(self, k: Square) -> tuple[float, float]:
        rel = classify_squares(self.sbar, k, tol=self.d.tol)
        if rel.tag != "touching":
            raise PreconditionViolated("candidate square does not touch the host", tag=rel.tag)
        seg = rel.interface
        m = self.per.relative(seg.midpoint)
        half = 0.5 * seg.length
        return m - half, m + half

    def verdict(self, k: Square) -> Accessibility:
        g = self.g
        mask = self.region & ~g.square_mask(k, closed=True)
        labels, _ = label_region(mask)
        cell = g.nearest_inside_cell(self.b, mask)
        if cell is None:
            raise ResolutionInsufficient("B's cell is covered by the candidate square", h=g.h)
        reach = labels[self.band_cells[:, 0], self.band_cells[:, 1]] == labels[cell]
        i0, i1 = self.interface_params(k)
        sp = self.band_params[reach]
        # A reachable cell beside the interface got past one of its ends; credit the nearer end.
        early = (sp < i0) | ((sp <= i1) & (sp - i0 < i1 - sp))
        before = np.nonzero(early)[0]
        after = np.nonzero(~early)[0]
        if len(before) and len(after):
            return Accessibility(BOTH_OPEN, None, g.h)
        if len(after):
            return Accessibility(PLUS, tuple(self.band_cells[reach][after[0]]), g.h)
        if len(before):
            return Accessibility(MINUS, tuple(self.band_cells[reach][before[0]]), g.h)
        return Accessibility(BOTH_BLOCKED, None, g.h)


def facing_arcs(d: PolygonDomain, sbar: Square, base=None) -> BoundaryArc:
    """Boundary arcs of ``sbar``; a square clear of ``∂Ω`` yields one closed loop."""
    try:
        return boundary_arcs(d, sbar, base)
    except NoBoundaryContact:
        if d.boundary_distance(sbar.center) < sbar.radius:
            raise
        return BoundaryArc(sbar, sbar.corners()[0], [(0.0, 8.0 * sbar.radius)])


def _precheck(d: PolygonDomain, sbar: Square, b: Point) -> None:
    if not d.contains(b):
        raise PointOutside("B is not in the domain", point=list(b))
    if sbar.contains(b, closed=True):
        raise PreconditionViolated("B lies in the closed host square")


def classify_accessibility(d: PolygonDomain, g: GridField, sbar: Square, k: TouchingSquare, b,
                           base=None) -> Accessibility:
    b = as_point(b)
    _precheck(d, sbar, b)
    if k.square.contains(b, closed=True):
        return Accessibility(CONTAINS_B, None, g.h)
    ctx = _ArcContext(d, g, sbar, b, facing_arcs(d, sbar, base))
    acc = ctx.verdict(k.square)
    if acc.verdict == BOTH_OPEN:
        raise ResolutionInsufficient("both sides of the arc reach B", h=g.h)
    return acc


class _Search:
    def __init__(self, d: PolygonDomain, g: GridField, sbar: Square, b: Point, arcs: BoundaryArc):
        self.d, self.g, self.sbar, self.b, self.arcs = d, g, sbar, b, arcs
        self.coarse = _ArcContext(d, g, sbar, b, arcs)
        self._fine: Optional[_ArcContext] = None
        self.evaluations = 0

    @property
    def fine(self) -> _ArcContext:
        if self._fine is None:
            gf = self.d.grid(self.g.h / 2)
            self._fine = _ArcContext(self.d, gf, self.sbar, self.b, self.arcs)
        return self._fine

    def square_at(self, params: np.ndarray) -> list[TouchingSquare]:
        per = self.coarse.per
        zs = np.array([per.point(s) for s in params])
        rs = touching_radii(self.d, self.sbar, zs)
        return [_make_k(self.sbar, Point(*z), float(r)) for z, r in zip(zs.tolist(), rs)]

    def judge(self, k: Square) -> str:
        """Verdict at h; blocked or ambiguous outcomes are re-checked at h/2."""
        self.evaluations += 1
        if k.contains(self.b, closed=True):
            return CONTAINS_B
        v = self.coarse.verdict(k).verdict
        if v in (BOTH_BLOCKED, BOTH_OPEN):
            v = self.fine.verdict(k).verdict
        return v


def _scan_params(arc: tuple[float, float], per: Perimeter) -> np.ndarray:
    b, e = arc
    params = list(b + (np.arange(SCAN_ANCHORS) + 0.5) * (e - b) / SCAN_ANCHORS)
    # Corners are where K(z) may jump, so they are always probed exactly.
    params += [c for c in per.corner_params() if b < c < e]
    return np.array(sorted(params))


def separating_square(d: PolygonDomain, g: GridField, sbar: Square, b, base=None) -> Separation:
    """Find ``Q = K(z*)`` with ``B ∈ Q^cl`` or ``sbar`` and ``B`` separated by ``Q^cl``.

    Anchors are scanned along the arc facing ``B``; the first blocking verdict
    wins.  Otherwise the arc parameter is bisected between a ``plus`` and a
    ``minus`` anchor.  Every accepted square is verified at ``h`` and ``h/2``.
    """
    b = as_point(b)
    _precheck(d, sbar, b)
    arcs = facing_arcs(d, sbar, base)
    search = _Search(d, g, sbar, b, arcs)
    per = search.coarse.per
    lo_arc, hi_arc = search.coarse.arc
    params = _scan_params(search.coarse.arc, per)
    cands = search.square_at(params)

    # Candidates whose check flips between h and h/2 are rejected, but remembered for the error.
    mixed: list[list[float]] = []

    def accept(k: TouchingSquare, verdict: str, s: float) -> Separation:
        if verdict == CONTAINS_B:
            return Separation(k.square, k.anchor, verdict, s, g.h, search.evaluations, ())
        ok = (separates(g, k.square, sbar, b), separates(search.fine.g, k.square, sbar, b))
        if not all(ok):
            if any(ok):
                mixed.append(list(k.anchor))
            return None
        return Separation(k.square, k.anchor, verdict, s, g.h, search.evaluations, ok)

    def give_up(message: str, **details) -> GeometryError:
        if mixed:
            return ResolutionInsufficient("separation verdict differs between h and h/2", h=g.h, anchors=mixed)
        return NotSeparable(message, h=g.h, **details)

    verdicts = []
    bracket = None
    for s, k in zip(params, cands):
        v = search.judge(k.square)
        if v in (CONTAINS_B, BOTH_BLOCKED):
            res = accept(k, v, float(s))
            if res is not None:
                return res
            continue
        verdicts.append((float(s), v))
        if len(verdicts) >= 2:
            (s0, v0), (s1, v1) = verdicts[-2], verdicts[-1]
            if {v0, v1} == {PLUS, MINUS}:
                bracket = (s0, v0, s1)
                break
    if bracket is None:
        sides = [v for _, v in verdicts if v in (PLUS, MINUS)]
        if sides and sides[0] == MINUS:
            bracket = (lo_arc, PLUS, next(s for s, v in verdicts if v == MINUS))
        elif sides:
            bracket = (next(s for s, v in reversed(verdicts) if v == PLUS), PLUS, hi_arc)
        else:
            raise give_up("no plus/minus anchors on the arc facing B", arc=list(search.coarse.arc))
    lo, lo_side, hi = bracket
    tol = 4 * np.finfo(float).eps * max(1.0, per.length, abs(hi))
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        k = search.square_at(np.array([mid]))[0]
        v = search.judge(k.square)
        if v in (CONTAINS_B, BOTH_BLOCKED):
            res = accept(k, v, mid)
            if res is not None:
                return res
            v = BOTH_OPEN
        if v == lo_side or v == BOTH_OPEN:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    k = search.square_at(np.array([mid]))[0]
    res = accept(k, BOTH_BLOCKED, mid)
    if res is None:
        raise give_up("bisection interval collapsed without a separating square",
                      interval=[lo, hi], anchor=list(k.anchor))
    return res
