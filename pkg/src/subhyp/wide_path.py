"""The wide chain of pairwise disjoint squares joining two points.

``S_1`` is the maximal square centred at ``x``; each next square separates
its predecessor from ``y`` (or contains ``y`` in its closure).  Point-contact
interfaces get small "hat" squares so that the union of squares and
connectors is an open connected set ``W``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import ndimage

from .domain import FOUR, GridField, PolygonDomain, label_region, max_inscribed_square
from .errors import (ChainTooLong, ComponentTouchesTooMany, ConnectorNotInOmega, DegenerateDelta,
                     PointOutside, ResolutionInsufficient)
from .geom import (Point, Segment, Square, as_point, classify_squares, closure_intersection,
                   dist_point_square, dist_squares, uniform_dist)
from .separation import CONTAINS_B, Separation, separating_square

Connector = Union[Segment, Square]


@dataclass
class HatDelta:
    delta: float
    d1: float
    d2: float
    d3: float


@dataclass
class WideChain:
    squares: list[Square]
    x: Point
    y: Point
    h: float
    hats: list[Optional[Square]] = field(default_factory=list)
    connectors: list[Connector] = field(default_factory=list)
    hat_delta: Optional[HatDelta] = None
    rotations: list[int] = field(default_factory=list)
    steps: list[Separation] = field(default_factory=list)
    final_rule: str = "single"

    @property
    def k(self) -> int:
        return len(self.squares)

    def interface(self, i: int) -> Segment:
        """``S_i^cl ∩ S_{i+1}^cl`` (0-based index)."""
        return interface_of(self.squares[i], self.squares[i + 1])

    def to_dict(self) -> dict:
        items = []
        for i, s in enumerate(self.squares):
            item = {"index": i + 1, **s.to_dict()}
            if i < len(self.hats) and self.hats[i] is not None:
                item["hat"] = self.hats[i].to_dict()
            if i < len(self.connectors):
                item["connector"] = connector_dict(self.connectors[i])
            items.append(item)
        return {
            "k": self.k, "from": list(self.x), "to": list(self.y), "h": self.h,
            "squares": items,
            "hat_delta": None if self.hat_delta is None else vars(self.hat_delta),
            "rotations": [i + 1 for i in self.rotations],
            "final_rule": self.final_rule,
        }


def connector_dict(c: Connector) -> dict:
    if isinstance(c, Square):
        return {"kind": "hat", **c.to_dict()}
    return {"kind": "segment", "a": list(c.a), "b": list(c.b)}


def interface_of(s1: Square, s2: Square, tol: float = 1e-9) -> Segment:
    rel = classify_squares(s1, s2)
    if rel.tag != "touching":
        raise ResolutionInsufficient("consecutive squares do not touch", tag=rel.tag)
    return rel.interface


def _final_square(prev: Square, k: Square, y: Point, tol: float) -> tuple[Square, str]:
    """Square of diameter ``dist(y, prev)`` inside ``k^cl`` touching ``prev`` with ``y`` on its closure."""
    side = dist_point_square(y, prev)
    pb = prev.bounds
    kb = k.bounds
    best = None
    for n in (0, 1):
        t = 1 - n
        gap = abs(k.center[n] - prev.center[n]) - (k.radius + prev.radius)
        if abs(gap) > tol:
            continue
        up = k.center[n] > prev.center[n]
        start = pb[2 * n + 1] if up else pb[2 * n] - side
        lo_t, hi_t = pb[2 * t], pb[2 * t + 1]
        q = min(max(y[t], lo_t), hi_t)
        lo = max(kb[2 * t], max(y[t], q) - side)
        hi = min(kb[2 * t + 1] - side, min(y[t], q))
        if lo > hi + tol:
            continue
        a = min(max(y[t] - side / 2, lo), hi)
        # Prefer placements whose contact with ``prev`` is a segment, not a corner.
        overlap = min(a + side, hi_t) - max(a, lo_t)
        if best is None or overlap > best[0]:
            bounds = [0.0] * 4
            bounds[2 * n], bounds[2 * n + 1] = start, start + side
            bounds[2 * t], bounds[2 * t + 1] = a, a + side
            best = (overlap, bounds)
    if best is None:
        return k, "separating"
    x0, x1, y0, y1 = best[1]
    return Square(Point(0.5 * (x0 + x1), 0.5 * (y0 + y1)), 0.5 * side), "exact"


def _meets_domain(d: PolygonDomain, seg: Segment) -> bool:
    t = np.linspace(0.0, 1.0, 11)[:, None]
    pts = (1 - t) * np.asarray(seg.a) + t * np.asarray(seg.b)
    if seg.is_point:
        pts = pts[:1]
    return bool(d.contains_points(pts).any())


def build_wide_chain(d: PolygonDomain, g: GridField, x, y, max_k: int = 10_000,
                     with_hats: bool = True) -> WideChain:
    x, y = as_point(x), as_point(y)
    for p in (x, y):
        if not d.contains(p):
            raise PointOutside("chain endpoint is not in the domain", point=list(p))
    squares = [max_inscribed_square(d, x)]
    chain = WideChain(squares, x, y, g.h)
    while not squares[-1].contains(y, closed=True):
        if len(squares) >= max_k:
            raise ChainTooLong(f"more than {max_k} squares", k=len(squares))
        sep = separating_square(d, g, squares[-1], y)
        chain.steps.append(sep)
        if sep.verdict == CONTAINS_B:
            final, rule = _final_square(squares[-1], sep.square, y, d.tol)
            if rule == "exact" and not _meets_domain(d, interface_of(squares[-1], final)):
                # Corner contact on the boundary would break the chain; keep the larger square.
                final, rule = sep.square, "separating"
            squares.append(final)
            chain.final_rule = rule
            break
        if sep.square.diam < 4 * g.h:
            raise ChainTooLong("chain square below grid resolution", diam=sep.square.diam, h=g.h,
                               k=len(squares))
        squares.append(sep.square)
        chain.final_rule = "separating"
    chain.rotations = rotation_indices(chain.squares, d.tol)
    if with_hats:
        compute_hats(chain, d)
        chain.connectors = connectors(chain, d)
    return chain


def rotation_indices(squares: list[Square], tol: float) -> list[int]:
    """Indices i (0-based) where ``S_i^cl ∩ S_{i+2}^cl`` is a single point."""
    out = []
    for i in range(len(squares) - 2):
        box = closure_intersection(squares[i], squares[i + 2], tol=tol)
        if box is not None and box[1] - box[0] <= tol and box[3] - box[2] <= tol:
            out.append(i)
    return out


def compute_hats(chain: WideChain, d: PolygonDomain) -> WideChain:
    sq = chain.squares
    k = len(sq)
    points = {}
    for i in range(k - 1):
        seg = chain.interface(i)
        if seg.is_point:
            points[i] = seg.a
    chain.hats = [None] * k
    chain.hat_delta = None
    if not points:
        return chain
    d1 = min(d.boundary_distance(w) for w in points.values())
    d2 = min(s.diam for s in sq)
    d3 = min((dist_point_square(w, sq[j]) for i, w in points.items() for j in range(k) if j not in (i, i + 1)),
             default=math.inf)
    delta = min(d1, d2, d3) / 8.0
    if delta <= d.tol:
        raise DegenerateDelta("hat radius collapsed", d1=d1, d2=d2, d3=d3)
    chain.hat_delta = HatDelta(delta, d1, d2, d3)
    for i, w in points.items():
        chain.hats[i] = Square(w, delta)
    return chain


def connectors(chain: WideChain, d: PolygonDomain) -> list[Connector]:
    out: list[Connector] = []
    for i in range(chain.k - 1):
        seg = chain.interface(i)
        if seg.is_point:
            out.append(chain.hats[i])
            continue
        t = np.linspace(0.0, 1.0, 101)[1:-1, None]
        pts = (1 - t) * np.asarray(seg.a) + t * np.asarray(seg.b)
        if not d.contains_points(pts).all():
            raise ConnectorNotInOmega("open interface segment leaves the domain", index=i + 1)
        out.append(seg)
    return out


# -- audits -------------------------------------------------------------------

@dataclass
class Report:
    checks: dict[str, bool] = field(default_factory=dict)
    failures: list[dict] = field(default_factory=list)
    h: float = 0.0
    values: dict = field(default_factory=dict)

    def record(self, name: str, ok: bool, **detail) -> None:
        self.checks[name] = self.checks.get(name, True) and bool(ok)
        if not ok:
            self.failures.append({"check": name, **detail})

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        out = {"passed": self.passed, "h": self.h, "checks": dict(sorted(self.checks.items())),
               "failures": self.failures}
        if self.values:
            out["values"] = self.values
        return out


def square_cells_labels(g: GridField, labels: np.ndarray, s: Square) -> set[int]:
    """Labels carried by the cells of an open square (nearest cell if it holds none)."""
    mask = g.square_mask(s, closed=False)
    vals = labels[mask]
    vals = vals[vals > 0]
    if len(vals):
        return set(np.unique(vals).tolist())
    cell = g.nearest_inside_cell(s.center, labels > 0)
    return set() if cell is None else {int(labels[cell])}


def _closure_meet_points(box: tuple[float, float, float, float]) -> np.ndarray:
    x0, x1, y0, y1 = box
    t = np.linspace(0.0, 1.0, 9)
    return np.column_stack([x0 + t * (x1 - x0), y0 + t * (y1 - y0)])


def verify_wide_invariants(chain: WideChain, d: PolygonDomain, g: GridField) -> Report:
    rep = Report(h=g.h)
    sq = chain.squares
    k = len(sq)
    tol = d.tol
    rep.record("x_is_center_of_first", sq[0].center == chain.x and sq[0].contains(chain.x))
    rep.record("y_in_last_closure", sq[-1].contains(chain.y, closed=True, tol=tol))
    for i in range(k):
        for j in range(i + 1, k):
            ok = uniform_dist(sq[i].center, sq[j].center) >= sq[i].radius + sq[j].radius - tol
            rep.record("pairwise_disjoint", ok, i=i + 1, j=j + 1)
            box = closure_intersection(sq[i], sq[j], tol=tol)
            if j == i + 1:
                ok = box is not None and bool(d.contains_points(_closure_meet_points(box)).any())
                rep.record("consecutive_meet_in_domain", ok, i=i + 1)
            elif box is not None:
                pts = _closure_meet_points(box)
                ok = bool((d.boundary_distances(pts) <= 10 * tol).all())
                rep.record("nonconsecutive_meet_only_on_boundary", ok, i=i + 1, j=j + 1)
            if j == i + 2:
                single = box is None or (box[1] - box[0] <= tol or box[3] - box[2] <= tol) and \
                    max(box[1] - box[0], box[3] - box[2]) <= tol
                rep.record("skip_one_meet_at_most_point", single, i=i + 1)
    for i in range(k - 1):
        ok = d.segment_inside(sq[i].center, sq[i + 1].center)
        rep.record("center_segments_in_domain", ok, i=i + 1)
    for i in range(1, k - 1):
        lab, _ = label_region(g.inside & ~g.square_mask(sq[i], closed=True))
        before = set().union(*(square_cells_labels(g, lab, sq[j]) for j in range(i)))
        after = set().union(*(square_cells_labels(g, lab, sq[j]) for j in range(i + 1, k)))
        rep.record("removal_separates", not (before & after), i=i + 1)
    for i, hat in enumerate(chain.hats):
        if hat is None:
            continue
        ok = hat.diam <= 0.25 * min(sq[i].diam, sq[i + 1].diam) + tol
        rep.record("hat_small", ok, i=i + 1)
        double = hat.scaled(2.0)
        for j in range(k):
            if j not in (i, i + 1):
                rep.record("hat_clear_of_others", dist_squares(double, sq[j]) > 0, i=i + 1, j=j + 1)
    return rep


@dataclass
class ComplementReport:
    components: list[tuple[int, list[int]]]
    families: dict[str, list[int]]
    multiplicity: int
    h: float
    violations: list[tuple[int, list[int]]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations and self.multiplicity <= 3

    def to_dict(self) -> dict:
        return {"components": len(self.components), "families": self.families,
                "multiplicity": self.multiplicity, "h": self.h,
                "violations": [[c, idx] for c, idx in self.violations], "passed": self.passed}


def _ring(g: GridField, mask: np.ndarray, box) -> tuple[tuple[slice, slice], np.ndarray]:
    x0, x1, y0, y1 = box
    win = g.index_window((x0 - 2 * g.h, x1 + 2 * g.h, y0 - 2 * g.h, y1 + 2 * g.h))
    sub = mask[win]
    return win, ndimage.binary_dilation(sub, FOUR) & ~sub


def wide_set_masks(chain: WideChain, g: GridField) -> tuple[list[np.ndarray], list[Optional[np.ndarray]]]:
    squares = [g.square_mask(s, closed=True) & g.inside for s in chain.squares]
    hats = [None if h is None else g.square_mask(h, closed=True) & g.inside for h in chain.hats]
    return squares, hats


def complement_report(chain: WideChain, d: PolygonDomain, g: GridField, strict: bool = False) -> ComplementReport:
    k = chain.k
    sq_masks, hat_masks = wide_set_masks(chain, g)
    w = np.zeros(g.shape, dtype=bool)
    for m in sq_masks + [m for m in hat_masks if m is not None]:
        w |= m
    labels, n = label_region(g.inside & ~w)
    touched: list[set[int]] = [set() for _ in range(n + 1)]

    def mark(mask: np.ndarray, box, idx: set[int]) -> None:
        win, ring = _ring(g, mask, box)
        for lab in np.unique(labels[win][ring]).tolist():
            if lab:
                touched[lab] |= idx

    for i, s in enumerate(chain.squares):
        mark(sq_masks[i], s.bounds, {i})
    for i, hat in enumerate(chain.hats):
        if hat is not None:
            mark(hat_masks[i], hat.bounds, {i, i + 1})
    comps, violations = [], []
    fam_phi = {i: [] for i in range(k)}
    fam_psi = {i: [] for i in range(k - 1)}
    comp_family = np.zeros(n + 1, dtype=int)  # 0 none, 1 phi, 2 psi
    for lab in range(1, n + 1):
        idx = sorted(touched[lab])
        comps.append((lab, [i + 1 for i in idx]))
        if len(idx) == 1:
            fam_phi[idx[0]].append(lab)
            comp_family[lab] = 1
        elif len(idx) == 2 and idx[1] == idx[0] + 1:
            fam_psi[idx[0]].append(lab)
            comp_family[lab] = 2
        else:
            violations.append((lab, [i + 1 for i in idx]))
    if violations and strict:
        raise ComponentTouchesTooMany("complement component touches non-consecutive squares",
                                      h=g.h, components=violations)
    # Cover counting: open squares lie in Phi_i, Psi_{i-1}, Psi_i; connector
    # cells only in Psi_i; complement components in their single family.
    count = np.zeros(g.shape, dtype=np.int16)
    open_any = np.zeros(g.shape, dtype=bool)
    for i, s in enumerate(chain.squares):
        m = g.square_mask(s, closed=False) & g.inside
        count[m] += 1 + (i >= 1) + (i <= k - 2)
        open_any |= m
    conn = w & ~open_any
    count[conn] += 1
    comp_cells = labels > 0
    count[comp_cells] += (comp_family[labels[comp_cells]] > 0)
    families = {"phi": {str(i + 1): v for i, v in fam_phi.items() if v},
                "psi": {str(i + 1): v for i, v in fam_psi.items() if v}}
    return ComplementReport(comps, families, int(count.max()) if count.size else 0, g.h, violations)
