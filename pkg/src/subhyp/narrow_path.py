"""The narrow chain: each middle square of the wide chain shrunk inside itself.

``Q_1 = S_1`` and ``Q_k = S_k``; every other ``Q_{m+1}`` is cut out of
``S_{m+1}`` so that it still touches ``Q_m`` and ``S_{m+2}`` but its size is
controlled by the gap between them (or by ``eps`` at a shared corner).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .domain import GridField, PolygonDomain
from .errors import HatTooLarge, PreconditionViolated
from .geom import (Point, Segment, Square, as_point, box_union_topology, classify_squares, closure_intersection, dist_points_segment_inf,
                   dist_shapes, dist_squares, uniform_dist)
from .wide_path import Connector, Report, WideChain, connector_dict


@dataclass
class Guard:
    index: int
    rotation_point: Point
    square: Square
    gap: float


@dataclass
class Eps0:
    value: float
    guards: list[Guard] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"value": None if math.isinf(self.value) else self.value,
                "guards": [{"index": g.index + 1, "rotation_point": list(g.rotation_point),
                            "square": g.square.to_dict(), "gap": g.gap} for g in self.guards]}


@dataclass
class NarrowChain:
    squares: list[Square]
    parent: WideChain
    eps0: Eps0
    hats: list[Optional[Square]] = field(default_factory=list)
    connectors: list[Connector] = field(default_factory=list)
    branches: list[str] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.squares)

    def to_dict(self) -> dict:
        items = []
        for i, q in enumerate(self.squares):
            item = {"index": i + 1, **q.to_dict()}
            if i < len(self.hats) and self.hats[i] is not None:
                item["hat"] = self.hats[i].to_dict()
            if i < len(self.connectors):
                item["connector"] = connector_dict(self.connectors[i])
            if 0 < i < self.k - 1:
                item["branch"] = self.branches[i - 1]
            items.append(item)
        return {"k": self.k, "from": list(self.parent.x), "to": list(self.parent.y), "h": self.parent.h,
                "squares": items, "eps0": self.eps0.to_dict()}


def _meet(s1: Square, s2: Square, tol: float) -> Optional[tuple[float, float, float, float]]:
    return closure_intersection(s1, s2, tol=tol)


def _is_point(box, tol: float) -> bool:
    return box[1] - box[0] <= tol and box[3] - box[2] <= tol


def corner_subsquare(k: Square, vertex, size: float) -> Square:
    """The subsquare of ``k`` with vertex ``vertex`` and diameter ``size``."""
    v = as_point(vertex)
    sx = 1.0 if k.center.x > v.x else -1.0
    sy = 1.0 if k.center.y > v.y else -1.0
    half = 0.5 * size
    return Square(Point(v.x + sx * half, v.y + sy * half), half)


def _closest_pair(b1, b2) -> tuple[np.ndarray, np.ndarray]:
    """Points of two boxes realising their uniform distance (common midpoint where they overlap)."""
    a, b = np.zeros(2), np.zeros(2)
    for ax in (0, 1):
        lo1, hi1 = b1[2 * ax], b1[2 * ax + 1]
        lo2, hi2 = b2[2 * ax], b2[2 * ax + 1]
        if hi1 < lo2:
            a[ax], b[ax] = hi1, lo2
        elif hi2 < lo1:
            a[ax], b[ax] = lo1, hi2
        else:
            a[ax] = b[ax] = 0.5 * (max(lo1, lo2) + min(hi1, hi2))
    return a, b


def _pull_inside(p: np.ndarray, box, step: float) -> np.ndarray:
    """Move ``p`` at most ``step`` along a segment box so it lies in the open segment."""
    q = p.copy()
    ax = 0 if box[1] - box[0] >= box[3] - box[2] else 1
    lo, hi = box[2 * ax], box[2 * ax + 1]
    if hi - lo > 2 * step:
        q[ax] = min(max(p[ax], lo + step), hi - step)
    return q


def square_through(k: Square, a: np.ndarray, b: np.ndarray) -> Square:
    """Square inside ``k^cl`` with diameter ``|a-b|`` having ``a`` and ``b`` on its closure."""
    gaps = np.abs(a - b)
    long_ax = int(np.argmax(gaps))
    side = float(gaps[long_ax])
    other = 1 - long_ax
    kb = k.bounds
    lo, hi = kb[2 * other], kb[2 * other + 1]
    mid = 0.5 * (a[other] + b[other])
    start = min(max(mid - 0.5 * side, lo), hi - side)
    center = np.zeros(2)
    center[long_ax] = 0.5 * (a[long_ax] + b[long_ax])
    center[other] = start + 0.5 * side
    return Square(Point(float(center[0]), float(center[1])), 0.5 * side)


def shrink_middle_square(k1: Square, k: Square, k2: Square, eps: float, tol: Optional[float] = None) -> Square:
    if tol is None:
        tol = 1e-9 * max(1.0, *(abs(v) for s in (k1, k, k2) for v in s.bounds))
    if not eps > 0:
        raise PreconditionViolated("eps must be positive", eps=eps)
    for name, (s1, s2) in {"k1/k": (k1, k), "k/k2": (k, k2), "k1/k2": (k1, k2)}.items():
        if classify_squares(s1, s2, tol).tag in ("overlapping", "nested"):
            raise PreconditionViolated(f"squares {name} overlap", pair=name)
    i1, i2 = _meet(k1, k, tol), _meet(k, k2, tol)
    if i1 is None or i2 is None:
        raise PreconditionViolated("middle square must touch both neighbours")
    outer = _meet(k1, k2, tol)
    if outer is not None:
        if not _is_point(outer, tol):
            raise PreconditionViolated("outer squares share more than one point")
        vertex = Point(0.5 * (outer[0] + outer[1]), 0.5 * (outer[2] + outer[3]))
        if min(uniform_dist(vertex, c) for c in k.corners()) > tol:
            raise PreconditionViolated("shared point is not a vertex of the middle square", point=list(vertex))
        return corner_subsquare(k, vertex, min(eps, k.diam))
    gap = dist_squares(k1, k2)
    a0, b0 = _closest_pair(i1, i2)
    a = _pull_inside(a0, i1, min(0.25 * max(i1[1] - i1[0], i1[3] - i1[2]), 0.25 * gap))
    b = _pull_inside(b0, i2, min(0.25 * max(i2[1] - i2[0], i2[3] - i2[2]), 0.25 * gap))
    return square_through(k, a, b)


def rotation_guards(wide: WideChain, tol: float) -> Eps0:
    sq = wide.squares
    guards = []
    for m in range(len(sq) - 3):
        triple = _meet(sq[m], sq[m + 2], tol)
        if triple is None or not _is_point(triple, tol):
            continue
        a = Point(0.5 * (triple[0] + triple[1]), 0.5 * (triple[2] + triple[3]))
        if not sq[m + 1].contains(a, closed=True, tol=tol):
            continue
        size = 0.25 * min(sq[m].diam, sq[m + 1].diam, sq[m + 2].diam)
        guard = corner_subsquare(sq[m + 1], a, size)
        guards.append(Guard(m, a, guard, dist_squares(guard, sq[m + 3])))
    value = 0.25 * min((g.gap for g in guards), default=math.inf)
    return Eps0(value, guards)


def build_narrow_chain(wide: WideChain, d: PolygonDomain) -> NarrowChain:
    sq = wide.squares
    eps0 = rotation_guards(wide, d.tol)
    qs = [sq[0]]
    branches = []
    for m in range(len(sq) - 2):
        eps = 0.25 * min(qs[m].diam, sq[m + 1].diam, sq[m + 2].diam, eps0.value)
        outer = _meet(qs[m], sq[m + 2], d.tol)
        branches.append("corner" if outer is not None else "gap")
        qs.append(shrink_middle_square(qs[m], sq[m + 1], sq[m + 2], eps, d.tol))
    if len(sq) > 1:
        qs.append(sq[-1])
    chain = NarrowChain(qs, wide, eps0, list(wide.hats), branches=branches)
    chain.connectors = narrow_connectors(chain, d)
    return chain


def narrow_connectors(chain: NarrowChain, d: PolygonDomain) -> list[Connector]:
    out: list[Connector] = []
    qs = chain.squares
    for i in range(chain.k - 1):
        box = _meet(qs[i], qs[i + 1], d.tol)
        if box is not None and _is_point(box, d.tol):
            hat = chain.hats[i] if i < len(chain.hats) else None
            if hat is None:
                raise HatTooLarge("point interface without a hat", index=i + 1)
            if hat.diam > 0.25 * min(qs[i].diam, qs[i + 1].diam) + d.tol:
                raise HatTooLarge("hat larger than a quarter of its squares", index=i + 1,
                                  hat=hat.diam, squares=[qs[i].diam, qs[i + 1].diam])
            out.append(hat)
        else:
            out.append(classify_squares(qs[i], qs[i + 1]).interface)
    return out


# -- audits -------------------------------------------------------------------

def _cells_near_segment(g: GridField, seg: Segment) -> np.ndarray:
    x0, x1 = sorted((seg.a.x, seg.b.x))
    y0, y1 = sorted((seg.a.y, seg.b.y))
    win = g.index_window((x0 - g.h, x1 + g.h, y0 - g.h, y1 + g.h))
    mask = np.zeros(g.shape, dtype=bool)
    gx, gy = np.meshgrid(g.xs[win[1]], g.ys[win[0]])
    dist = dist_points_segment_inf(np.stack([gx, gy], axis=-1).reshape(-1, 2), seg.a, seg.b).reshape(gx.shape)
    # Closed cells meeting the segment; the slack keeps ties at exactly h/2.
    mask[win] = dist <= 0.5 * g.h * (1 + 1e-9)
    return mask


def narrow_mask(chain: NarrowChain, g: GridField) -> np.ndarray:
    """Cells of ``N``: open squares, a one-cell strip along segment connectors,
    and each hat widened to at least one cell around its centre."""
    mask = np.zeros(g.shape, dtype=bool)
    for q in chain.squares:
        mask |= g.square_mask(q, closed=False)
    for c in chain.connectors:
        if isinstance(c, Square):
            mask |= g.square_mask(Square(c.center, max(c.radius, g.h)), closed=True)
        else:
            mask |= _cells_near_segment(g, c)
    return mask & g.inside


def verify_narrow_invariants(chain: NarrowChain, d: PolygonDomain, g: GridField) -> Report:
    rep = Report(h=g.h)
    tol = d.tol
    qs, sq = chain.squares, chain.parent.squares
    k = len(qs)
    rep.record("first_and_last_kept", qs[0] == sq[0] and qs[-1] == sq[-1])
    for i in range(k):
        qb, sb = qs[i].bounds, sq[i].bounds
        ok = qb[0] >= sb[0] - tol and qb[1] <= sb[1] + tol and qb[2] >= sb[2] - tol and qb[3] <= sb[3] + tol
        rep.record("inside_parent", ok, i=i + 1)
        for j in range(i + 1, k):
            ok = uniform_dist(qs[i].center, qs[j].center) >= qs[i].radius + qs[j].radius - tol
            rep.record("pairwise_disjoint", ok, i=i + 1, j=j + 1)
            box = _meet(qs[i], qs[j], tol)
            if j == i + 1:
                rep.record("consecutive_meet", box is not None, i=i + 1)
                parent = _meet(sq[i], sq[j], tol)
                same = box is not None and parent is not None and _is_point(box, tol) == _is_point(parent, tol)
                rep.record("interface_kind_kept", same, i=i + 1)
            elif j == i + 2:
                rep.record("skip_one_meet_at_most_point", box is None or _is_point(box, tol), i=i + 1)
            else:
                rep.record("far_closures_disjoint", box is None, i=i + 1, j=j + 1)
    for i in range(k - 2):
        corner = _meet(qs[i], sq[i + 2], tol) is not None
        if corner:
            ok = qs[i + 1].diam <= 0.25 * min(qs[i].diam, qs[i + 2].diam) + tol
            rep.record("corner_shrink_bound", ok, i=i + 1)
            if i + 3 < k:
                rep.record("clear_of_next_but_two", _meet(qs[i + 1], sq[i + 3], tol) is None, i=i + 1)
        else:
            ok = qs[i + 1].diam <= 2 * dist_squares(qs[i], qs[i + 2]) + tol
            rep.record("gap_shrink_bound", ok, i=i + 1)
            ys = chain.connectors
            ok = qs[i + 1].diam <= 4 * dist_shapes(ys[i], ys[i + 1]) + tol
            rep.record("connector_gap_bound", ok, i=i + 1)
    if k > 1:
        ys = chain.connectors
        rep.record("end_gap_bound", qs[0].diam <= 4 * dist_shapes(chain.parent.x, ys[0]) + tol, end="x")
        rep.record("end_gap_bound", qs[-1].diam <= 4 * dist_shapes(chain.parent.y, ys[-1]) + tol, end="y")
    for i, hat in enumerate(chain.hats):
        if hat is None:
            continue
        for j in range(k):
            if j not in (i, i + 1):
                rep.record("hat_clear_of_squares", _meet(hat, qs[j], 0.0) is None, i=i + 1, j=j + 1)
    parts, euler = narrow_topology(chain, tol)
    rep.record("connected", parts == 1, components=parts)
    rep.record("simply_connected", parts == 1 and euler == 1, euler=euler)
    return rep


def narrow_topology(chain: NarrowChain, tol: float = 0.0) -> tuple[int, int]:
    """Components and Euler characteristic of ``N`` (exact, on the arrangement of its boxes)."""
    boxes = [q.bounds for q in chain.squares]
    boxes += [c.bounds for c in chain.connectors if isinstance(c, Square)]
    segs = [c for c in chain.connectors if isinstance(c, Segment)]
    return box_union_topology(boxes, segs, tol)


def _near(pts: np.ndarray, shape, tol: float) -> np.ndarray:
    if isinstance(shape, Square):
        return shape.contains_points(pts, closed=True, tol=tol)
    return dist_points_segment_inf(pts, shape.a, shape.b) <= tol


def decompose_path(chain: NarrowChain, pts, tol: float) -> tuple[bool, list[tuple[int, int]]]:
    """Split a polyline from ``x`` to ``y`` into pieces ``gamma_n`` inside ``Q_n^cl``.

    ``t_n`` is the first vertex (after ``s_n``) within ``tol`` of ``Y_n``;
    ``s_{n+1}`` the last vertex within ``tol`` of ``Y_n``.  Returns whether every
    piece lies in its square (within ``tol``) together with the index pairs.
    """
    pts = np.asarray(pts, dtype=float)
    k = chain.k
    pieces, s, ok = [], 0, True
    for n in range(k):
        if n == k - 1:
            t = len(pts) - 1
        else:
            hits = np.flatnonzero(_near(pts, chain.connectors[n], tol))
            after = hits[hits >= s]
            if not len(after):
                return False, pieces
            t = int(after[0])
        seg = pts[s:t + 1]
        ok &= bool(chain.squares[n].contains_points(seg, closed=True, tol=tol).all())
        pieces.append((s, t))
        if n < k - 1:
            s = int(hits[-1])
    return ok, pieces
