"""Axis-aligned squares, segments and points under the uniform (max) norm.

Squares are open sets ``S(c, r) = {z : |z - c|_inf < r}``; ``r`` is half the
side length and ``diam = 2 r``.  Closures are written ``S^cl`` in comments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import ndimage

REL_TOL = 1e-9


class Point(NamedTuple):
    x: float
    y: float


class Segment(NamedTuple):
    a: Point
    b: Point

    @property
    def length(self) -> float:
        return uniform_dist(self.a, self.b)

    @property
    def is_point(self) -> bool:
        return self.a == self.b

    @property
    def midpoint(self) -> Point:
        return Point(0.5 * (self.a.x + self.b.x), 0.5 * (self.a.y + self.b.y))


@dataclass(frozen=True)
class Square:
    center: Point
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", Point(float(self.center[0]), float(self.center[1])))
        r = float(self.radius)
        if not (r > 0 and math.isfinite(r)):
            raise ValueError(f"square radius must be positive and finite, got {self.radius!r}")
        object.__setattr__(self, "radius", r)

    @classmethod
    def from_bounds(cls, x0: float, x1: float, y0: float, y1: float) -> "Square":
        """Square with closure ``[x0, x1] x [y0, y1]``; the two spans must agree."""
        side = x1 - x0
        if abs((y1 - y0) - side) > REL_TOL * max(1.0, abs(side)):
            raise ValueError("bounds do not describe a square")
        return cls(Point(0.5 * (x0 + x1), 0.5 * (y0 + y1)), 0.5 * side)

    @property
    def diam(self) -> float:
        return 2.0 * self.radius

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        cx, cy = self.center
        r = self.radius
        return cx - r, cx + r, cy - r, cy + r

    def corners(self) -> list[Point]:
        """Corners in clockwise order starting at the top-left."""
        x0, x1, y0, y1 = self.bounds
        return [Point(x0, y1), Point(x1, y1), Point(x1, y0), Point(x0, y0)]

    def scaled(self, factor: float) -> "Square":
        return Square(self.center, self.radius * factor)

    def contains(self, p, closed: bool = False, tol: float = 0.0) -> bool:
        d = uniform_dist(self.center, p)
        return d <= self.radius + tol if closed else d < self.radius - tol

    def contains_points(self, pts: np.ndarray, closed: bool = False, tol: float = 0.0) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        d = np.maximum(np.abs(pts[..., 0] - self.center.x), np.abs(pts[..., 1] - self.center.y))
        return d <= self.radius + tol if closed else d < self.radius - tol

    def to_dict(self) -> dict:
        return {"center": [self.center.x, self.center.y], "radius": self.radius}


@dataclass(frozen=True)
class SquareRelation:
    tag: str  # nested | overlapping | touching | separated
    interface: Optional[Segment] = None
    contact: Optional[Point] = None

    @property
    def is_point_contact(self) -> bool:
        return self.interface is not None and self.interface.is_point


def as_point(p) -> Point:
    return p if isinstance(p, Point) else Point(float(p[0]), float(p[1]))


def uniform_dist(a, b) -> float:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def scale_of(*values: float) -> float:
    return max([1.0] + [abs(v) for v in values])


def geom_tol(*squares: Square) -> float:
    vals = []
    for s in squares:
        vals += [s.center.x, s.center.y, s.radius]
    return REL_TOL * scale_of(*vals)


def _closure_overlap(s1: Square, s2: Square) -> tuple[float, float, float, float]:
    a0, a1, b0, b1 = s1.bounds
    c0, c1, d0, d1 = s2.bounds
    return max(a0, c0), min(a1, c1), max(b0, d0), min(b1, d1)


def closure_intersection(s1: Square, s2: Square, tol: float = 0.0) -> Optional[tuple[float, float, float, float]]:
    """Box ``S1^cl ∩ S2^cl`` as (x0, x1, y0, y1), or None when empty beyond ``tol``."""
    x0, x1, y0, y1 = _closure_overlap(s1, s2)
    if x1 < x0 - tol or y1 < y0 - tol:
        return None
    if x1 < x0:
        x0 = x1 = 0.5 * (x0 + x1)
    if y1 < y0:
        y0 = y1 = 0.5 * (y0 + y1)
    return x0, x1, y0, y1


def classify_squares(s1: Square, s2: Square, tol: Optional[float] = None) -> SquareRelation:
    tol = geom_tol(s1, s2) if tol is None else tol
    d = uniform_dist(s1.center, s2.center)
    r1, r2 = s1.radius, s2.radius
    if d <= abs(r2 - r1):
        return SquareRelation("nested")
    if abs(d - (r1 + r2)) <= tol:
        x0, x1, y0, y1 = closure_intersection(s1, s2, tol=2 * tol)
        # One of the spans is degenerate up to float noise; collapse it exactly.
        if x1 - x0 <= 2 * tol:
            x0 = x1 = 0.5 * (x0 + x1)
        if y1 - y0 <= 2 * tol:
            y0 = y1 = 0.5 * (y0 + y1)
        alpha = r2 / (r1 + r2)
        contact = Point(alpha * s1.center.x + (1 - alpha) * s2.center.x,
                        alpha * s1.center.y + (1 - alpha) * s2.center.y)
        # Canonical endpoint order keeps the relation symmetric in its arguments.
        return SquareRelation("touching", Segment(Point(x0, y0), Point(x1, y1)), contact)
    if d < r1 + r2:
        return SquareRelation("overlapping")
    return SquareRelation("separated")


def touching(s1: Square, s2: Square, tol: Optional[float] = None) -> bool:
    return classify_squares(s1, s2, tol).tag == "touching"


def _seg_objective(px, py, ax, ay, dx, dy, t):
    return np.maximum(np.abs(ax + t * dx - px), np.abs(ay + t * dy - py))


def dist_points_segment_inf(pts: np.ndarray, a, b) -> np.ndarray:
    """Vectorised uniform distance from each row of ``pts`` to the segment [a, b]."""
    pts = np.asarray(pts, dtype=float)
    px, py = pts[..., 0], pts[..., 1]
    ax, ay = float(a[0]), float(a[1])
    dx, dy = float(b[0]) - ax, float(b[1]) - ay
    ux, uy = px - ax, py - ay
    if dy == 0.0:
        lo, hi = min(0.0, dx), max(0.0, dx)
        gap = np.maximum(0.0, np.maximum(ux - hi, lo - ux))
        return np.maximum(np.abs(uy), gap)
    if dx == 0.0:
        lo, hi = min(0.0, dy), max(0.0, dy)
        gap = np.maximum(0.0, np.maximum(uy - hi, lo - uy))
        return np.maximum(np.abs(ux), gap)
    # Convex piecewise-linear objective in t: its minimum sits at an endpoint
    # or where one of |ux - t dx|, |uy - t dy| vanishes or the two coincide.
    best = np.minimum(_seg_objective(px, py, ax, ay, dx, dy, 0.0),
                      _seg_objective(px, py, ax, ay, dx, dy, 1.0))
    cands = [ux / dx, uy / dy]
    if dx != dy:
        cands.append((ux - uy) / (dx - dy))
    if dx != -dy:
        cands.append((ux + uy) / (dx + dy))
    for t in cands:
        t = np.clip(t, 0.0, 1.0)
        best = np.minimum(best, _seg_objective(px, py, ax, ay, dx, dy, t))
    return best


def dist_point_segment_inf(p, s: Segment) -> float:
    return float(dist_points_segment_inf(np.array([p[0], p[1]], dtype=float), s[0], s[1]))


def dist_boxes(b1: tuple[float, float, float, float], b2: tuple[float, float, float, float]) -> float:
    gx = max(0.0, b1[0] - b2[1], b2[0] - b1[1])
    gy = max(0.0, b1[2] - b2[3], b2[2] - b1[3])
    return max(gx, gy)


def dist_squares(s1: Square, s2: Square) -> float:
    return dist_boxes(s1.bounds, s2.bounds)


def dist_point_square(p, s: Square) -> float:
    return max(0.0, uniform_dist(p, s.center) - s.radius)


def segment_box(s: Segment) -> tuple[float, float, float, float]:
    return min(s.a.x, s.b.x), max(s.a.x, s.b.x), min(s.a.y, s.b.y), max(s.a.y, s.b.y)


def shape_box(shape) -> tuple[float, float, float, float]:
    """Bounding box of a Square (closure), axis-parallel Segment or Point."""
    if isinstance(shape, Square):
        return shape.bounds
    if isinstance(shape, Segment):
        return segment_box(shape)
    p = as_point(shape)
    return p.x, p.x, p.y, p.y


def dist_shapes(a, b) -> float:
    """Uniform distance between squares, axis-parallel segments or points."""
    return dist_boxes(shape_box(a), shape_box(b))



def _clusters(values: list[float], tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Sorted representatives of ``values`` merged within ``tol`` plus an index map."""
    vals = np.asarray(values, dtype=float)
    order = np.argsort(vals)
    ids = np.zeros(len(vals), dtype=int)
    reps = []
    for pos in order:
        if not reps or vals[pos] - reps[-1] > tol:
            reps.append(vals[pos])
        ids[pos] = len(reps) - 1
    return np.asarray(reps), ids


def box_union_topology(boxes: Sequence[tuple[float, float, float, float]], segments: Sequence[Segment] = (),
                       tol: float = 0.0) -> tuple[int, int]:
    """Connected components and Euler characteristic of a union of open boxes and
    open axis-parallel segments.

    Coordinates closer than ``tol`` are identified.  The union is decomposed into
    the open vertices, edges and faces of the arrangement of all box sides and
    ``F - E + V`` is counted over the cells it contains.  That count is the
    ordinary Euler characteristic when the union is open in the plane, i.e. each
    segment lies on a side shared by two boxes; a connected open union is then
    simply connected iff the count is 1.
    """
    segs = [s for s in segments if not s.is_point]
    xv = [v for b in boxes for v in b[:2]] + [p.x for s in segs for p in s]
    yv = [v for b in boxes for v in b[2:]] + [p.y for s in segs for p in s]
    if not xv:
        return 0, 0
    xr, xi = _clusters(xv, tol)
    yr, yi = _clusters(yv, tol)
    member = np.zeros((2 * len(yr) - 1, 2 * len(xr) - 1), dtype=bool)
    nb = len(boxes)
    for k in range(nb):
        i0, i1 = xi[2 * k], xi[2 * k + 1]
        j0, j1 = yi[2 * k], yi[2 * k + 1]
        member[2 * j0 + 1:2 * j1, 2 * i0 + 1:2 * i1] = True
    for k, s in enumerate(segs):
        ia, ib = sorted((xi[2 * nb + 2 * k], xi[2 * nb + 2 * k + 1]))
        ja, jb = sorted((yi[2 * nb + 2 * k], yi[2 * nb + 2 * k + 1]))
        if ia == ib:
            member[2 * ja + 1:2 * jb, 2 * ia] = True
        else:
            member[2 * ja, 2 * ia + 1:2 * ib] = True
    _, parts = ndimage.label(member)
    jj, ii = np.nonzero(member)
    euler = int(np.sum(1 - 2 * ((jj % 2 + ii % 2) % 2)))
    return int(parts), euler
