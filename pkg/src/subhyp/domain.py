"""Simple-polygon domains, their rasterization and boundary arcs of squares."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage
from shapely.geometry import LinearRing

from .errors import (BasePointInvalid, Degenerate, GridTooLarge, NoBoundaryContact,
                     NotSimple, PointOutside, PreconditionViolated, TooFewVertices)
from .geom import REL_TOL, Point, Segment, Square, as_point, dist_points_segment_inf

MAX_CELLS = 4_000_000
FOUR = ndimage.generate_binary_structure(2, 1)
EIGHT = ndimage.generate_binary_structure(2, 2)


class PolygonDomain:
    """Open interior of a simple polygon with counter-clockwise vertices."""

    def __init__(self, vertices: np.ndarray):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.vertices.setflags(write=False)
        v = self.vertices
        self.edges = np.concatenate([v, np.roll(v, -1, axis=0)], axis=1)
        self.edges.setflags(write=False)
        self.bbox = (float(v[:, 0].min()), float(v[:, 0].max()), float(v[:, 1].min()), float(v[:, 1].max()))
        self.scale = max(1.0, float(np.abs(v).max()))
        self.tol = REL_TOL * self.scale
        self._grids: dict[float, GridField] = {}
        self.max_cells = MAX_CELLS

    def __repr__(self) -> str:
        return f"PolygonDomain({len(self.vertices)} vertices, bbox={self.bbox})"

    @property
    def edge_list(self) -> list[Segment]:
        return [Segment(Point(*e[:2]), Point(*e[2:])) for e in self.edges.tolist()]

    @property
    def area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    @property
    def diameter(self) -> float:
        x0, x1, y0, y1 = self.bbox
        return math.hypot(x1 - x0, y1 - y0)

    def to_dict(self) -> dict:
        return {"vertices": self.vertices.tolist()}

    # -- point queries -------------------------------------------------
    def boundary_distances(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        out = np.full(pts.shape[:-1], np.inf)
        for e in self.edges:
            np.minimum(out, dist_points_segment_inf(pts, e[:2], e[2:]), out=out)
        return out

    def boundary_distance(self, p) -> float:
        return float(self.boundary_distances(np.array([p[0], p[1]], dtype=float)))

    def _ray_parity(self, pts: np.ndarray) -> np.ndarray:
        px, py = pts[..., 0], pts[..., 1]
        inside = np.zeros(px.shape, dtype=bool)
        for x1, y1, x2, y2 in self.edges:
            if y1 == y2:
                continue
            cond = (y1 > py) != (y2 > py)
            xint = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            inside ^= cond & (px < xint)
        return inside

    def contains_points(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        inside = self._ray_parity(pts)
        if inside.any():
            # Points on the boundary count as outside: the domain is open.
            inside[inside] = self.boundary_distances(pts[inside]) > 0.0
        return inside

    def contains(self, p) -> bool:
        return bool(self.contains_points(np.array([[p[0], p[1]]], dtype=float))[0])

    def segment_inside(self, a, b, samples: int = 100) -> bool:
        t = np.linspace(0.0, 1.0, samples + 1)[:, None]
        pts = (1 - t) * np.asarray(a, float) + t * np.asarray(b, float)
        return bool(self.contains_points(pts).all())

    def grid(self, h: float, max_cells: Optional[int] = None) -> "GridField":
        """Cached :func:`rasterize`; the cell budget defaults to ``self.max_cells``."""
        key = float(h)
        g = self._grids.get(key)
        if g is None:
            g = rasterize(self, key, self.max_cells if max_cells is None else max_cells)
            self._grids[key] = g
        return g

    def default_h(self) -> float:
        return self.diameter / 512.0


def _validate(v: np.ndarray, tol: float) -> None:
    n = len(v)
    nxt = np.roll(v, -1, axis=0)
    lens = np.abs(nxt - v).max(axis=1)
    if (lens <= tol).any():
        raise Degenerate("zero-length edge", index=int(np.argmax(lens <= tol)))
    # Consecutive edges folding back onto each other enclose zero area.
    d1 = nxt - v
    d0 = v - np.roll(v, 1, axis=0)
    cross = d0[:, 0] * d1[:, 1] - d0[:, 1] * d1[:, 0]
    dot = (d0 * d1).sum(axis=1)
    folded = (np.abs(cross) <= tol * (np.abs(d0).max(axis=1) + np.abs(d1).max(axis=1))) & (dot < 0)
    if folded.any():
        raise Degenerate("edge folds back on its predecessor", index=int(np.argmax(folded)))
    if len(np.unique(np.round(v / tol).astype(np.int64), axis=0)) < n:
        raise NotSimple("repeated vertex")
    if not LinearRing(v).is_simple:
        raise NotSimple("polygon boundary self-intersects")


def load_domain(vertices: Sequence) -> PolygonDomain:
    """Validate a vertex list and return a counter-clockwise domain."""
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2:
        raise Degenerate("vertices must be an (n, 2) array")
    if not np.isfinite(v).all():
        raise Degenerate("non-finite coordinate")
    if len(v) > 1 and np.array_equal(v[0], v[-1]):
        v = v[:-1]
    if len(v) < 3:
        raise TooFewVertices(f"need at least 3 vertices, got {len(v)}")
    tol = REL_TOL * max(1.0, float(np.abs(v).max()))
    _validate(v, tol)
    x, y = v[:, 0], v[:, 1]
    area2 = float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
    if abs(area2) <= tol:
        raise Degenerate("polygon has zero area")
    if area2 < 0:
        v = v[::-1]
    return PolygonDomain(v)


def load_domain_file(path) -> PolygonDomain:
    data = json.loads(Path(path).read_text())
    return load_domain(data["vertices"])


def save_domain_file(d: PolygonDomain, path) -> None:
    Path(path).write_text(json.dumps(d.to_dict()) + "\n")


def max_inscribed_square(d: PolygonDomain, c) -> Square:
    c = as_point(c)
    if not d.contains(c):
        raise PointOutside("center is not in the domain", point=list(c))
    return Square(c, d.boundary_distance(c))


# -- rasterization ----------------------------------------------------------

class GridField:
    """Cell-centred raster of a domain.  Arrays are indexed ``[row, col]`` = ``[iy, ix]``."""

    def __init__(self, domain: PolygonDomain, origin: Point, h: float, nx: int, ny: int,
                 inside: np.ndarray, bdist: np.ndarray):
        self.domain = domain
        self.origin = origin
        self.h = h
        self.nx, self.ny = nx, ny
        self.inside = inside
        self.bdist = bdist
        self.xs = origin.x + (np.arange(nx) + 0.5) * h
        self.ys = origin.y + (np.arange(ny) + 0.5) * h
        for a in (inside, bdist, self.xs, self.ys):
            a.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.ny, self.nx

    def cell_of(self, p) -> tuple[int, int]:
        ix = int(math.floor((p[0] - self.origin.x) / self.h))
        iy = int(math.floor((p[1] - self.origin.y) / self.h))
        return min(max(iy, 0), self.ny - 1), min(max(ix, 0), self.nx - 1)

    def center(self, iy: int, ix: int) -> Point:
        return Point(float(self.xs[ix]), float(self.ys[iy]))

    def centers(self, cells: np.ndarray) -> np.ndarray:
        cells = np.asarray(cells).reshape(-1, 2)
        return np.column_stack([self.xs[cells[:, 1]], self.ys[cells[:, 0]]])

    def square_mask(self, q: Square, closed: bool = True) -> np.ndarray:
        """Cells whose centres lie in ``q^cl`` (or ``q`` when ``closed`` is false)."""
        x0, x1, y0, y1 = q.bounds
        mask = np.zeros(self.shape, dtype=bool)
        if closed:
            cx = (self.xs >= x0) & (self.xs <= x1)
            cy = (self.ys >= y0) & (self.ys <= y1)
        else:
            cx = (self.xs > x0) & (self.xs < x1)
            cy = (self.ys > y0) & (self.ys < y1)
        mask[np.ix_(cy, cx)] = True
        return mask

    def index_window(self, box: tuple[float, float, float, float]) -> tuple[slice, slice]:
        """Row/column slices covering cells whose centres may lie in ``box``."""
        x0, x1, y0, y1 = box
        c0 = max(0, int(math.floor((x0 - self.origin.x) / self.h - 0.5)))
        c1 = min(self.nx, int(math.ceil((x1 - self.origin.x) / self.h + 0.5)) + 1)
        r0 = max(0, int(math.floor((y0 - self.origin.y) / self.h - 0.5)))
        r1 = min(self.ny, int(math.ceil((y1 - self.origin.y) / self.h + 0.5)) + 1)
        return slice(r0, r1), slice(c0, c1)

    def nearest_inside_cell(self, p, mask: Optional[np.ndarray] = None, reach: int = 1) -> Optional[tuple[int, int]]:
        """Cell containing ``p`` if it is in ``mask``, else the nearest one within ``reach`` cells."""
        mask = self.inside if mask is None else mask
        iy, ix = self.cell_of(p)
        if mask[iy, ix]:
            return iy, ix
        best, best_d = None, math.inf
        for dy in range(-reach, reach + 1):
            for dx in range(-reach, reach + 1):
                jy, jx = iy + dy, ix + dx
                if 0 <= jy < self.ny and 0 <= jx < self.nx and mask[jy, jx]:
                    dd = max(abs(self.xs[jx] - p[0]), abs(self.ys[jy] - p[1]))
                    if dd < best_d:
                        best, best_d = (jy, jx), dd
        return best

    def to_pgm(self, path) -> None:
        """Debug dump of the inside mask (white = inside), top row = largest y."""
        img = np.where(self.inside[::-1], 255, 0).astype(np.uint8)
        header = f"P5\n{self.nx} {self.ny}\n255\n".encode()
        Path(path).write_bytes(header + img.tobytes())


def _scanline_inside(d: PolygonDomain, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    e = d.edges
    x1, y1, x2, y2 = e[:, 0], e[:, 1], e[:, 2], e[:, 3]
    nonflat = y1 != y2
    x1, y1, x2, y2 = x1[nonflat], y1[nonflat], x2[nonflat], y2[nonflat]
    inside = np.zeros((len(ys), len(xs)), dtype=bool)
    for iy, y in enumerate(ys):
        cond = (y1 > y) != (y2 > y)
        if not cond.any():
            continue
        xint = np.sort(x1[cond] + (y - y1[cond]) * (x2[cond] - x1[cond]) / (y2[cond] - y1[cond]))
        # Crossing count strictly to the right of the centre decides parity.
        right = len(xint) - np.searchsorted(xint, xs, side="right")
        inside[iy] = (right % 2) == 1
    return inside


def rasterize(d: PolygonDomain, h: float, max_cells: int = MAX_CELLS) -> GridField:
    if not (h > 0 and math.isfinite(h)):
        raise PreconditionViolated("grid spacing must be positive", h=h)
    x0, x1, y0, y1 = d.bbox
    nx = int(math.ceil((x1 - x0) / h - 1e-9)) + 2
    ny = int(math.ceil((y1 - y0) / h - 1e-9)) + 2
    if nx * ny > max_cells:
        raise GridTooLarge(f"{nx}x{ny} cells exceed budget {max_cells}", h=h, cells=nx * ny)
    origin = Point(x0 - h, y0 - h)
    xs = origin.x + (np.arange(nx) + 0.5) * h
    ys = origin.y + (np.arange(ny) + 0.5) * h
    inside = _scanline_inside(d, xs, ys)
    bdist = np.zeros((ny, nx))
    rows = max(1, 200_000 // nx)
    for r0 in range(0, ny, rows):
        gx, gy = np.meshgrid(xs, ys[r0:r0 + rows])
        bdist[r0:r0 + rows] = d.boundary_distances(np.stack([gx, gy], axis=-1))
    inside &= bdist > 0.0
    return GridField(d, origin, h, nx, ny, inside, bdist)


@dataclass
class ComponentLabeling:
    excluded: Optional[Square]
    labels: np.ndarray  # 0 = not part of the region
    count: int
    h: float
    grid: GridField = field(repr=False)

    def label_at(self, p, reach: int = 1) -> int:
        cell = self.grid.nearest_inside_cell(p, self.labels > 0, reach=reach)
        return 0 if cell is None else int(self.labels[cell])


def label_region(mask: np.ndarray, eight: bool = False) -> tuple[np.ndarray, int]:
    """Connected components in row-major first-cell order (scipy's raster-scan labelling)."""
    labels, n = ndimage.label(mask, structure=EIGHT if eight else FOUR)
    return labels, int(n)


def components_minus_square(g: GridField, q: Optional[Square], extra_mask: Optional[np.ndarray] = None) -> ComponentLabeling:
    mask = g.inside.copy()
    if q is not None:
        mask &= ~g.square_mask(q, closed=True)
    if extra_mask is not None:
        mask &= extra_mask
    labels, n = label_region(mask)
    return ComponentLabeling(q, labels, n, g.h, g)


# -- boundary arcs -------------------------------------------------------------

class Perimeter:
    """Clockwise arclength parametrisation of a square boundary.

    The absolute parameter starts at the top-left corner and runs along the
    top side, down the right side, back along the bottom and up the left side.
    The relative parameter is measured clockwise from ``base``.
    """

    def __init__(self, s: Square, base: Optional[Point] = None):
        self.square = s
        self.length = 8.0 * s.radius
        self.base_abs = 0.0 if base is None else self.absolute(base)

    def absolute(self, p) -> float:
        x0, x1, y0, y1 = self.square.bounds
        r2 = 2.0 * self.square.radius
        px, py = p[0], p[1]
        cands = [
            (abs(py - y1), min(max(px - x0, 0.0), r2)),
            (abs(px - x1), r2 + min(max(y1 - py, 0.0), r2)),
            (abs(py - y0), 2 * r2 + min(max(x1 - px, 0.0), r2)),
            (abs(px - x0), 3 * r2 + min(max(py - y0, 0.0), r2)),
        ]
        a = min(cands)[1]
        return 0.0 if a >= self.length else a

    def point_abs(self, a: float) -> Point:
        x0, x1, y0, y1 = self.square.bounds
        r2 = 2.0 * self.square.radius
        a = a % self.length
        if a <= r2:
            return Point(x0 + a, y1)
        if a <= 2 * r2:
            return Point(x1, y1 - (a - r2))
        if a <= 3 * r2:
            return Point(x1 - (a - 2 * r2), y0)
        return Point(x0, y0 + (a - 3 * r2))

    def relative(self, p) -> float:
        return (self.absolute(p) - self.base_abs) % self.length

    def point(self, s: float) -> Point:
        return self.point_abs(self.base_abs + s)

    def corner_params(self) -> list[float]:
        r2 = 2.0 * self.square.radius
        return sorted(((k * r2 - self.base_abs) % self.length) for k in range(4))


@dataclass
class BoundaryArc:
    """Maximal open arcs of ``∂host ∩ Ω``, as clockwise parameter intervals from ``base``."""

    host: Square
    base: Point
    intervals: list[tuple[float, float]]

    @property
    def perimeter(self) -> Perimeter:
        return Perimeter(self.host, self.base)

    def __len__(self) -> int:
        return len(self.intervals)

    def endpoints(self) -> list[tuple[Point, Point]]:
        per = self.perimeter
        return [(per.point(b), per.point(e)) for b, e in self.intervals]

    def index_of(self, s: float) -> Optional[int]:
        for k, (b, e) in enumerate(self.intervals):
            if b < s < e:
                return k
        return None


def _side_crossings(d: PolygonDomain, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Parameters in [0, 1] where polygon edges properly cross the segment [a, b]."""
    e = d.edges
    p, r = a, b - a
    q = e[:, :2]
    s = e[:, 2:] - e[:, :2]
    denom = r[0] * s[:, 1] - r[1] * s[:, 0]
    ok = np.abs(denom) > 1e-300
    qp = q - p
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0]) / denom
        u = (qp[:, 0] * r[1] - qp[:, 1] * r[0]) / denom
    hit = ok & (t >= 0) & (t <= 1) & (u >= 0) & (u <= 1)
    return t[hit]


def boundary_contact_point(d: PolygonDomain, s: Square) -> Optional[Point]:
    """First point of ``∂s ∩ ∂Ω`` (within tolerance) in clockwise order from the top-left corner."""
    per = Perimeter(s)
    params = _breakpoints(d, s, per)
    bd = d.boundary_distances(np.array([per.point_abs(a) for a in params]))
    hits = np.nonzero(bd <= d.tol)[0]
    if len(hits):
        return per.point_abs(params[hits[0]])
    return None


def _breakpoints(d: PolygonDomain, s: Square, per: Perimeter) -> list[float]:
    """Absolute perimeter parameters at which membership of ``∂s`` in Ω may change."""
    tol = d.tol
    r2 = 2.0 * s.radius
    params = [0.0, r2, 2 * r2, 3 * r2]
    corners = s.corners()
    for k in range(4):
        a = np.array(corners[k])
        b = np.array(corners[(k + 1) % 4])
        params.extend(k * r2 + t * r2 for t in _side_crossings(d, a, b))
    v = d.vertices
    dev = np.abs(np.maximum(np.abs(v[:, 0] - s.center.x), np.abs(v[:, 1] - s.center.y)) - s.radius)
    for p in v[dev <= tol]:
        params.append(per.absolute(p))
    return sorted(set(float(x) % per.length for x in params))


def boundary_arcs(d: PolygonDomain, s: Square, base=None) -> BoundaryArc:
    tol = d.tol
    if d.boundary_distance(s.center) < s.radius - tol:
        raise PreconditionViolated("square is not contained in the domain")
    if base is None:
        base = boundary_contact_point(d, s)
        if base is None:
            raise NoBoundaryContact("square boundary misses the domain boundary")
    base = as_point(base)
    if abs(max(abs(base.x - s.center.x), abs(base.y - s.center.y)) - s.radius) > tol or d.boundary_distance(base) > tol:
        if boundary_contact_point(d, s) is None:
            raise NoBoundaryContact("square boundary misses the domain boundary")
        raise BasePointInvalid("base must lie on both boundaries", base=list(base))
    per = Perimeter(s, base)
    merged: list[float] = []
    for x in sorted({(a - per.base_abs) % per.length for a in _breakpoints(d, s, per)} | {0.0}):
        if x < per.length - tol and (not merged or x - merged[-1] > tol):
            merged.append(x)
    merged.append(per.length)
    pts = np.array([per.point(x) for x in merged])
    on_boundary = d.boundary_distances(pts) <= tol
    mids = np.array([per.point(0.5 * (a + b)) for a, b in zip(merged[:-1], merged[1:])])
    mid_in = d.contains_points(mids) & (d.boundary_distances(mids) > tol)
    intervals: list[tuple[float, float]] = []
    start = None
    for k, inside in enumerate(mid_in):
        if inside:
            if start is None:
                start = merged[k]
            if on_boundary[k + 1]:
                intervals.append((start, merged[k + 1]))
                start = None
        elif start is not None:
            intervals.append((start, merged[k]))
            start = None
    if start is not None:
        intervals.append((start, merged[-1]))
    return BoundaryArc(s, base, intervals)
