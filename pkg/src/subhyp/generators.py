"""Deterministic test-domain families."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
from scipy import ndimage
from shapely import box, unary_union
from shapely.geometry import LineString, Polygon
from shapely.geometry.polygon import orient

from .domain import PolygonDomain, load_domain
from .errors import BadParams

U_CORRIDOR = [(0, 0), (5, 0), (5, 5), (4, 5), (4, 1), (1, 1), (1, 5), (0, 5)]


@dataclass(frozen=True)
class DomainSpec:
    kind: str
    params: dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None


def _canonical(poly: Polygon) -> list[tuple[float, float]]:
    """CCW vertex list without collinear points, starting at the lowest-leftmost vertex."""
    if poly.geom_type != "Polygon" or len(poly.interiors):
        raise BadParams("parameters produce a disconnected or holed region")
    poly = orient(poly.simplify(0), sign=1.0)
    pts = list(poly.exterior.coords)[:-1]
    start = min(range(len(pts)), key=lambda k: (pts[k][1], pts[k][0]))
    return [(float(x), float(y)) for x, y in pts[start:] + pts[:start]]


def square(side: float = 1.0) -> PolygonDomain:
    if not side > 0:
        raise BadParams("side must be positive")
    return load_domain([(0, 0), (side, 0), (side, side), (0, side)])


def ngon(n: int = 64, radius: float = 1.0) -> PolygonDomain:
    if n < 3 or not radius > 0:
        raise BadParams("need n >= 3 and positive radius")
    t = 2 * math.pi * np.arange(n) / n
    return load_domain(np.column_stack([radius * np.cos(t), radius * np.sin(t)]))


def u_corridor() -> PolygonDomain:
    return load_domain(U_CORRIDOR)


def staircase(n: int = 6, omega: float = 0.05) -> PolygonDomain:
    """``n`` unit cells along the diagonal; consecutive cells share a corner widened
    into a square opening of side ``omega``."""
    if n < 1 or not 0 < omega < 1:
        raise BadParams("need n >= 1 and 0 < omega < 1")
    parts = [box(i, i, i + 1, i + 1) for i in range(n)]
    h = omega / 2
    parts += [box(i - h, i - h, i + h, i + h) for i in range(1, n)]
    return load_domain(_canonical(unary_union(parts)))


def comb(n: int = 6, depth: float = 0.9, ratio: float = 0.5) -> PolygonDomain:
    """Unit square with ``n`` teeth hanging from the top edge.

    Tooth ``i`` (1..n) starts at ``x = ratio**i`` and covers half of the gap to
    the previous position ``ratio**(i-1)``; every tooth reaches ``depth`` down.
    """
    if n < 1 or not 0 < depth < 1 or not 0 < ratio < 1:
        raise BadParams("need n >= 1, 0 < depth < 1, 0 < ratio < 1")
    pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]
    bottom = 1.0 - depth
    for i in range(1, n + 1):
        left = ratio ** i
        right = left + 0.5 * (ratio ** (i - 1) - left)
        pts += [(right, 1.0), (right, bottom), (left, bottom), (left, 1.0)]
    pts.append((0.0, 1.0))
    return load_domain(pts)


def spiral(turns: float = 2, gap: float = 1.0) -> PolygonDomain:
    """Rectilinear spiral corridor of width ``gap`` separated by walls of width ``gap``."""
    segs = int(round(4 * turns))
    if segs < 1 or not gap > 0:
        raise BadParams("need turns >= 0.25 and positive gap")
    dirs = [(1, 0), (0, 1), (-1, 0), (0, -1)]
    x, y = 0.0, 0.0
    line = [(x, y)]
    for k in range(segs):
        length = 2 * gap * (k // 2 + 1)
        dx, dy = dirs[k % 4]
        x, y = x + dx * length, y + dy * length
        line.append((x, y))
    poly = LineString(line).buffer(gap / 2, cap_style="flat", join_style="mitre")
    return load_domain(_canonical(poly))


def _polyomino(cells: int, rng: np.random.Generator) -> np.ndarray:
    size = 2 * cells + 3
    grid = np.zeros((size, size), dtype=bool)
    mid = size // 2
    grid[mid, mid] = True
    count = 1
    steps = [(0, 1), (1, 0), (0, -1), (-1, 0)]
    while count < cells:
        occupied = np.argwhere(grid)
        frontier = sorted({(int(r + dr), int(c + dc)) for r, c in occupied for dr, dc in steps
                           if not grid[r + dr, c + dc]})
        order = rng.permutation(len(frontier))
        for k in order:
            r, c = frontier[k]
            grid[r, c] = True
            if _simple_polyomino(grid, r, c):
                count += 1
                break
            grid[r, c] = False
        else:
            break
    return grid


def _simple_polyomino(grid: np.ndarray, r: int, c: int) -> bool:
    # No cells meeting only at a corner: the outline would touch itself.
    win = grid[r - 1:r + 2, c - 1:c + 2].astype(int)
    for dr in (0, 1):
        for dc in (0, 1):
            q = win[dr:dr + 2, dc:dc + 2]
            if (q[0, 0] and q[1, 1] and not q[0, 1] and not q[1, 0]) or \
               (q[0, 1] and q[1, 0] and not q[0, 0] and not q[1, 1]):
                return False
    _, holes = ndimage.label(~grid)
    return holes == 1


def random_rectilinear(cells: int = 20, seed: int = 0) -> PolygonDomain:
    """Simply connected polyomino of ``cells`` unit cells grown from a seeded RNG."""
    if cells < 1:
        raise BadParams("need at least one cell")
    grid = _polyomino(cells, np.random.default_rng(seed))
    rs, cs = np.nonzero(grid)
    r0, c0 = rs.min(), cs.min()
    poly = unary_union([box(c - c0, r - r0, c - c0 + 1, r - r0 + 1) for r, c in zip(rs, cs)])
    return load_domain(_canonical(poly))


GENERATORS = {
    "square": square,
    "ngon": ngon,
    "u_corridor": u_corridor,
    "staircase": staircase,
    "comb": comb,
    "spiral": spiral,
    "random_rectilinear": random_rectilinear,
}


def generate(spec: DomainSpec) -> PolygonDomain:
    fn = GENERATORS.get(spec.kind)
    if fn is None:
        raise BadParams(f"unknown domain kind {spec.kind!r}", known=sorted(GENERATORS))
    params = dict(spec.params)
    if spec.kind == "random_rectilinear" and spec.seed is not None:
        params.setdefault("seed", spec.seed)
    try:
        return fn(**params)
    except TypeError as exc:
        raise BadParams(str(exc)) from None
