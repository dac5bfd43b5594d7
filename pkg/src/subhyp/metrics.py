"""Subhyperbolic length and distance, the ratio ``s_alpha`` and related diagnostics.

The weight along a curve is ``dist(u, boundary) ** (alpha - 1)`` integrated
against Euclidean arclength.  Distances between points come from Dijkstra on
the 8-neighbour graph of inside cells, so they are upper estimates that
converge as the grid is refined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.ndimage import label
from scipy.sparse.csgraph import dijkstra

from .domain import FOUR, GridField, PolygonDomain
from .errors import BadParams, Disconnected, PathLeavesDomain, PointOutside
from .geom import Point, as_point

NEIGHBOUR_STEPS = ((0, 1), (1, 0), (1, 1), (1, -1))
TARGETS_PER_SOURCE = 12
QUAD_FRACTION = 0.25


def _check_alpha(alpha: float, allow_zero: bool = True) -> float:
    alpha = float(alpha)
    lo_ok = alpha >= 0 if allow_zero else alpha > 0
    if not (lo_ok and alpha <= 1):
        raise BadParams("alpha must lie in (0, 1]", alpha=alpha)
    return alpha


# -- line integral ------------------------------------------------------------

def len_alpha(d: PolygonDomain, path, alpha: float, h_quad: Optional[float] = None,
              fraction: float = QUAD_FRACTION, max_rounds: int = 60) -> float:
    """Weighted length of a polyline by composite midpoint quadrature.

    Pieces are split until each is no longer than ``h_quad`` and no longer than
    ``fraction`` times the smallest boundary distance sampled on it.
    """
    alpha = _check_alpha(alpha)
    pts = np.asarray(path, dtype=float).reshape(-1, 2)
    if len(pts) < 2:
        if len(pts) and not d.contains(pts[0]):
            raise PathLeavesDomain("path vertex outside the domain", point=pts[0].tolist())
        return 0.0
    if not d.contains_points(pts).all():
        raise PathLeavesDomain("path vertex outside the domain")
    h_quad = d.default_h() if h_quad is None else float(h_quad)
    a, b = pts[:-1], pts[1:]
    keep = np.linalg.norm(b - a, axis=1) > 0
    a, b = a[keep], b[keep]
    total = 0.0
    for _ in range(max_rounds):
        if not len(a):
            return total
        mid = 0.5 * (a + b)
        length = np.linalg.norm(b - a, axis=1)
        probe = np.concatenate([a, mid, b])
        dist = d.boundary_distances(probe).reshape(3, -1)
        if not d.contains_points(mid).all():
            raise PathLeavesDomain("path edge leaves the domain")
        ok = (length <= h_quad) & (length <= fraction * dist.min(axis=0))
        total += float(np.sum(length[ok] * dist[1, ok] ** (alpha - 1.0)))
        split = ~ok
        a, b, mid = a[split], b[split], mid[split]
        a, b = np.concatenate([a, mid]), np.concatenate([mid, b])
    raise PathLeavesDomain("path approaches the boundary too closely for quadrature")


# -- grid geodesics -----------------------------------------------------------

@dataclass
class GeodesicResult:
    value: float
    path: np.ndarray
    alpha: float
    h: float
    refined_value: Optional[float] = None

    def to_dict(self) -> dict:
        return {"value": self.value, "alpha": self.alpha, "h": self.h, "refined_value": self.refined_value,
                "path": np.round(self.path, 12).tolist()}


class WeightedGraph:
    """Symmetric 8-neighbour graph on the inside cells of a grid."""

    def __init__(self, g: GridField, alpha: float):
        self.grid = g
        self.alpha = alpha
        inside = g.inside
        ny, nx = inside.shape
        self.index = -np.ones(inside.shape, dtype=np.int64)
        self.n = int(inside.sum())
        self.index[inside] = np.arange(self.n)
        self.cells = np.argwhere(inside)
        weight = np.zeros(inside.shape)
        weight[inside] = g.bdist[inside] ** (alpha - 1.0)
        rows, cols, vals = [], [], []
        for dy, dx in NEIGHBOUR_STEPS:
            src = (slice(0, ny - dy), slice(max(0, -dx), nx - max(0, dx)))
            dst = (slice(dy, ny), slice(max(0, dx), nx + min(0, dx)))
            both = inside[src] & inside[dst]
            step = g.h * math.hypot(dx, dy)
            rows.append(self.index[src][both])
            cols.append(self.index[dst][both])
            vals.append(step * 0.5 * (weight[src][both] + weight[dst][both]))
        r, c, v = (np.concatenate(x) for x in (rows, cols, vals))
        self.matrix = sparse.csr_matrix((np.concatenate([v, v]), (np.concatenate([r, c]), np.concatenate([c, r]))),
                                        shape=(self.n, self.n))

    def node(self, cell: tuple[int, int]) -> int:
        return int(self.index[cell])

    def run(self, sources: Sequence[int], predecessors: bool = False):
        return dijkstra(self.matrix, directed=False, indices=list(sources), return_predecessors=predecessors)


def weighted_graph(g: GridField, alpha: float) -> WeightedGraph:
    cached = getattr(g, "_weighted_graph", None)
    if cached is None or cached.alpha != alpha:
        cached = WeightedGraph(g, alpha)
        g._weighted_graph = cached
    return cached


def _cell_for(d: PolygonDomain, g: GridField, p: Point) -> tuple[int, int]:
    if not d.contains(p):
        raise PointOutside("point is not in the domain", point=list(p))
    cell = g.nearest_inside_cell(p, reach=2)
    if cell is None:
        raise PointOutside("point has no inside cell at this resolution", point=list(p), h=g.h)
    return cell


def d_alpha(d: PolygonDomain, g: GridField, x, y, alpha: float, refine: bool = False) -> GeodesicResult:
    alpha = _check_alpha(alpha)
    x, y = as_point(x), as_point(y)
    cx, cy = _cell_for(d, g, x), _cell_for(d, g, y)
    graph = weighted_graph(g, alpha)
    src, dst = graph.node(cx), graph.node(cy)
    dist, pred = graph.run([src], predecessors=True)
    value = float(dist[0, dst])
    if not math.isfinite(value):
        raise Disconnected("points lie in different grid components", h=g.h)
    chain = [dst]
    while chain[-1] != src:
        chain.append(int(pred[0, chain[-1]]))
    path = g.centers(graph.cells[chain[::-1]])
    result = GeodesicResult(value, path, alpha, g.h)
    if refine:
        result.refined_value = d_alpha(d, d.grid(g.h / 2), x, y, alpha).value
    return result


def d_alpha_many(d: PolygonDomain, g: GridField, x, targets, alpha: float) -> np.ndarray:
    """Grid distances from ``x`` to each target (``inf`` where disconnected)."""
    alpha = _check_alpha(alpha)
    graph = weighted_graph(g, alpha)
    src = graph.node(_cell_for(d, g, as_point(x)))
    nodes = [graph.node(_cell_for(d, g, as_point(t))) for t in targets]
    return graph.run([src])[0, nodes]


# -- pair sampling ------------------------------------------------------------

BANDS = (2, 4, 8)


class PairSampler:
    """Deterministic stream of ``(source cell, [target cells])`` groups.

    Sources cycle through boundary-hugging cells at depth 2h, 4h, 8h and a
    uniform interior cell.  Boundary sources are stratified by polygon edge
    (a seeded permutation visits every edge before repeating one) so that short
    edges are sampled as often as long ones.  Each source gets ray-cast
    partners across the complement, uniform interior targets and
    boundary-hugging targets.  Group ``i`` depends only on ``(seed, i)``.
    """

    def __init__(self, d: PolygonDomain, g: GridField, seed: int):
        self.d, self.g, self.seed = d, g, int(seed)
        self.inside_cells = np.argwhere(g.inside)
        self.edge_order = np.random.default_rng([self.seed, 0]).permutation(len(d.edges))

    def _rng(self, i: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, 1, i])

    def _uniform(self, rng: np.random.Generator, n: int) -> list[tuple[int, int]]:
        picks = rng.integers(0, len(self.inside_cells), size=n)
        return [tuple(int(v) for v in self.inside_cells[k]) for k in picks]

    def _hugging(self, rng: np.random.Generator, edge: int, depth: float) -> Optional[tuple[int, int]]:
        x0, y0, x1, y1 = self.d.edges[edge]
        t = rng.random()
        length = math.hypot(x1 - x0, y1 - y0)
        nx_, ny_ = -(y1 - y0) / length, (x1 - x0) / length  # inward for CCW vertices
        p = (x0 + t * (x1 - x0) + depth * nx_, y0 + t * (y1 - y0) + depth * ny_)
        return self.g.nearest_inside_cell(p, reach=2)

    def ray_partners(self, cell: tuple[int, int]) -> list[tuple[int, int]]:
        """Cells across the complement along the four axis rays, at the source's depth."""
        g = self.g
        iy, ix = cell
        depth = max(1, int(round(g.bdist[iy, ix] / g.h)))
        out = []
        for axis, sign in ((1, 1), (1, -1), (0, 1), (0, -1)):
            line = g.inside[iy, :] if axis == 1 else g.inside[:, ix]
            start = ix if axis == 1 else iy
            run = line[start::sign] if sign > 0 else line[start::-1]
            outside = np.flatnonzero(~run)
            if not len(outside):
                continue
            back = np.flatnonzero(run[outside[0]:])
            if not len(back):
                continue
            enter = outside[0] + back[0]
            stop = np.flatnonzero(~run[enter:])
            span = stop[0] if len(stop) else len(run) - enter
            step = enter + min(depth, span) - 1
            pos = start + sign * step
            out.append((iy, int(pos)) if axis == 1 else (int(pos), ix))
        return out

    def group(self, i: int) -> tuple[tuple[int, int], list[tuple[int, int]]]:
        rng = self._rng(i)
        g = self.g
        kind = i % (len(BANDS) + 1)
        source = None
        if kind < len(BANDS):
            edge = int(self.edge_order[(i // (len(BANDS) + 1) * len(BANDS) + kind) % len(self.edge_order)])
            source = self._hugging(rng, edge, BANDS[kind] * g.h)
        if source is None:
            source = self._uniform(rng, 1)[0]
        targets = self.ray_partners(source)
        quota = TARGETS_PER_SOURCE - len(targets)
        n_hug = quota // 2
        edges = rng.integers(0, len(self.d.edges), size=n_hug)
        bands = rng.integers(0, len(BANDS), size=n_hug)
        for e, b in zip(edges, bands):
            c = self._hugging(rng, int(e), BANDS[b] * g.h)
            if c is not None:
                targets.append(c)
        targets += self._uniform(rng, TARGETS_PER_SOURCE - len(targets))
        return source, targets


# -- s_alpha ------------------------------------------------------------------

@dataclass
class SAlphaEstimate:
    alpha: float
    value: float
    argmax_pair: Optional[tuple[Point, Point]]
    samples: int
    h: float

    def to_dict(self) -> dict:
        pair = None if self.argmax_pair is None else [list(self.argmax_pair[0]), list(self.argmax_pair[1])]
        return {"alpha": self.alpha, "value": self.value, "argmax_pair": pair, "samples": self.samples, "h": self.h}


def _probe_groups(d: PolygonDomain, g: GridField, probes) -> list[tuple[tuple[int, int], list[tuple[int, int]]]]:
    cells = [_cell_for(d, g, as_point(p)) for p in probes]
    return [(cells[i], cells[i + 1:]) for i in range(len(cells) - 1)]


def s_alpha_estimate(d: PolygonDomain, g: GridField, alpha: float, pair_budget: int, seed: int = 0,
                     probes: Sequence = ()) -> SAlphaEstimate:
    """Largest sampled ``d_alpha(x, y) / |x - y|**alpha`` (uniform norm in the denominator).

    All probe pairs are evaluated in addition to the first ``pair_budget``
    pairs of the sampler stream, so the value never decreases with the budget.
    """
    alpha = _check_alpha(alpha)
    if pair_budget < 1:
        raise BadParams("pair_budget must be at least 1", pair_budget=pair_budget)
    sampler = PairSampler(d, g, seed)
    groups = _probe_groups(d, g, probes) if len(probes) > 1 else []
    remaining, i = int(pair_budget), 0
    while remaining > 0:
        source, targets = sampler.group(i)
        groups.append((source, targets[:remaining]))
        remaining -= len(targets[:remaining])
        i += 1
    graph = weighted_graph(g, alpha)
    best, best_pair, count = 0.0, None, 0
    for source, targets in groups:
        if not targets:
            continue
        dist = graph.run([graph.node(source)])[0]
        a = g.center(*source)
        for t in targets:
            count += 1
            b = g.center(*t)
            sep = max(abs(a.x - b.x), abs(a.y - b.y))
            value = float(dist[graph.node(t)])
            if sep == 0 or not math.isfinite(value):
                continue
            ratio = value / sep ** alpha
            if ratio > best:
                best, best_pair = ratio, (a, b)
    return SAlphaEstimate(alpha, best, best_pair, count, g.h)


# -- arc diameter -------------------------------------------------------------

def _lens_connected(g: GridField, a: tuple[int, int], b: tuple[int, int], radius: float) -> bool:
    pa, pb = g.center(*a), g.center(*b)
    box = (max(pa.x, pb.x) - radius, min(pa.x, pb.x) + radius, max(pa.y, pb.y) - radius, min(pa.y, pb.y) + radius)
    if box[0] >= box[1] or box[2] >= box[3]:
        return False
    win = g.index_window(box)
    xs, ys = g.xs[win[1]], g.ys[win[0]]
    cx = (xs > box[0]) & (xs < box[1])
    cy = (ys > box[2]) & (ys < box[3])
    mask = g.inside[win] & np.outer(cy, cx)
    la = (a[0] - win[0].start, a[1] - win[1].start)
    lb = (b[0] - win[0].start, b[1] - win[1].start)
    for r, c in (la, lb):
        if not (0 <= r < mask.shape[0] and 0 <= c < mask.shape[1]) or not mask[r, c]:
            return False
    labels, _ = label(mask, FOUR)
    return labels[la] == labels[lb]


def lens_radius(g: GridField, a: tuple[int, int], b: tuple[int, int], rel_tol: float = 1e-3) -> float:
    """Least ``R`` with ``a`` and ``b`` joined inside ``Omega ∩ S(a,R) ∩ S(b,R)`` on the grid."""
    pa, pb = g.center(*a), g.center(*b)
    sep = max(abs(pa.x - pb.x), abs(pa.y - pb.y))
    lo = sep
    x0, x1, y0, y1 = g.domain.bbox
    cap = 2 * max(x1 - x0, y1 - y0) + 4 * g.h
    hi = max(2 * sep, g.h)
    while not _lens_connected(g, a, b, hi):
        if hi > cap:
            raise Disconnected("cells are not grid-connected", h=g.h)
        lo, hi = hi, 2 * hi
    while hi - lo > rel_tol * max(sep, g.h):
        mid = 0.5 * (lo + hi)
        if _lens_connected(g, a, b, mid):
            hi = mid
        else:
            lo = mid
    return hi


def arc_diameter_estimate(d: PolygonDomain, g: GridField, pair_budget: int, seed: int = 0,
                          probes: Sequence = ()) -> float:
    """Largest sampled lens radius over separation (an estimate of the arc-diameter constant)."""
    if pair_budget < 1:
        raise BadParams("pair_budget must be at least 1", pair_budget=pair_budget)
    sampler = PairSampler(d, g, seed)
    pairs = [(s, t) for s, ts in (_probe_groups(d, g, probes) if len(probes) > 1 else []) for t in ts]
    i = 0
    budget = len(pairs) + int(pair_budget)
    while len(pairs) < budget:
        source, targets = sampler.group(i)
        pairs += [(source, t) for t in targets][:budget - len(pairs)]
        i += 1
    best = 0.0
    for a, b in pairs:
        pa, pb = g.center(*a), g.center(*b)
        sep = max(abs(pa.x - pb.x), abs(pa.y - pb.y))
        if sep == 0:
            continue
        best = max(best, lens_radius(g, a, b) / sep)
    return best


# -- classification -----------------------------------------------------------

EXTENSION_LIKELY = "extension_likely"
NON_EXTENSION_SUSPECTED = "non_extension_suspected"
INCONCLUSIVE = "inconclusive"
STABLE_CHANGE = 0.10
GROWTH_CHANGE = 0.50


@dataclass
class Verdict:
    p: float
    m: int
    alpha: float
    s_alpha_estimate: SAlphaEstimate
    decision: str
    growth_trace: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"p": self.p, "m": self.m, "alpha": self.alpha, "decision": self.decision,
                "s_alpha_estimate": self.s_alpha_estimate.to_dict(), "growth_trace": self.growth_trace}


def alpha_from_p(p: float) -> float:
    if not p > 2:
        raise BadParams("p must exceed 2", p=p)
    return (p - 2.0) / (p - 1.0)


def decide(base: float, refined: float, doubled: float) -> str:
    """Stabilisation rule on the two axes (grid refinement and budget doubling)."""
    if base <= 0:
        return INCONCLUSIVE
    ref = (refined - base) / base
    bud = (doubled - base) / base
    if abs(ref) < STABLE_CHANGE and abs(bud) < STABLE_CHANGE:
        return EXTENSION_LIKELY
    if ref >= GROWTH_CHANGE and bud >= GROWTH_CHANGE:
        return NON_EXTENSION_SUSPECTED
    return INCONCLUSIVE


def classify_extension(d: PolygonDomain, g: GridField, p: float, m: int, budget: int, seed: int = 0,
                       probes: Sequence = ()) -> Verdict:
    if m < 1:
        raise BadParams("m must be at least 1", m=m)
    alpha = alpha_from_p(p)
    base = s_alpha_estimate(d, g, alpha, budget, seed, probes)
    fine = s_alpha_estimate(d, d.grid(g.h / 2), alpha, budget, seed, probes)
    more = s_alpha_estimate(d, g, alpha, 2 * budget, seed, probes)
    trace = [{"h": e.h, "budget": b, "value": e.value} for e, b in ((base, budget), (fine, budget), (more, 2 * budget))]
    return Verdict(float(p), int(m), alpha, base, decide(base.value, fine.value, more.value), trace)
