"""Axis pseudometrics on the narrow path and the growing functions ``h_m``.

The weight is ``(diam Q_i) ** (1 / (1 - p))`` on each open square ``Q_i`` and
zero on the connectors.  ``phi_j(z)`` is the cheapest way to reach ``z`` from
``x`` when only motion along axis ``j`` is charged; ``h_m`` integrates
``phi_1 (z_1 - u_1)^(m-2) du_1 + phi_2 (z_2 - u_2)^(m-2) du_2`` along an
axis-parallel path from ``x`` to ``z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import breadth_first_order, connected_components, dijkstra

from .domain import MAX_CELLS
from .errors import PathUnavailable, PreconditionViolated, SourceOutsideNarrowPath
from .geom import Point, Segment, Square, as_point, shape_box
from .metrics import alpha_from_p
from .narrow_path import NarrowChain
from .wide_path import Report

MAX_DIAMETER_RATIO = 1e4
CELLS_PER_MIN_SQUARE = 16


@dataclass
class NarrowWeight:
    chain: NarrowChain
    p: float
    values: np.ndarray

    def at(self, pts) -> np.ndarray:
        """Weight at each point: the square's value inside an open ``Q_i``, zero elsewhere."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        out = np.zeros(len(pts))
        for q, w in zip(self.chain.squares, self.values):
            out[q.contains_points(pts)] = w
        return out

    @property
    def max(self) -> float:
        return float(self.values.max()) if len(self.values) else 0.0

    def replaced(self, index: int, value: float) -> "NarrowWeight":
        values = self.values.copy()
        values[index] = value
        return NarrowWeight(self.chain, self.p, values)


def narrow_weight(chain: NarrowChain, p: float) -> NarrowWeight:
    if not p > 2:
        raise PreconditionViolated("p must exceed 2", p=p)
    diams = np.array([q.diam for q in chain.squares])
    return NarrowWeight(chain, float(p), diams ** (1.0 / (1.0 - p)))


def _grid_lines(lo: float, hi: float, h: float, sides: np.ndarray) -> np.ndarray:
    """A uniform lattice of step ``h`` padded by one cell, merged with every box side."""
    n = int(math.ceil((hi - lo) / h))
    lattice = lo - h + h * np.arange(n + 3)
    lines = np.unique(np.concatenate([lattice, sides]))
    # Drop round-off slivers only; genuine sub-cell gaps between sides are what keep necks open.
    keep = np.concatenate([[True], np.diff(lines) > 1e-9 * h])
    return lines[keep]


class NarrowGrid:
    """Raster of ``N`` with per-cell weights and the 4-neighbour graph.

    Grid lines are a uniform lattice of step ``h`` plus every side of every
    square and connector box, so each piece of ``N`` owns whole cells and
    consecutive squares stay adjacent however thin the neck between them.
    Cells are uniform away from those sides.
    """

    def __init__(self, chain: NarrowChain, weight: NarrowWeight, h: Optional[float] = None,
                 max_cells: int = MAX_CELLS):
        diams = [q.diam for q in chain.squares]
        if max(diams) / min(diams) > MAX_DIAMETER_RATIO:
            raise PreconditionViolated("narrow chain diameter ratio too extreme to resolve",
                                       ratio=max(diams) / min(diams))
        boxes = np.array([q.bounds for q in chain.squares]
                         + [shape_box(c) for c in chain.connectors])
        x0, x1 = boxes[:, 0].min(), boxes[:, 1].max()
        y0, y1 = boxes[:, 2].min(), boxes[:, 3].max()
        sides_x, sides_y = boxes[:, :2].ravel(), boxes[:, 2:].ravel()
        auto = h is None
        if auto:
            h = min(diams) / CELLS_PER_MIN_SQUARE
            h = max(h, math.sqrt((x1 - x0 + 2 * h) * (y1 - y0 + 2 * h) / max_cells) * 1.001)
        while True:
            xl = _grid_lines(x0, x1, h, sides_x)
            yl = _grid_lines(y0, y1, h, sides_y)
            if (len(xl) - 1) * (len(yl) - 1) <= max_cells:
                break
            if not auto:
                raise PreconditionViolated("narrow grid exceeds the cell budget",
                                           cells=(len(xl) - 1) * (len(yl) - 1))
            h *= 1.01
        self.h = float(h)
        self.chain, self.weight = chain, weight
        self.x_lines, self.y_lines = xl, yl
        self.xs = 0.5 * (xl[:-1] + xl[1:])
        self.ys = 0.5 * (yl[:-1] + yl[1:])
        self.dx, self.dy = np.diff(xl), np.diff(yl)
        self.nx, self.ny = len(self.xs), len(self.ys)
        gx, gy = np.meshgrid(self.xs, self.ys)
        mask = np.zeros((self.ny, self.nx), dtype=bool)
        cell_weight = np.zeros((self.ny, self.nx))
        for q, w in zip(chain.squares, weight.values):
            inside = (gx > q.bounds[0]) & (gx < q.bounds[1]) & (gy > q.bounds[2]) & (gy < q.bounds[3])
            mask |= inside
            cell_weight[inside] = w
        for c in chain.connectors:
            if isinstance(c, Square):
                b = c.bounds
                mask |= (gx > b[0]) & (gx < b[1]) & (gy > b[2]) & (gy < b[3])
            else:
                mask |= self._on_open_segment(gx, gy, c)
        self.mask = mask
        self.cell_weight = cell_weight
        self.index = -np.ones(mask.shape, dtype=np.int64)
        self.n = int(mask.sum())
        self.index[mask] = np.arange(self.n)
        self.cells = np.argwhere(mask)

    def _on_open_segment(self, gx: np.ndarray, gy: np.ndarray, seg: Segment) -> np.ndarray:
        tol = 1e-12 * max(1.0, abs(seg.a.x), abs(seg.a.y))
        lo_x, hi_x = sorted((seg.a.x, seg.b.x))
        lo_y, hi_y = sorted((seg.a.y, seg.b.y))
        if hi_x - lo_x >= hi_y - lo_y:
            return (np.abs(gy - lo_y) <= tol) & (gx > lo_x) & (gx < hi_x)
        return (np.abs(gx - lo_x) <= tol) & (gy > lo_y) & (gy < hi_y)

    @property
    def shape(self) -> tuple[int, int]:
        return self.ny, self.nx

    def cell_of(self, p) -> tuple[int, int]:
        ix = int(np.searchsorted(self.x_lines, p[0], side="right")) - 1
        iy = int(np.searchsorted(self.y_lines, p[1], side="right")) - 1
        return min(max(iy, 0), self.ny - 1), min(max(ix, 0), self.nx - 1)

    def spacing(self, axis: int) -> np.ndarray:
        """Centre-to-centre distances between neighbouring cells along ``axis``."""
        return np.diff(self.xs if axis == 1 else self.ys)

    def uniform_around(self, cell, reach: int = 1) -> bool:
        """Whether the cells within ``reach`` of ``cell`` all have width ``h`` in both directions."""
        iy, ix = cell
        w = np.concatenate([self.dx[ix - reach:ix + reach + 1], self.dy[iy - reach:iy + reach + 1]])
        return bool(np.all(np.abs(w - self.h) <= 1e-9 * self.h))

    def nearest_cell(self, p, reach: int = 2, stencil: int = 0, uniform: bool = True) -> Optional[tuple[int, int]]:
        """Nearest N-cell to ``p`` within ``reach`` cells whose ``stencil`` neighbourhood is all in N.

        With ``uniform`` set, the neighbourhood must also consist of cells of width ``h``.
        """
        iy, ix = self.cell_of(p)
        best, best_d = None, math.inf
        for dy in range(-reach, reach + 1):
            for dx in range(-reach, reach + 1):
                jy, jx = iy + dy, ix + dx
                if not (stencil <= jy < self.ny - stencil and stencil <= jx < self.nx - stencil):
                    continue
                if not self.mask[jy - stencil:jy + stencil + 1, jx - stencil:jx + stencil + 1].all():
                    continue
                if stencil and uniform and not self.uniform_around((jy, jx), stencil):
                    continue
                dd = max(abs(self.xs[jx] - p[0]), abs(self.ys[jy] - p[1]))
                if dd < best_d:
                    best, best_d = (jy, jx), dd
        return best

    def center(self, cell) -> Point:
        return Point(float(self.xs[cell[1]]), float(self.ys[cell[0]]))

    def edges(self, axis: int) -> tuple[np.ndarray, np.ndarray]:
        """Node pairs of 4-neighbour edges along ``axis`` (1 = x, 2 = y)."""
        if axis == 1:
            both = self.mask[:, :-1] & self.mask[:, 1:]
            return self.index[:, :-1][both], self.index[:, 1:][both]
        both = self.mask[:-1, :] & self.mask[1:, :]
        return self.index[:-1, :][both], self.index[1:, :][both]

    def graph(self, weights: Optional[tuple[np.ndarray, np.ndarray]] = None) -> sparse.csr_matrix:
        """Undirected 4-neighbour graph; unit weights unless per-axis edge weights are given."""
        (ra, ca), (rb, cb) = self.edges(1), self.edges(2)
        wa = np.ones(len(ra)) if weights is None else weights[0]
        wb = np.ones(len(rb)) if weights is None else weights[1]
        r = np.concatenate([ra, rb])
        c = np.concatenate([ca, cb])
        v = np.concatenate([wa, wb])
        return sparse.csr_matrix((v, (r, c)), shape=(self.n, self.n))


@dataclass
class AxisPseudometricField:
    axis: int
    grid: NarrowGrid
    phi: np.ndarray
    source: tuple[int, int]

    def at(self, cell) -> float:
        return float(self.phi[cell])


def _contract_free_moves(grid: NarrowGrid, axis: int) -> tuple[np.ndarray, int]:
    """Super-node label per N-cell: cells joined by moves that cost nothing."""
    other = 2 if axis == 1 else 1
    fr, fc = grid.edges(other)
    ar, ac = grid.edges(axis)
    w = grid.cell_weight[grid.mask]
    zero = (w[ar] == 0) & (w[ac] == 0)
    r = np.concatenate([fr, ar[zero]])
    c = np.concatenate([fc, ac[zero]])
    free = sparse.csr_matrix((np.ones(len(r)), (r, c)), shape=(grid.n, grid.n))
    count, labels = connected_components(free, directed=False)
    return labels, count


def phi_field(chain: NarrowChain, weight: NarrowWeight, grid: NarrowGrid, axis: int) -> AxisPseudometricField:
    if axis not in (1, 2):
        raise PreconditionViolated("axis must be 1 or 2", axis=axis)
    x = chain.parent.x
    source = grid.nearest_cell(x)
    if source is None:
        raise SourceOutsideNarrowPath("start point has no cell of the narrow path", point=list(x), h=grid.h)
    labels, count = _contract_free_moves(grid, axis)
    ar, ac = grid.edges(axis)
    w = grid.cell_weight[grid.mask]
    step = grid.spacing(axis)
    cells = grid.cells
    along = cells[ar, 1] if axis == 1 else cells[ar, 0]
    cost = 0.5 * (w[ar] + w[ac]) * step[along]
    la, lb = labels[ar], labels[ac]
    keep = (cost > 0) & (la != lb)
    la, lb, cost = la[keep], lb[keep], cost[keep]
    lo, hi = np.minimum(la, lb), np.maximum(la, lb)
    order = np.lexsort((cost, hi, lo))
    lo, hi, cost = lo[order], hi[order], cost[order]
    first = np.ones(len(lo), dtype=bool)
    first[1:] = (lo[1:] != lo[:-1]) | (hi[1:] != hi[:-1])
    graph = sparse.csr_matrix((cost[first], (lo[first], hi[first])), shape=(count, count))
    dist = dijkstra(graph, directed=False, indices=int(labels[grid.index[source]]))
    phi = np.full(grid.shape, np.nan)
    phi[grid.mask] = dist[labels]
    return AxisPseudometricField(axis, grid, phi, source)


# -- h_m ----------------------------------------------------------------------

def _step_terms(fields: tuple[AxisPseudometricField, AxisPseudometricField], m: int, z: Point,
                cells: np.ndarray) -> np.ndarray:
    """Contribution of every step of a cell path to ``h_m(z)``."""
    grid = fields[0].grid
    a, b = cells[:-1], cells[1:]
    pa = np.column_stack([grid.xs[a[:, 1]], grid.ys[a[:, 0]]])
    pb = np.column_stack([grid.xs[b[:, 1]], grid.ys[b[:, 0]]])
    total = np.zeros(len(a))
    for j, fld in enumerate(fields):
        du = pb[:, j] - pa[:, j]
        phi_mid = 0.5 * (fld.phi[a[:, 0], a[:, 1]] + fld.phi[b[:, 0], b[:, 1]])
        lever = (z[j] - 0.5 * (pa[:, j] + pb[:, j])) ** (m - 2) if m > 2 else 1.0
        total += np.where(du != 0, phi_mid * lever * du, 0.0)
    return total


@dataclass
class GrowingEval:
    m: int
    z: Point
    value: float
    phi: tuple[float, float]
    path_value: float
    alt_value: Optional[float] = None
    residual: Optional[float] = None
    derivatives: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"m": self.m, "z": list(self.z), "h_m": self.value, "phi1": self.phi[0], "phi2": self.phi[1],
                "path_value": self.path_value, "alt_value": self.alt_value, "residual": self.residual,
                "derivatives": self.derivatives}


class GrowingFunction:
    """``h_m`` on every N-cell, from potentials accumulated along a BFS tree rooted at ``x``."""

    def __init__(self, fields: tuple[AxisPseudometricField, AxisPseudometricField], m: int):
        if m < 1:
            raise PreconditionViolated("m must be at least 1", m=m)
        self.fields, self.m = fields, m
        grid = fields[0].grid
        self.grid = grid
        root = int(grid.index[fields[0].source])
        order, pred = breadth_first_order(grid.graph(), root, directed=False, return_predecessors=True)
        self.reached = np.zeros(grid.n, dtype=bool)
        self.reached[order] = True
        self.pred = pred
        self.root = root
        self.origin = grid.center(fields[0].source)
        self.potentials = self._potentials(order, pred)

    def _potentials(self, order: np.ndarray, pred: np.ndarray) -> list[list[np.ndarray]]:
        """``P[j][k](c) = sum over tree steps to c of mean(phi_j) * u_j^k * du_j`` (u relative to x)."""
        grid = self.grid
        child = order[1:]
        parent = pred[child]
        cc, pc = grid.cells[child], grid.cells[parent]
        pts_c = np.column_stack([grid.xs[cc[:, 1]], grid.ys[cc[:, 0]]]) - np.asarray(self.origin)
        pts_p = np.column_stack([grid.xs[pc[:, 1]], grid.ys[pc[:, 0]]]) - np.asarray(self.origin)
        out = []
        for j, fld in enumerate(self.fields):
            du = pts_c[:, j] - pts_p[:, j]
            phi_mid = 0.5 * (fld.phi[cc[:, 0], cc[:, 1]] + fld.phi[pc[:, 0], pc[:, 1]])
            mid = 0.5 * (pts_c[:, j] + pts_p[:, j])
            per_k = []
            for k in range(max(1, self.m - 1)):
                step = np.zeros(grid.n)
                step[child] = np.where(du != 0, phi_mid * mid ** k * du, 0.0)
                per_k.append(_tree_prefix_sum(step, pred, self.root))
            out.append(per_k)
        return out

    def values(self, cells: np.ndarray) -> np.ndarray:
        grid = self.grid
        cells = np.asarray(cells).reshape(-1, 2)
        nodes = grid.index[cells[:, 0], cells[:, 1]]
        z = np.column_stack([grid.xs[cells[:, 1]], grid.ys[cells[:, 0]]]) - np.asarray(self.origin)
        if self.m == 1:
            return np.array([self.fields[0].phi[tuple(c)] + self.fields[1].phi[tuple(c)] for c in cells])
        n = self.m - 2
        total = np.zeros(len(cells))
        for j in range(2):
            for k in range(n + 1):
                total += math.comb(n, k) * z[:, j] ** (n - k) * (-1) ** k * self.potentials[j][k][nodes]
        return total

    def value(self, cell) -> float:
        return float(self.values(np.asarray([cell]))[0])

    def tree_path(self, cell) -> np.ndarray:
        node = int(self.grid.index[cell])
        if node < 0 or not self.reached[node]:
            raise PathUnavailable("cell not reachable inside the narrow path", cell=list(cell))
        chain = [node]
        while chain[-1] != self.root:
            chain.append(int(self.pred[chain[-1]]))
        return self.grid.cells[chain[::-1]]


def _tree_prefix_sum(step: np.ndarray, pred: np.ndarray, root: int) -> np.ndarray:
    """Sum of ``step`` along each node's tree path to the root (pointer jumping)."""
    acc = step.copy()
    anc = pred.copy()
    anc[root] = root
    anc[anc < 0] = root
    while True:
        live = anc != root
        if not live.any():
            return acc
        acc[live] += acc[anc[live]]
        anc = np.where(live, anc[anc], anc)


def _alt_path(grid: NarrowGrid, source: tuple[int, int], target: tuple[int, int], seed: int) -> Optional[np.ndarray]:
    """A second admissible path: shortest under seeded random positive edge weights."""
    rng = np.random.default_rng(seed)
    (ra, _), (rb, _) = grid.edges(1), grid.edges(2)
    g = grid.graph((rng.uniform(0.5, 2.0, len(ra)), rng.uniform(0.5, 2.0, len(rb))))
    s, t = int(grid.index[source]), int(grid.index[target])
    dist, pred = dijkstra(g, directed=False, indices=s, return_predecessors=True)
    if not math.isfinite(dist[t]):
        return None
    chain = [t]
    while chain[-1] != s:
        chain.append(int(pred[chain[-1]]))
    return grid.cells[chain[::-1]]


def _l_path(grid: NarrowGrid, source: tuple[int, int], target: tuple[int, int]) -> Optional[np.ndarray]:
    (sy, sx), (ty, tx) = source, target
    xs = range(sx, tx + (1 if tx >= sx else -1), 1 if tx >= sx else -1)
    ys = range(sy, ty + (1 if ty >= sy else -1), 1 if ty >= sy else -1)
    cells = [(sy, x) for x in xs] + [(y, tx) for y in list(ys)[1:]]
    arr = np.asarray(cells)
    return arr if grid.mask[arr[:, 0], arr[:, 1]].all() else None


def evaluate_h_m(fields: tuple[AxisPseudometricField, AxisPseudometricField], m: int, z,
                 path_choice: str = "tree", seed: int = 0, function: Optional[GrowingFunction] = None) -> GrowingEval:
    """``h_m(z)`` along a chosen path, with the residual against a second admissible path."""
    grid = fields[0].grid
    z = as_point(z)
    cell = grid.nearest_cell(z)
    if cell is None:
        raise PathUnavailable("point has no cell of the narrow path", point=list(z), h=grid.h)
    fn = function or GrowingFunction(fields, m)
    zc = grid.center(cell)
    phis = (fields[0].at(cell), fields[1].at(cell))
    if m == 1:
        v = phis[0] + phis[1]
        return GrowingEval(m, zc, v, phis, v)
    paths = {"tree": fn.tree_path(cell)}
    alt = _alt_path(grid, fields[0].source, cell, seed)
    if alt is not None:
        paths["alt"] = alt
    lpath = _l_path(grid, fields[0].source, cell)
    if lpath is not None:
        paths["lshape"] = lpath
    if path_choice not in paths:
        raise PathUnavailable(f"no {path_choice!r} path to this point", point=list(z))
    sums = {k: float(_step_terms(fields, m, zc, p).sum()) for k, p in paths.items()}
    main = sums[path_choice]
    other_key = next((k for k in ("alt", "tree", "lshape") if k != path_choice and k in sums), None)
    other = None if other_key is None else sums[other_key]
    residual = None if other is None else abs(main - other) / max(abs(main), 1e-300)
    return GrowingEval(m, zc, fn.value(cell), phis, main, other, residual)


def pure_difference(fn: GrowingFunction, cell, axis: int) -> float:
    """Divided difference of order ``m - 1`` along ``axis`` (central for odd orders)."""
    order = fn.m - 1
    grid = fn.grid
    iy, ix = cell
    step = (0, 1) if axis == 1 else (1, 0)
    cells = np.array([(iy + o * step[0], ix + o * step[1]) for o in (-1, 0, 1)])
    f = fn.values(cells)
    u = grid.xs[cells[:, 1]] if axis == 1 else grid.ys[cells[:, 0]]
    if order == 1:
        return float((f[2] - f[0]) / (u[2] - u[0]))
    if order == 2:
        return float(2 * ((f[2] - f[1]) / (u[2] - u[1]) - (f[1] - f[0]) / (u[1] - u[0])) / (u[2] - u[0]))
    raise PreconditionViolated("finite differences implemented for m in {2, 3}", m=fn.m)


def mixed_difference(fn: GrowingFunction, cell) -> float:
    """``(f(+,+) - f(+,-) - f(-,+) + f(-,-))`` over the span of the four diagonal neighbours."""
    grid = fn.grid
    iy, ix = cell
    cells = np.array([(iy + 1, ix + 1), (iy - 1, ix + 1), (iy + 1, ix - 1), (iy - 1, ix - 1)])
    v = fn.values(cells)
    span = (grid.xs[ix + 1] - grid.xs[ix - 1]) * (grid.ys[iy + 1] - grid.ys[iy - 1])
    return float(v[0] - v[1] - v[2] + v[3]) / span


def growing_inequalities_report(chain: NarrowChain, fields: tuple[AxisPseudometricField, AxisPseudometricField],
                                m: int, p: float, d_alpha_value: Optional[float] = None,
                                slack: float = 0.25, fd_rel: float = 0.05) -> Report:
    grid = fields[0].grid
    rep = Report(h=grid.h)
    alpha = alpha_from_p(p)
    diam_sum = float(sum(q.diam ** alpha for q in chain.squares))
    y_cell = grid.nearest_cell(chain.parent.y)
    if y_cell is None:
        raise PathUnavailable("end point has no cell of the narrow path", h=grid.h)
    phi_y = fields[0].at(y_cell) + fields[1].at(y_cell)
    rep.values = {"alpha": alpha, "diam_sum": diam_sum, "phi_sum_at_y": phi_y, "d_alpha": d_alpha_value}
    # An infinite phi at y means the grid cut N apart; E1 would then hold vacuously.
    reachable = math.isfinite(phi_y)
    rep.record("y_reachable", reachable, h=grid.h)
    rep.record("E1_diameters_vs_phi", reachable and diam_sum <= 8 * phi_y * (1 + slack), lhs=diam_sum,
               rhs=8 * phi_y)
    if d_alpha_value is not None:
        rhs = 12 / alpha * diam_sum
        rep.record("E2_metric_vs_diameters", d_alpha_value <= rhs * (1 + slack), lhs=d_alpha_value, rhs=rhs)
    if m >= 2:
        fn = GrowingFunction(fields, m)
        w_max = float(grid.cell_weight.max())
        fact = math.factorial(m - 2)
        # Divided differences at the source need no uniform stencil; the bound is what matters there.
        x_cell = grid.nearest_cell(chain.parent.x, stencil=1, uniform=False)
        y_st = grid.nearest_cell(chain.parent.y, reach=8, stencil=1)
        derivs = {}
        if x_cell is not None:
            for j in (1, 2):
                dx = pure_difference(fn, x_cell, j)
                derivs[f"x_axis{j}"] = dx
                rep.record("E3_vanish_at_x", abs(dx) <= w_max * grid.h, axis=j, value=dx, bound=w_max * grid.h)
        else:
            rep.record("E3_vanish_at_x", False, reason="no full stencil near x")
        if y_st is not None:
            for j, fld in zip((1, 2), fields):
                dy = pure_difference(fn, y_st, j)
                expect = fact * fld.at(y_st)
                derivs[f"y_axis{j}"] = dy
                derivs[f"y_expected{j}"] = expect
                ok = abs(dy - expect) <= fd_rel * abs(expect)
                rep.record("E3_matches_phi_at_y", ok, axis=j, value=dy, expected=expect)
            mixed = [mixed_difference(fn, c) for c in (y_st,) + ((x_cell,) if x_cell is not None else ())]
            scale = max(1.0, abs(fn.value(y_st))) / grid.h ** 2
            ok = all(abs(v) <= 1e-9 * scale for v in mixed)
            derivs["mixed"] = mixed
            rep.record("E4_mixed_vanish", ok, values=mixed)
        else:
            rep.record("E3_matches_phi_at_y", False, reason="no full stencil near y")
        rep.values["derivatives"] = derivs
    return rep


def sobolev_sum(field: AxisPseudometricField, p: float) -> float:
    """``sum |difference quotient of phi_j|^p * area`` over N-cell pairs along the field's axis."""
    grid = field.grid
    if field.axis == 1:
        diff = np.diff(field.phi, axis=1)
        step = grid.spacing(1)[None, :]
        area = step * grid.dy[:, None]
    else:
        diff = np.diff(field.phi, axis=0)
        step = grid.spacing(2)[:, None]
        area = step * grid.dx[None, :]
    ok = np.isfinite(diff)
    return float(np.sum(np.abs(diff[ok] / np.broadcast_to(step, diff.shape)[ok]) ** p
                        * np.broadcast_to(area, diff.shape)[ok]))


def build_fields(chain: NarrowChain, p: float, h: Optional[float] = None,
                 max_cells: int = MAX_CELLS, weight: Optional[NarrowWeight] = None):
    """Weight, grid and both axis fields for a narrow chain."""
    weight = weight or narrow_weight(chain, p)
    grid = NarrowGrid(chain, weight, h, max_cells)
    fields = (phi_field(chain, weight, grid, 1), phi_field(chain, weight, grid, 2))
    return weight, grid, fields
