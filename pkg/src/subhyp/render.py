"""Deterministic SVG 1.1 drawings of a domain, square chains and geodesics."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence, Union
from xml.sax.saxutils import escape

import numpy as np

from .domain import PolygonDomain

CHAIN_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")
GEODESIC_COLOUR = "#ff7f0e"
MARGIN = 0.05


def _num(v: float) -> str:
    s = f"{v:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("", "-0") else s


class _Frame:
    """Maps domain coordinates (y up) to SVG user units (y down)."""

    def __init__(self, bbox: tuple[float, float, float, float]):
        x0, x1, y0, y1 = bbox
        span = max(x1 - x0, y1 - y0)
        self.pad = MARGIN * span
        self.x0, self.y1 = x0, y1
        self.width = x1 - x0 + 2 * self.pad
        self.height = y1 - y0 + 2 * self.pad
        self.unit = span / 100.0

    def xy(self, p) -> tuple[str, str]:
        return _num(p[0] - self.x0 + self.pad), _num(self.y1 - p[1] + self.pad)

    def points(self, pts) -> str:
        return " ".join(",".join(self.xy(p)) for p in pts)


def _as_chain_dict(chain) -> dict:
    return chain if isinstance(chain, dict) else chain.to_dict()


def _rect(frame: _Frame, sq: dict, attrs: str) -> str:
    (cx, cy), r = sq["center"], sq["radius"]
    x, y = frame.xy((cx - r, cy + r))
    return f'<rect x="{x}" y="{y}" width="{_num(2 * r)}" height="{_num(2 * r)}" {attrs}/>'


def _chain_elements(frame: _Frame, chain: dict, colour: str, n: int) -> list[str]:
    out = [f'<g class="chain" id="chain-{n}">']
    stroke = _num(0.25 * frame.unit)
    for item in chain.get("squares", []):
        out.append(_rect(frame, item, f'class="square" fill="{colour}" fill-opacity="0.12" stroke="{colour}" '
                                      f'stroke-width="{stroke}"'))
        hat = item.get("hat")
        if hat is not None:
            out.append(_rect(frame, hat, f'class="hat" fill="{colour}" fill-opacity="0.55" stroke="none"'))
        conn = item.get("connector")
        if conn is not None and conn.get("kind") == "segment":
            (ax, ay), (bx, by) = frame.xy(conn["a"]), frame.xy(conn["b"])
            out.append(f'<line class="connector" x1="{ax}" y1="{ay}" x2="{bx}" y2="{by}" '
                       f'stroke="#000000" stroke-width="{stroke}"/>')
        # Labels shrink with the square so they stay inside it.
        size = min(3 * frame.unit, item["radius"])
        tx, ty = frame.xy(item["center"])
        out.append(f'<text x="{tx}" y="{ty}" font-size="{_num(size)}" text-anchor="middle" '
                   f'dominant-baseline="central" fill="{colour}">{escape(str(item["index"]))}</text>')
    out.append("</g>")
    return out


def render_svg(domain: PolygonDomain, chains: Iterable = (), geodesics: Sequence = (),
               out: Union[str, Path, None] = None) -> str:
    """Draw the outline, each chain's squares (labelled by index), hats, connectors and geodesic polylines.

    ``chains`` holds chain objects or their ``to_dict`` form; ``geodesics`` holds point arrays.
    The text is returned and, when ``out`` is given, also written there.
    """
    frame = _Frame(domain.bbox)
    stroke = _num(0.4 * frame.unit)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="0 0 {_num(frame.width)} {_num(frame.height)}">',
        f'<polygon class="domain" points="{frame.points(domain.vertices)}" fill="none" '
        f'stroke="#000000" stroke-width="{stroke}"/>',
    ]
    for n, chain in enumerate(chains):
        lines += _chain_elements(frame, _as_chain_dict(chain), CHAIN_COLOURS[n % len(CHAIN_COLOURS)], n)
    for path in geodesics:
        pts = np.asarray(path, dtype=float).reshape(-1, 2)
        lines.append(f'<polyline class="geodesic" points="{frame.points(pts)}" fill="none" '
                     f'stroke="{GEODESIC_COLOUR}" stroke-width="{stroke}"/>')
    lines.append("</svg>")
    text = "\n".join(lines) + "\n"
    if out is not None:
        Path(out).write_text(text)
    return text
