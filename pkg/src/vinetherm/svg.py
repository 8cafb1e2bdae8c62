"""Minimal SVG 1.1 writer for polylines, markers and iso-contours."""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np
from skimage import measure

from .errors import ValidationError

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")


@dataclass
class Polyline:
    points: np.ndarray
    stroke: str = "#1f77b4"
    width: float = 1.5
    closed: bool = False
    fill: str = "none"
    label: str = ""


@dataclass
class Marker:
    position: tuple[float, float]
    color: str = "#d62728"
    radius: float = 4.0
    label: str = ""


def contour_lines(xs, ys, grid, level):
    """Iso-lines of ``grid[j, i]`` sampled at ``(xs[i], ys[j])`` in world coordinates.

    Marching squares on the sample lattice; NaN samples (e.g. a heater
    centre) are replaced by the largest finite value.
    """
    g = np.asarray(grid, dtype=float)
    if g.ndim != 2 or g.shape != (len(ys), len(xs)):
        raise ValidationError("grid shape must be (len(ys), len(xs))")
    finite = np.isfinite(g)
    if not finite.any():
        return []
    g = np.where(finite, g, np.max(g[finite]))
    if not (g.min() < level < g.max()):
        return []
    dx = (xs[-1] - xs[0]) / (len(xs) - 1)
    dy = (ys[-1] - ys[0]) / (len(ys) - 1)
    out = []
    for rc in measure.find_contours(g, level):
        out.append(np.column_stack([xs[0] + rc[:, 1] * dx, ys[0] + rc[:, 0] * dy]))
    return out


def _fmt(v):
    return f"{v:.3f}".rstrip("0").rstrip(".")


def emit_svg(polylines=(), markers=(), width=640, height=640, margin=24, title=None, bounds=None) -> str:
    """Render polylines and markers into an SVG document string.

    World coordinates are mapped with a uniform scale and +y up.  ``bounds``
    ``(xmin, xmax, ymin, ymax)`` overrides the fitted extent.
    """
    polylines = [p for p in polylines]
    markers = [m for m in markers]
    if not polylines and not markers:
        raise ValidationError("nothing to draw")
    pts = [np.asarray(p.points, dtype=float).reshape(-1, 2) for p in polylines]
    for p in pts:
        if not np.all(np.isfinite(p)):
            raise ValidationError("polyline coordinates must be finite")
    if bounds is None:
        allp = np.vstack(pts + [np.asarray([m.position for m in markers], dtype=float).reshape(-1, 2)])
        xmin, ymin = allp.min(axis=0)
        xmax, ymax = allp.max(axis=0)
    else:
        xmin, xmax, ymin, ymax = (float(b) for b in bounds)
    span = max(xmax - xmin, ymax - ymin, 1e-9)
    scale = min(width, height) - 2 * margin
    scale /= span

    def tx(p):
        return margin + (p[..., 0] - xmin) * scale, height - margin - (p[..., 1] - ymin) * scale

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        lines.append(f"<title>{escape(title)}</title>")
    for poly, p in zip(polylines, pts):
        x, y = tx(p)
        d = "M " + " L ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(x, y))
        if poly.closed:
            d += " Z"
        attrs = f'd="{d}" fill="{poly.fill}" stroke="{poly.stroke}" stroke-width="{_fmt(poly.width)}"'
        if poly.label:
            lines.append(f"<path {attrs}><title>{escape(poly.label)}</title></path>")
        else:
            lines.append(f"<path {attrs}/>")
    for m in markers:
        x, y = tx(np.asarray(m.position, dtype=float))
        lines.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(m.radius)}" fill="{m.color}"/>')
        if m.label:
            lines.append(
                f'<text x="{_fmt(x + m.radius + 2)}" y="{_fmt(y - m.radius)}" font-size="11" '
                f'font-family="sans-serif">{escape(m.label)}</text>'
            )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
