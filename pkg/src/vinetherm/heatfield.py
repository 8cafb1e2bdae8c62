"""Planar radiative flux field from point heaters with polygonal occluders."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, GeometryError, ValidationError

MIN_DISTANCE = 1e-6  # m
DECAY_MODELS = ("inverse-square", "exponential")


@dataclass(frozen=True)
class Heater:
    """Point source delivering ``ref_flux`` (W/m^2) at ``ref_distance`` (m).

    ``decay_rate`` (1/m) is used only by exponential scenes, where the flux
    is ``ref_flux * exp(-decay_rate * (d - ref_distance))``.
    """

    position: tuple[float, float]
    ref_flux: float
    ref_distance: float = 0.5
    surface_temp: float = 900.0
    decay_rate: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        if len(self.position) != 2:
            raise ValidationError("heater position must be 2-D")
        if not (self.ref_flux > 0 and self.ref_distance > 0):
            raise ValidationError("heater ref_flux and ref_distance must be positive")
        if self.decay_rate < 0:
            raise ValidationError("decay_rate must be >= 0")


def _segments_intersect(p, q, a, b):
    """Proper or touching intersection of closed segments pq and ab."""
    def orient(u, v, w):
        return (v[0] - u[0]) * (w[1] - u[1]) - (v[1] - u[1]) * (w[0] - u[0])

    def on_seg(u, v, w):
        return min(u[0], v[0]) <= w[0] <= max(u[0], v[0]) and min(u[1], v[1]) <= w[1] <= max(u[1], v[1])

    d1, d2 = orient(a, b, p), orient(a, b, q)
    d3, d4 = orient(p, q, a), orient(p, q, b)
    if ((d1 > 0) != (d2 > 0)) and d1 != 0 and d2 != 0 and ((d3 > 0) != (d4 > 0)) and d3 != 0 and d4 != 0:
        return True
    return (
        (d1 == 0 and on_seg(a, b, p))
        or (d2 == 0 and on_seg(a, b, q))
        or (d3 == 0 and on_seg(p, q, a))
        or (d4 == 0 and on_seg(p, q, b))
    )


@dataclass(frozen=True)
class Occluder:
    """Simple polygon attenuating flux by ``transmissivity`` when crossed."""

    polygon: np.ndarray
    transmissivity: float = 0.0

    def __post_init__(self):
        poly = np.asarray(self.polygon, dtype=float)
        if poly.ndim != 2 or poly.shape[1] != 2 or len(poly) < 3:
            raise GeometryError("occluder needs at least 3 vertices in 2-D")
        if np.allclose(poly[0], poly[-1]) and len(poly) > 3:
            poly = poly[:-1]
        if not 0.0 <= self.transmissivity <= 1.0:
            raise ValidationError("transmissivity must lie in [0, 1]")
        x, y = poly[:, 0], poly[:, 1]
        area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
        if abs(area) < 1e-15:
            raise GeometryError("occluder polygon has zero area")
        n = len(poly)
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]):
                    raise GeometryError("occluder polygon is self-intersecting")
        object.__setattr__(self, "polygon", poly)

    def contains(self, points) -> np.ndarray:
        """Even-odd point-in-polygon test for an ``(..., 2)`` array."""
        pts = np.asarray(points, dtype=float)
        px, py = pts[..., 0], pts[..., 1]
        inside = np.zeros(px.shape, dtype=bool)
        poly = self.polygon
        for (x1, y1), (x2, y2) in zip(poly, np.roll(poly, -1, axis=0)):
            crosses = (y1 > py) != (y2 > py)
            with np.errstate(divide="ignore", invalid="ignore"):
                x_at = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            inside ^= crosses & (px < x_at)
        return inside

    def mirrored(self):
        poly = self.polygon * np.array([-1.0, 1.0])
        return Occluder(poly[::-1], self.transmissivity)

    def blocks(self, p, q) -> bool:
        """Whether segment pq passes through the polygon interior.

        The segment is split at its crossings with the boundary and each
        piece is classified by its midpoint, so the answer does not depend
        on the direction of travel.
        """
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        d = q - p
        a = self.polygon
        b = np.roll(a, -1, axis=0)
        e = b - a
        denom = d[0] * e[:, 1] - d[1] * e[:, 0]
        ap = a - p
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (ap[:, 0] * e[:, 1] - ap[:, 1] * e[:, 0]) / denom
            s = (ap[:, 0] * d[1] - ap[:, 1] * d[0]) / denom
        ok = (denom != 0) & (t >= 0) & (t <= 1) & (s >= 0) & (s <= 1)
        cuts = np.unique(np.concatenate([[0.0, 1.0], t[ok]]))
        mids = 0.5 * (cuts[:-1] + cuts[1:])
        mids = mids[cuts[1:] - cuts[:-1] > 1e-12]
        if len(mids) == 0:
            return False
        return bool(np.any(self.contains(p + mids[:, None] * d)))


@dataclass(frozen=True)
class HeatScene:
    heaters: Sequence[Heater]
    occluders: Sequence[Occluder] = field(default_factory=tuple)
    ambient_temp: float = 293.15
    decay_model: str = "inverse-square"

    def __post_init__(self):
        object.__setattr__(self, "heaters", tuple(self.heaters))
        object.__setattr__(self, "occluders", tuple(self.occluders))
        if not self.heaters:
            raise ValidationError("scene needs at least one heater")
        if not self.ambient_temp > 0:
            raise ValidationError("ambient temperature must be positive")
        if self.decay_model not in DECAY_MODELS:
            raise ValidationError(f"decay_model must be one of {DECAY_MODELS}")

    def mirrored(self):
        """Reflection across the y-axis."""
        heaters = [
            Heater((-h.position[0], h.position[1]), h.ref_flux, h.ref_distance, h.surface_temp, h.decay_rate)
            for h in self.heaters
        ]
        return HeatScene(heaters, [o.mirrored() for o in self.occluders], self.ambient_temp, self.decay_model)


def visibility(p, heater: Heater, occluders) -> float:
    """Product of transmissivities of the occluders crossed by p -> heater."""
    p = np.asarray(p, dtype=float)
    h = np.asarray(heater.position)
    if np.array_equal(p, h):
        raise DomainError("query point coincides with the heater")
    factor = 1.0
    for occ in occluders:
        if occ.blocks(p, h):
            factor *= occ.transmissivity
    return factor


def decay(distance, heater: Heater, model: str):
    d = np.asarray(distance, dtype=float)
    if model == "inverse-square":
        return heater.ref_flux * (heater.ref_distance / d) ** 2
    if model == "exponential":
        return heater.ref_flux * np.exp(-heater.decay_rate * (d - heater.ref_distance))
    raise ValueError(f"unknown decay model {model!r}")


def heater_flux(scene: HeatScene, heater: Heater, p, normal=None) -> float:
    """Contribution of one heater at point ``p``."""
    p = np.asarray(p, dtype=float)
    delta = np.asarray(heater.position) - p
    d = float(np.hypot(delta[0], delta[1]))
    if d < MIN_DISTANCE:
        raise DomainError(f"query point within {MIN_DISTANCE:g} m of a heater")
    vis = visibility(p, heater, scene.occluders)
    if vis == 0.0:
        return 0.0
    q = vis * float(decay(d, heater, scene.decay_model))
    if normal is not None:
        n = np.asarray(normal, dtype=float)
        q *= max(0.0, float(np.dot(n, delta)) / (d * float(np.hypot(n[0], n[1]))))
    return q


def flux_at(scene: HeatScene, p, normal=None) -> float:
    """Total incident flux (W/m^2) at ``p``.

    ``normal`` optionally weights each heater by the cosine of incidence on
    a surface facing that direction.
    """
    return sum(heater_flux(scene, h, p, normal) for h in scene.heaters)


def grid_centers(bounds, resolution):
    xmin, xmax, ymin, ymax = (float(v) for v in bounds)
    nx, ny = (int(v) for v in resolution)
    if nx < 2 or ny < 2:
        raise GeometryError("grid resolution must be at least 2x2")
    if not (xmax > xmin and ymax > ymin):
        raise GeometryError("grid bounds are degenerate")
    xs = xmin + (np.arange(nx) + 0.5) * (xmax - xmin) / nx
    ys = ymin + (np.arange(ny) + 0.5) * (ymax - ymin) / ny
    return xs, ys


def isoflux_grid(scene: HeatScene, bounds, resolution):
    """Flux sampled at cell centres; ``grid[j, i]`` is at ``(xs[i], ys[j])``.

    ``bounds`` is ``(xmin, xmax, ymin, ymax)`` and ``resolution`` is
    ``(nx, ny)``.  Cells whose centre falls on a heater are skipped (NaN).
    """
    xs, ys = grid_centers(bounds, resolution)
    grid = np.empty((len(ys), len(xs)))
    for j, y in enumerate(ys):
        for i, x in enumerate(xs):
            try:
                grid[j, i] = flux_at(scene, (x, y))
            except DomainError:
                grid[j, i] = np.nan
    return xs, ys, grid
