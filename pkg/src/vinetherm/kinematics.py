"""Trapezoidal-chain shape model of the robot body.

Each section is a trapezoid whose parallel sides are the two muscles (side 1
is the heater side) and whose legs are the interfaces to neighbouring
sections.  With ``u_i = d / tan(theta_i)`` the interface relation reads::

    u_i = l0 (gamma_i2 - gamma_i1) - u_{i-1},    u_0 = 0  (theta_0 = pi/2)

and the body heading turns by ``pi - 2 theta_i = 2 atan(u_i / d)`` across
interface ``i``.  Headings are measured clockwise from +y, so a point at
arc length ``s`` along heading ``h`` advances by ``s (sin h, cos h)``.
Side 1 lies on the left of the direction of growth; contracting it more
(``gamma_1 > gamma_2``) gives ``theta > pi/2`` and a turn toward side 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import ppam, thermo
from .errors import GeometryError, OutOfRangeError, ValidationError


@dataclass(frozen=True)
class SpineConfig:
    """Pneumatic backbone; its cross-section is a circle of perimeter ``2 w``."""

    gauge_pressure: float = 12e3
    layflat_width: float = 0.05

    def __post_init__(self):
        if not self.gauge_pressure >= 0:
            raise ValidationError("spine gauge pressure must be >= 0")
        if not self.layflat_width > 0:
            raise ValidationError("spine layflat width must be positive")

    @property
    def area(self) -> float:
        radius = self.layflat_width / math.pi
        return math.pi * radius * radius


@dataclass(frozen=True)
class ChainGeometry:
    l0: float = 0.041
    d: float = 0.050
    theta0: float = math.pi / 2

    def __post_init__(self):
        if not (self.l0 > 0 and self.d > 0):
            raise ValidationError("l0 and d must be positive")
        if self.theta0 != math.pi / 2:
            raise ValidationError("the chain is initialised with theta0 = pi/2")


@dataclass(frozen=True)
class SegmentState:
    gamma_1: float = 0.0
    gamma_2: float = 0.0
    theta: float = math.pi / 2
    T_1: float = 293.15
    T_2: float = 293.15

    def lengths(self, l0):
        return l0 * (1.0 - self.gamma_1), l0 * (1.0 - self.gamma_2)


@dataclass(frozen=True)
class ChainPose:
    """Side polylines in the chain frame, base of side 1 at the origin.

    ``side1``/``side2`` have ``N + 1`` points (interfaces 0..N);
    ``headings`` holds the heading of each section.  ``end_heading`` is the
    direction normal to the tip interface, i.e. the heading a new section
    would take.
    """

    side1: np.ndarray
    side2: np.ndarray
    headings: np.ndarray
    thetas: np.ndarray
    end_heading: float

    @property
    def tip_heading(self) -> float:
        """Heading of the last section."""
        return float(self.headings[-1]) if len(self.headings) else self.end_heading

    @property
    def spine(self):
        return 0.5 * (self.side1 + self.side2)


def spam_equilibrium_force(spine: SpineConfig) -> float:
    """Per-muscle force (N) balancing the backbone: ``P_g A / 2``."""
    return spine.gauge_pressure * spine.area / 2.0


def interface_offsets(gammas, geom: ChainGeometry):
    """Leg offsets ``u_i = d / tan(theta_i)`` for i = 1..N."""
    g = np.asarray(gammas, dtype=float).reshape(-1, 2)
    u = np.empty(len(g))
    prev = 0.0
    for i, (g1, g2) in enumerate(g):
        prev = geom.l0 * (g2 - g1) - prev
        u[i] = prev
    shortest = geom.l0 * (1.0 - np.max(g, axis=1)) if len(g) else np.empty(0)
    bad = np.nonzero(np.abs(u) >= shortest)[0]
    if len(bad):
        i = int(bad[0])
        raise GeometryError(
            f"interface {i + 1} needs |d/tan(theta)| = {abs(u[i]):.4g} m, "
            f"exceeding the section side {shortest[i]:.4g} m"
        )
    return u


def segment_angles(gammas, geom: ChainGeometry) -> np.ndarray:
    """Interface angles theta_1..theta_N (rad) from ``[(gamma_1, gamma_2), ...]``."""
    g = np.asarray(gammas, dtype=float).reshape(-1, 2)
    if np.any(g < 0) or np.any(g >= 1):
        raise ValidationError("contraction ratios must lie in [0, 1)")
    u = interface_offsets(g, geom)
    return np.pi / 2 - np.arctan(u / geom.d)


def constant_curvature_angles(gammas, geom: ChainGeometry) -> np.ndarray:
    """All-equal-angle variant: each interface takes the mean section offset.

    A smoothed alternative to the alternating solution, for comparison only.
    """
    g = np.asarray(gammas, dtype=float).reshape(-1, 2)
    u = 0.5 * geom.l0 * (g[:, 1] - g[:, 0])
    return np.pi / 2 - np.arctan(u / geom.d)


def chain_pose(gammas, geom: ChainGeometry, thetas=None) -> ChainPose:
    """Side polylines for contraction pairs ``[(gamma_1, gamma_2), ...]``.

    Section ``j`` runs along heading ``H_j = sum_{k<j} (pi - 2 theta_k)``.
    The centre line advances by ``l0 (1 - (gamma_1 + gamma_2) / 2)`` per
    section and the sides sit at the ends of each interface leg.  With the
    recurrence angles both sides have length ``l0 (1 - gamma)`` exactly; with
    externally supplied ``thetas`` only the centre length is honoured.
    """
    g = np.asarray(gammas, dtype=float).reshape(-1, 2)
    if np.any(g < 0) or np.any(g >= 1):
        raise ValidationError("contraction ratios must lie in [0, 1)")
    d = geom.d
    if thetas is None:
        u = interface_offsets(g, geom)
        thetas = np.pi / 2 - np.arctan(u / d)
    else:
        thetas = np.asarray(thetas, dtype=float)
        u = d * np.tan(np.pi / 2 - thetas)
    n = len(g)
    turns = 2.0 * np.arctan(u / d)
    headings = np.concatenate([[0.0], np.cumsum(turns)])
    # leg midpoints lie on the centre line; with the recurrence angles the
    # centre length l0 (1 - mean gamma) reproduces both side lengths exactly
    lc = geom.l0 * (1.0 - 0.5 * (g[:, 0] + g[:, 1]))

    side1 = np.zeros((n + 1, 2))
    side2 = np.zeros((n + 1, 2))
    side2[0] = (d, 0.0)
    centre = np.array([0.5 * d, 0.0])
    for j in range(n):
        h = headings[j]
        t = np.array([math.sin(h), math.cos(h)])
        nrm = np.array([math.cos(h), -math.sin(h)])
        centre = centre + lc[j] * t
        # far leg of section j: side 1 -> side 2 is d n - u t
        half_leg = 0.5 * (d * nrm - u[j] * t)
        side1[j + 1] = centre - half_leg
        side2[j + 1] = centre + half_leg
    return ChainPose(side1, side2, headings[:n], thetas, float(headings[n]))


def transform_pose(pose: ChainPose, origin, heading) -> ChainPose:
    """Rigidly place a chain-frame pose at ``origin`` rotated by ``heading``."""
    c, s = math.cos(heading), math.sin(heading)
    # clockwise rotation by `heading` keeps the (sin h, cos h) convention
    rot = np.array([[c, s], [-s, c]])
    o = np.asarray(origin, dtype=float)
    return ChainPose(
        pose.side1 @ rot.T + o,
        pose.side2 @ rot.T + o,
        pose.headings + heading,
        pose.thetas,
        pose.end_heading + heading,
    )


def gammas_from_pose(pose: ChainPose, geom: ChainGeometry) -> np.ndarray:
    """Recover per-section contraction pairs from side lengths."""
    l1 = np.linalg.norm(np.diff(pose.side1, axis=0), axis=1)
    # side-2 section length is l1 - u_{j-1} - u_j
    u = geom.d * np.tan(np.pi / 2 - np.asarray(pose.thetas))
    u_prev = np.concatenate([[0.0], u[:-1]])
    l2 = l1 - u_prev - u
    return np.column_stack([1.0 - l1 / geom.l0, 1.0 - l2 / geom.l0])


def thermometry_inverse(gammas, spine: SpineConfig, geom: ppam.ActuatorGeometry,
                        fluid: thermo.FluidState, tol=1e-6):
    """Temperatures (K) that hold each observed contraction at the spine force.

    Force is linear in gauge pressure, so the pressure that delivers
    ``P_spine A / 2`` at ``gamma`` is found first; the temperature is then
    bracketed by bisection over the vapor model's validity range.
    """
    g = np.asarray(gammas, dtype=float)
    target = spam_equilibrium_force(spine)
    gzf = ppam.zero_force_gamma(geom.l_over_r)
    model = fluid.vapor_model
    out = np.empty(g.shape)
    for idx, gamma in np.ndenumerate(g):
        if not 0.0 < gamma < gzf:
            raise OutOfRangeError(f"gamma = {gamma:g} outside (0, {gzf:.6g}); temperature unobservable")
        unit = ppam.force(1.0, geom, gamma)
        need = target / unit

        def pg(T):
            V = fluid.volume(gamma, gzf) if fluid.n_air > 0 else None
            return thermo.gauge_pressure(T, fluid, V)

        lo, hi = model.T_min, model.T_max
        if pg(hi) < need:
            raise OutOfRangeError(
                f"gamma = {gamma:g} needs {need:.6g} Pa gauge, beyond the vapor model at {hi:g} K"
            )
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if pg(mid) < need:
                lo = mid
            else:
                hi = mid
        out[idx] = 0.5 * (lo + hi)
    return float(out) if out.ndim == 0 else out
