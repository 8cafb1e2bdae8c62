"""Mechanics of a series pouch muscle (sPAM).

Each pouch is treated as a pleated-membrane muscle whose shape is fixed by
two parameters, the elliptic parameter ``m`` and the amplitude ``phi_r`` at
the constriction.  Given the fiber-length-to-radius ratio ``l/r`` and a
contraction ratio ``gamma`` they solve::

    F(phi_r | m) / (sqrt(m) cos phi_r) = l / r
    E(phi_r | m) / (sqrt(m) cos phi_r) = (l / r) (1 - gamma / 2)

and the axial force is ``pi P r^2 (1 - 2m) / (2 m cos^2 phi_r)``.

``m`` is the parameter convention (``m = k^2``) throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    ConditionError,
    ConvergenceError,
    DomainError,
    UnreachableForceError,
    ValidationError,
)

HALF_PI = 0.5 * math.pi

#: Below this contraction the flat-pouch limit makes the force law singular;
#: forces are clamped to their value here.
GAMMA_MIN = 1e-4


# ---------------------------------------------------------------------------
# Carlson symmetric integrals

def _carlson_rf(x, y, z):
    """Carlson's R_F(x, y, z) by duplication; arrays broadcast."""
    x, y, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
    x0, y0 = x, y
    x, y, z = x.copy(), y.copy(), z.copy()
    a0 = (x + y + z) / 3.0
    q = (3.0 * np.finfo(float).eps) ** (-1.0 / 6.0) * np.maximum.reduce(
        [np.abs(a0 - x), np.abs(a0 - y), np.abs(a0 - z)]
    )
    a = a0.copy()
    scale = 1.0
    for _ in range(64):
        if np.all(q * scale < np.abs(a)):
            break
        sx, sy, sz = np.sqrt(x), np.sqrt(y), np.sqrt(z)
        lam = sx * sy + sx * sz + sy * sz
        x = 0.25 * (x + lam)
        y = 0.25 * (y + lam)
        z = 0.25 * (z + lam)
        a = 0.25 * (a + lam)
        scale *= 0.25
    X = (a0 - x0) * scale / a
    Y = (a0 - y0) * scale / a
    Z = -(X + Y)
    e2 = X * Y - Z * Z
    e3 = X * Y * Z
    poly = 1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0
    return poly / np.sqrt(a)


def _carlson_rd(x, y, z):
    """Carlson's R_D(x, y, z) = R_J(x, y, z, z) by duplication."""
    x, y, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
    x0, y0 = x, y
    x, y, z = x.copy(), y.copy(), z.copy()
    a0 = (x + y + 3.0 * z) / 5.0
    q = (0.25 * np.finfo(float).eps) ** (-1.0 / 6.0) * np.maximum.reduce(
        [np.abs(a0 - x), np.abs(a0 - y), np.abs(a0 - z)]
    )
    a = a0.copy()
    total = np.zeros_like(a)
    scale = 1.0
    for _ in range(64):
        if np.all(q * scale < np.abs(a)):
            break
        sx, sy, sz = np.sqrt(x), np.sqrt(y), np.sqrt(z)
        lam = sx * sy + sx * sz + sy * sz
        total = total + scale / (sz * (z + lam))
        x = 0.25 * (x + lam)
        y = 0.25 * (y + lam)
        z = 0.25 * (z + lam)
        a = 0.25 * (a + lam)
        scale *= 0.25
    X = (a0 - x0) * scale / a
    Y = (a0 - y0) * scale / a
    Z = -(X + Y) / 3.0
    ea = X * Y
    eb = Z * Z
    ec = ea - eb
    ed = ea - 6.0 * eb
    ee = ed + ec + ec
    s1 = ed * (-3.0 / 14.0 + 9.0 / 88.0 * ed - 9.0 / 52.0 * Z * ee)
    s2 = Z * (ee / 6.0 + Z * (-9.0 / 22.0 * ec + Z * 3.0 / 26.0 * ea))
    return 3.0 * total + scale * (1.0 + s1 + s2) / (a * np.sqrt(a))


def _ellip_fe(phi, m):
    """Both incomplete integrals at once, no domain checks."""
    s = np.sin(phi)
    c = np.cos(phi)
    c2 = c * c
    d2 = 1.0 - m * s * s
    rf = _carlson_rf(c2, d2, 1.0)
    f = s * rf
    # R_D(x, y, 1) is finite whenever y > 0; guard the m = 1, phi = pi/2 corner
    with np.errstate(divide="ignore", invalid="ignore"):
        rd = _carlson_rd(c2, d2, 1.0)
    e = f - m * s ** 3 * rd / 3.0
    return f, e


def _as_output(value, *inputs):
    if all(np.ndim(v) == 0 for v in inputs):
        return float(value)
    return value


def _check_phi(phi):
    phi = np.asarray(phi, dtype=float)
    if np.any(~np.isfinite(phi)) or np.any(phi < 0.0) or np.any(phi > HALF_PI):
        raise DomainError("amplitude phi must lie in [0, pi/2]")
    return phi


def ellip_F(phi, m):
    """Incomplete elliptic integral of the first kind, F(phi | m)."""
    phi_a = _check_phi(phi)
    m_a = np.asarray(m, dtype=float)
    if np.any(m_a < 0.0) or np.any(~np.isfinite(m_a)):
        raise DomainError("parameter m must be >= 0")
    if np.any(m_a > 1.0) or np.any((m_a == 1.0) & (phi_a == HALF_PI)):
        raise DomainError("F(phi|m) diverges for m >= 1 at phi = pi/2")
    if np.any(m_a * np.sin(phi_a) ** 2 >= 1.0):
        raise DomainError("F(phi|m) diverges where m sin^2(phi) >= 1")
    f, _ = _ellip_fe(phi_a, m_a)
    return _as_output(f, phi, m)


def ellip_E(phi, m):
    """Incomplete elliptic integral of the second kind, E(phi | m); m <= 1."""
    phi_a = _check_phi(phi)
    m_a = np.asarray(m, dtype=float)
    if np.any(m_a < 0.0) or np.any(m_a > 1.0) or np.any(~np.isfinite(m_a)):
        raise DomainError("parameter m must lie in [0, 1]")
    # m = 1 has the closed form sin(phi); Carlson's R_F/R_D blow up at that corner
    s = np.sin(phi_a)
    inner = m_a * s * s < 1.0
    m_safe = np.where(inner, m_a, 0.0)
    _, e = _ellip_fe(phi_a, m_safe)
    e = np.where(inner, e, s)
    return _as_output(e, phi, m)


# ---------------------------------------------------------------------------
# Domain types

@dataclass(frozen=True)
class ActuatorGeometry:
    """Pouch geometry.

    Parameters
    ----------
    fiber_length : float
        Membrane fiber length ``l`` (m).
    constriction_radius : float
        Tie-off radius ``r`` (m).
    layflat_width : float
        Flat tubing width ``w`` (m).
    pouches_per_spam : int
        Pouches in series along one muscle.
    """

    fiber_length: float = 0.030
    constriction_radius: float = 0.003
    layflat_width: float = 0.045
    pouches_per_spam: int = 5

    def __post_init__(self):
        if not (self.fiber_length > 0 and self.constriction_radius > 0 and self.layflat_width > 0):
            raise ValidationError("ActuatorGeometry lengths must be positive")
        if int(self.pouches_per_spam) != self.pouches_per_spam or self.pouches_per_spam < 1:
            raise ValidationError("pouches_per_spam must be an integer >= 1")
        if self.l_over_r <= HALF_PI:
            raise ValidationError(
                f"l/r = {self.l_over_r:.4g} must exceed pi/2 for a solvable membrane"
            )

    @property
    def l_over_r(self) -> float:
        return self.fiber_length / self.constriction_radius


@dataclass(frozen=True)
class MembraneSolution:
    m: float
    phi_r: float
    residual: float = 0.0
    iterations: int = 0
    method: str = "newton"


# ---------------------------------------------------------------------------
# Membrane system

def _phi_for_m(l_over_r, m, max_iter=100):
    """Amplitude solving the first membrane equation for given ``m``.

    ``F(phi|m) - (l/r) sqrt(m) cos(phi)`` is increasing in phi on [0, pi/2];
    Newton steps are kept inside a shrinking bracket.
    """
    m = np.asarray(m, dtype=float)
    rhs = np.asarray(l_over_r, dtype=float) * np.sqrt(m)
    lo = np.zeros(np.shape(rhs))
    hi = np.full(np.shape(rhs), HALF_PI)
    # small-angle start: F ~ phi, cos ~ 1
    phi = np.clip(rhs, 1e-3, HALF_PI - 1e-3)
    done = np.zeros(np.shape(rhs), dtype=bool)
    for _ in range(max_iter):
        s, c = np.sin(phi), np.cos(phi)
        d2 = 1.0 - m * s * s
        g = s * _carlson_rf(c * c, d2, 1.0) - rhs * c
        lo = np.where(g < 0.0, phi, lo)
        hi = np.where(g > 0.0, phi, hi)
        step = g / (1.0 / np.sqrt(d2) + rhs * s)
        new = phi - step
        outside = (new < lo) | (new > hi)
        new = np.where(outside, 0.5 * (lo + hi), new)
        # per-element stop: tiny Newton step, exact root or collapsed bracket
        done |= ((np.abs(step) <= 1e-14 * phi) & ~outside) | (g == 0.0) | (hi - lo <= 4e-16 * hi)
        phi = np.where(done, phi, new)
        if np.all(done):
            return phi
    raise ConvergenceError("amplitude solve did not converge")


def _membrane_state(l_over_r, m):
    """(phi_r, gamma, cos phi_r) on the one-parameter solution family."""
    phi = _phi_for_m(l_over_r, m)
    f, e = _ellip_fe(phi, m)
    gamma = 2.0 * (1.0 - e / f)
    return phi, gamma, np.cos(phi)


def _force_factor(m, cos_phi):
    """Dimensionless (1 - 2m) / (2 m cos^2 phi)."""
    return (1.0 - 2.0 * m) / (2.0 * m * cos_phi * cos_phi)


def membrane_residuals(l_over_r, gamma, m, phi_r):
    """Relative residuals of both membrane equations."""
    f, e = _ellip_fe(phi_r, m)
    denom = math.sqrt(m) * math.cos(phi_r)
    r1 = (f / denom - l_over_r) / l_over_r
    target2 = l_over_r * (1.0 - 0.5 * gamma)
    r2 = (e / denom - target2) / target2
    return float(r1), float(r2)


@lru_cache(maxsize=256)
def zero_force_gamma(l_over_r: float) -> float:
    """Contraction at which the pouch force vanishes (m = 1/2).

    Independent of pressure: the force law is linear in pressure and the
    membrane shape depends only on ``l/r`` and ``gamma``.  ``l_over_r=inf``
    gives the long-pouch limit.
    """
    l_over_r = float(l_over_r)
    if not l_over_r > 0:
        raise DomainError("l/r must be positive")
    if math.isinf(l_over_r):
        # phi_r -> pi/2: ratio of complete integrals
        k, e = _ellip_fe(HALF_PI, 0.5)
        return float(2.0 * (1.0 - e / k))
    _, gamma, _ = _membrane_state(l_over_r, np.asarray(0.5))
    return float(gamma)


def _bisect_membrane(l_over_r, gamma, tol=1e-15, max_iter=200):
    """Nested bisection: outer on m, inner amplitude solve from the first equation."""
    lo, hi = 0.0, 0.5
    for it in range(max_iter):
        mid = 0.5 * (lo + hi)
        _, g, _ = _membrane_state(l_over_r, np.asarray(mid))
        if g < gamma:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    m = 0.5 * (lo + hi)
    phi = float(_phi_for_m(l_over_r, np.asarray(m)))
    return m, phi, it + 1


def solve_membrane(l_over_r, gamma, tol=1e-12, max_iter=60) -> MembraneSolution:
    """Solve the two membrane equations for ``(m, phi_r)``.

    Damped Newton with a forward-difference Jacobian from ``(0.25, pi/4)``;
    falls back to nested bisection if Newton stalls or leaves the domain.

    Raises
    ------
    DomainError
        ``gamma`` outside ``(0, gamma_zf]``.
    ConvergenceError
        Neither method reached the residual tolerance.
    """
    l_over_r = float(l_over_r)
    gamma = float(gamma)
    gzf = zero_force_gamma(l_over_r)
    if not (0.0 < gamma <= gzf * (1.0 + 1e-12)):
        raise DomainError(f"gamma = {gamma!r} outside (0, {gzf:.6g}]")
    if gamma >= gzf:
        phi = float(_phi_for_m(l_over_r, np.asarray(0.5)))
        return MembraneSolution(0.5, phi, 0.0, 0, "closed-form")

    target2 = 1.0 - 0.5 * gamma

    def resid(v):
        m, phi = v
        f, e = _ellip_fe(phi, m)
        scale = l_over_r * math.sqrt(m) * math.cos(phi)
        return np.array([f - scale, e - target2 * scale]) / l_over_r

    x = np.array([0.25, math.pi / 4])
    r = resid(x)
    for it in range(max_iter):
        h = 1e-7 * np.maximum(np.abs(x), 1e-3)
        jac = np.empty((2, 2))
        for k in range(2):
            xp = x.copy()
            xp[k] += h[k]
            jac[:, k] = (resid(xp) - r) / h[k]
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            break
        # damping keeps iterates inside 0 < m < 1, 0 < phi < pi/2
        lam = 1.0
        norm0 = np.linalg.norm(r)
        while lam > 1e-6:
            cand = x + lam * step
            if 0.0 < cand[0] < 1.0 and 0.0 < cand[1] < HALF_PI:
                rc = resid(cand)
                if np.linalg.norm(rc) < norm0 or lam < 1e-3:
                    break
            lam *= 0.5
        else:
            break
        x, r = cand, rc
        if np.max(np.abs(r)) < tol and np.max(np.abs(lam * step)) < 1e-10:
            m, phi = float(x[0]), float(x[1])
            r1, r2 = membrane_residuals(l_over_r, gamma, m, phi)
            if max(abs(r1), abs(r2)) < 1e-8 and m <= 0.5:
                return MembraneSolution(m, phi, max(abs(r1), abs(r2)), it + 1, "newton")
            break

    m, phi, n = _bisect_membrane(l_over_r, gamma)
    r1, r2 = membrane_residuals(l_over_r, gamma, m, phi)
    res = max(abs(r1), abs(r2))
    if not res < 1e-8:
        raise ConvergenceError(
            f"membrane solve failed for l/r={l_over_r:g}, gamma={gamma:g} (residual {res:.2e})"
        )
    return MembraneSolution(m, phi, res, n, "bisection")


# ---------------------------------------------------------------------------
# Force law and inverses

def _check_condition(geom, cos_phi):
    # zero parallel force condition: 2r / cos(phi_r) < 2w / pi
    min_w = math.pi * geom.constriction_radius / float(cos_phi)
    if not geom.layflat_width > min_w:
        raise ConditionError(
            f"zero-parallel-force condition violated: layflat width {geom.layflat_width:g} m "
            f"must exceed {min_w:.6g} m",
            min_width=min_w,
        )


def force(P_g, geom: ActuatorGeometry, gamma) -> float:
    """Axial force (N) of one muscle at gauge pressure ``P_g`` (Pa)."""
    P_g = float(P_g)
    gamma = float(gamma)
    if not P_g >= 0:
        raise DomainError("gauge pressure must be >= 0")
    L = geom.l_over_r
    gzf = zero_force_gamma(L)
    if gamma < 0.0 or gamma > gzf * (1.0 + 1e-12):
        raise DomainError(f"gamma = {gamma!r} outside [0, {gzf:.6g}]")
    sol = solve_membrane(L, min(max(gamma, GAMMA_MIN), gzf))
    cos_phi = math.cos(sol.phi_r)
    _check_condition(geom, cos_phi)
    r = geom.constriction_radius
    value = math.pi * P_g * r * r * _force_factor(sol.m, cos_phi)
    return max(value, 0.0)


@lru_cache(maxsize=256)
def _m_at_gamma_min(l_over_r):
    return solve_membrane(l_over_r, GAMMA_MIN).m


def max_force(P_g, geom: ActuatorGeometry) -> float:
    """Largest force the muscle delivers at ``P_g`` (value at ``GAMMA_MIN``)."""
    return force(P_g, geom, GAMMA_MIN)


def _invert_factor(l_over_r, target, m_lo, max_iter=100):
    """Find m with force factor equal to ``target`` (array), m in [m_lo, 1/2].

    The factor decreases monotonically in m.  Secant steps on the log-factor
    are confined to the current bracket; a step that leaves it is replaced
    by bisection.
    """
    target = np.asarray(target, dtype=float)
    lo = np.full(target.shape, float(m_lo))
    hi = np.full(target.shape, 0.5)
    log_t = np.log(target)
    _, _, c_lo = _membrane_state(l_over_r, lo)
    prev_x = lo
    prev_g = np.log(_force_factor(lo, c_lo)) - log_t
    x = 0.5 * (lo + hi)
    active = np.ones(target.shape, dtype=bool)
    for _ in range(max_iter):
        _, _, c = _membrane_state(l_over_r, x[active])
        with np.errstate(divide="ignore"):
            g_act = np.log(np.maximum(_force_factor(x[active], c), 1e-300)) - log_t[active]
        g = np.zeros(target.shape)
        g[active] = g_act
        lo = np.where(active & (g > 0.0), x, lo)
        hi = np.where(active & (g < 0.0), x, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            new = x - g * (x - prev_x) / (g - prev_g)
        bad = ~np.isfinite(new) | (new < lo) | (new > hi)
        new = np.where(bad, 0.5 * (lo + hi), new)
        done = (np.abs(g) <= 1e-13) | (hi - lo <= 2e-15 * hi)
        prev_x, prev_g = x, g
        x = np.where(active & ~done, new, x)
        active &= ~done
        if not np.any(active):
            return x
    raise ConvergenceError("force inversion did not converge")


def gamma_from_force(F_target, P_g, geom: ActuatorGeometry, unreachable="raise"):
    """Contraction at which the muscle delivers ``F_target`` at ``P_g``.

    Accepts scalars or broadcastable arrays.  With ``unreachable="slack"``
    targets above the attainable maximum map to ``gamma = 0`` instead of
    raising :class:`UnreachableForceError`.
    """
    if unreachable not in ("raise", "slack"):
        raise ValueError("unreachable must be 'raise' or 'slack'")
    F_a, P_a = np.broadcast_arrays(np.asarray(F_target, dtype=float), np.asarray(P_g, dtype=float))
    if np.any(P_a < 0) or np.any(F_a < 0):
        raise DomainError("force and pressure must be >= 0")
    L = geom.l_over_r
    gzf = zero_force_gamma(L)
    r = geom.constriction_radius
    area_p = math.pi * r * r * P_a
    m_lo = _m_at_gamma_min(L)
    _, _, c_lo = _membrane_state(L, np.asarray(m_lo))
    fmax = area_p * _force_factor(m_lo, c_lo)
    reach = F_a <= fmax
    if unreachable == "raise" and not np.all(reach):
        worst = float(np.max(fmax[~reach])) if np.ndim(fmax) else float(fmax)
        raise UnreachableForceError(
            f"force {float(np.max(F_a[~reach])):.6g} N exceeds attainable maximum "
            f"{worst:.6g} N at this pressure",
            max_force=worst,
        )
    gamma = np.zeros(F_a.shape)
    gamma[reach & (F_a <= 0.0)] = gzf
    solve = reach & (F_a > 0.0)
    if np.any(solve):
        target = F_a[solve] / area_p[solve]
        m = _invert_factor(L, target, m_lo)
        _, g, c = _membrane_state(L, m)
        min_w = math.pi * r / np.min(c)
        if not geom.layflat_width > min_w:
            raise ConditionError(
                f"zero-parallel-force condition violated: layflat width {geom.layflat_width:g} m "
                f"must exceed {min_w:.6g} m",
                min_width=min_w,
            )
        gamma[solve] = np.clip(g, GAMMA_MIN, gzf)
    if gamma.ndim == 0:
        return float(gamma)
    return gamma
