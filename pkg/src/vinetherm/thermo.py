"""Phase-change pressure, lumped thermal equilibria and radiosity networks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, OutOfRangeError, ValidationError

SIGMA = 5.670374419e-8  # W m^-2 K^-4
P_ATM = 101325.0  # Pa
R_GAS = 8.314462618  # J mol^-1 K^-1

# Novec 7000 (methoxy-heptafluoropropane) manufacturer datasheet values:
# boiling point 34 C, heat of vaporization 142 kJ/kg, molecular weight 200 g/mol,
# critical temperature 165 C.
NOVEC7000_BOILING_K = 307.15
NOVEC7000_HVAP = 142e3 * 0.200  # J/mol
NOVEC7000_TCRIT = 438.15
# Default validity ceiling.  Above the critical temperature the curve is a
# plain extrapolation, kept so the force-saturation limit stays reachable.
VAPOR_T_MAX = 500.0


# ---------------------------------------------------------------------------
# Vapor-pressure curves

@dataclass(frozen=True)
class ClausiusClapeyron:
    """``P = P_ref exp(-(H/R)(1/T - 1/T_ref))`` with constant enthalpy ``H``."""

    enthalpy: float = NOVEC7000_HVAP
    T_ref: float = NOVEC7000_BOILING_K
    P_ref: float = P_ATM
    T_min: float = 200.0
    T_max: float = VAPOR_T_MAX

    def __post_init__(self):
        if not (self.enthalpy > 0 and self.T_ref > 0 and self.P_ref > 0):
            raise ValidationError("Clausius-Clapeyron parameters must be positive")
        if not 0 < self.T_min < self.T_max:
            raise ValidationError("vapor model needs 0 < T_min < T_max")

    def __call__(self, T):
        return self.P_ref * np.exp(-(self.enthalpy / R_GAS) * (1.0 / T - 1.0 / self.T_ref))


@dataclass(frozen=True)
class Antoine:
    """``log10(P / Pa) = A - B / (C + T)`` with T in kelvin."""

    A: float
    B: float
    C: float
    T_min: float = 200.0
    T_max: float = VAPOR_T_MAX

    def __post_init__(self):
        if not self.B > 0:
            raise ValidationError("Antoine B must be positive for a rising curve")
        if not 0 < self.T_min < self.T_max:
            raise ValidationError("vapor model needs 0 < T_min < T_max")
        if self.C + self.T_min <= 0:
            raise ValidationError("Antoine C + T_min must be positive")

    @classmethod
    def through(cls, T1, P1, T2, P2, C=-40.0, **kw):
        """Coefficients passing exactly through two (T, P) points."""
        l1, l2 = math.log10(P1), math.log10(P2)
        B = (l1 - l2) / (1.0 / (C + T2) - 1.0 / (C + T1))
        A = l1 + B / (C + T1)
        return cls(A, B, C, **kw)

    def __call__(self, T):
        return 10.0 ** (self.A - self.B / (self.C + T))


@dataclass(frozen=True)
class FluidState:
    """Working-fluid description for one muscle.

    ``dead_volume``/``max_volume`` bound the linear volume model used only
    when ``n_air > 0``.
    """

    vapor_model: ClausiusClapeyron | Antoine = field(default_factory=ClausiusClapeyron)
    n_air: float = 0.0
    fill_volume: float = 1.5e-6
    boiling_point_ref: float = NOVEC7000_BOILING_K
    dead_volume: float = 2e-6
    max_volume: float = 30e-6

    def __post_init__(self):
        if self.n_air < 0:
            raise ValidationError("n_air must be >= 0")
        if not (self.fill_volume > 0 and 0 < self.dead_volume < self.max_volume):
            raise ValidationError("volumes must satisfy fill > 0 and 0 < dead < max")
        model = self.vapor_model
        if not model.T_min < self.boiling_point_ref < model.T_max:
            raise ValidationError("boiling_point_ref outside vapor-model validity range")
        p_b = float(model(self.boiling_point_ref))
        if abs(p_b - P_ATM) > 1e-3 * P_ATM:
            raise ValidationError(
                f"thermo rule violated: vapor pressure at boiling_point_ref is {p_b:.6g} Pa, "
                f"must equal {P_ATM:g} Pa within 0.1%"
            )

    def volume(self, gamma, gamma_zf):
        """Linear interpolation between dead and maximum volume in gamma."""
        frac = np.clip(np.asarray(gamma, dtype=float) / gamma_zf, 0.0, 1.0)
        return self.dead_volume + (self.max_volume - self.dead_volume) * frac


def vapor_pressure(T, fluid: FluidState):
    """Absolute saturation pressure (Pa) of the working fluid."""
    T_a = np.asarray(T, dtype=float)
    model = fluid.vapor_model
    if np.any(~(T_a >= model.T_min)) or np.any(~(T_a <= model.T_max)):
        raise OutOfRangeError(
            f"temperature outside vapor-model range [{model.T_min:g}, {model.T_max:g}] K"
        )
    p = model(T_a)
    return float(p) if np.ndim(T) == 0 else p


def gauge_pressure(T, fluid: FluidState, V=None):
    """Gauge pressure (Pa) inside a muscle; zero while below atmospheric.

    ``V`` (m^3) is only needed when the fluid carries residual air.
    """
    p = np.asarray(vapor_pressure(T, fluid), dtype=float)
    if fluid.n_air > 0:
        if V is None:
            raise DomainError("volume required when n_air > 0")
        V = np.asarray(V, dtype=float)
        if np.any(V <= 0):
            raise DomainError("volume must be positive")
        p = p + fluid.n_air * R_GAS * np.asarray(T, dtype=float) / V
    pg = np.maximum(p - P_ATM, 0.0)
    return float(pg) if pg.ndim == 0 else pg


# ---------------------------------------------------------------------------
# Lumped thermal nodes

@dataclass(frozen=True)
class ThermalNode:
    area: float = 4.5e-2 * 3.7e-2
    emissivity: float = 0.9
    absorptivity: float = 0.9
    loss_coeff: float = 10.0
    heat_capacity: float | None = None
    temperature: float = 293.15

    def __post_init__(self):
        if not (0 < self.emissivity <= 1 and 0 < self.absorptivity <= 1):
            raise ValidationError("emissivity and absorptivity must lie in (0, 1]")
        if not self.temperature > 0 or not self.area > 0:
            raise ValidationError("node temperature and area must be positive")
        if self.loss_coeff < 0:
            raise ValidationError("loss coefficient must be >= 0")


def equilibrium_temp(Q_abs, node: ThermalNode, T_inf, mode="linear", tol=1e-6, max_iter=100):
    """Steady temperature of a lumped node under incident flux ``Q_abs`` (W/m^2).

    ``linear`` balances absorbed flux against the loss coefficient only;
    ``reradiating`` adds gray emission to the surroundings at ``T_inf``.
    Arrays of flux are accepted.
    """
    Q = np.asarray(Q_abs, dtype=float)
    if np.any(Q < 0):
        raise DomainError("absorbed flux must be >= 0")
    h, a, e = node.loss_coeff, node.absorptivity, node.emissivity
    gain = a * Q
    if mode == "linear":
        if not h > 0:
            raise DomainError("linear mode needs a positive loss coefficient")
        T = T_inf + gain / h
        return float(T) if T.ndim == 0 else T
    if mode != "reradiating":
        raise ValueError(f"unknown mode {mode!r}")

    def resid(T):
        return h * (T - T_inf) + e * SIGMA * (T ** 4 - T_inf ** 4) - gain

    # the residual is increasing and convex in T, so Newton from an upper
    # bound descends monotonically onto the root
    T_rad = (T_inf ** 4 + gain / (e * SIGMA)) ** 0.25
    T = T_rad if h == 0 else np.minimum(T_rad, T_inf + gain / h)
    for _ in range(max_iter):
        r = resid(T)
        if np.all(np.abs(r) < tol):
            return float(T) if T.ndim == 0 else T
        T = np.maximum(T - r / (h + 4.0 * e * SIGMA * T ** 3), T_inf)
    raise ConvergenceError("reradiating equilibrium did not converge")


def _flux_schedule(Q) -> Callable[[float], float]:
    if callable(Q):
        return Q
    if np.ndim(Q) == 0:
        q = float(Q)
        return lambda t: q
    steps = sorted((float(t0), float(q)) for t0, q in Q)

    def sched(t):
        value = 0.0
        for t0, q in steps:
            if t >= t0:
                value = q
        return value

    return sched


def transient_temp(node: ThermalNode, Q_abs, tau, dt, t_end, T_inf, mode="linear", T0=None):
    """First-order lag toward the equilibrium temperature.

    ``Q_abs`` is a constant, a callable ``q(t)`` or a sequence of
    ``(t_start, flux)`` steps.  Flux is held constant over each step and the
    lag is integrated exactly over it.  Returns ``(times, temperatures)``.
    """
    if not tau > 0:
        raise DomainError("tau must be positive")
    if not 0 < dt <= tau / 10.0:
        raise DomainError(f"dt = {dt:g} s too large; must be <= tau/10 = {tau / 10:g} s")
    q = _flux_schedule(Q_abs)
    n = int(math.floor(t_end / dt + 1e-9))
    times = dt * np.arange(n + 1)
    temps = np.empty(n + 1)
    temps[0] = node.temperature if T0 is None else T0
    decay = math.exp(-dt / tau)
    for k in range(n):
        T_eq = equilibrium_temp(q(times[k]), node, T_inf, mode)
        temps[k + 1] = T_eq + (temps[k] - T_eq) * decay
    return times, temps


def lag_step(T, T_eq, dt, tau):
    """One exact first-order step; ``tau == 0`` jumps to equilibrium."""
    if tau == 0:
        return T_eq
    return T_eq + (T - T_eq) * math.exp(-dt / tau)


def plate_flux_estimate(T_plate, T_amb, h, variant="physical"):
    """Incident flux inferred from a black plate's equilibrium temperature.

    ``literal``: ``sigma T_plate^4 - h (T_plate - T_amb)``, the estimator as
    usually quoted.
    ``physical``: ``sigma (T_plate^4 - T_amb^4) + h (T_plate - T_amb)``,
    the balance of absorbed flux against emission and convection.
    """
    if variant == "literal":
        return SIGMA * T_plate ** 4 - h * (T_plate - T_amb)
    if variant == "physical":
        if T_plate < T_amb:
            raise DomainError("physical variant needs T_plate >= T_amb")
        return SIGMA * (T_plate ** 4 - T_amb ** 4) + h * (T_plate - T_amb)
    raise ValueError(f"unknown variant {variant!r}")


# ---------------------------------------------------------------------------
# Radiosity network

@dataclass(frozen=True)
class RadiosityNetwork:
    """Gray diffuse surfaces exchanging radiation through view factors.

    ``tol`` bounds both reciprocity and row-sum defects.
    """

    nodes: Sequence[ThermalNode]
    view_factors: np.ndarray
    environment_temp: float = 293.15
    tol: float = 1e-5

    def __post_init__(self):
        F = np.asarray(self.view_factors, dtype=float)
        n = len(self.nodes)
        if F.shape != (n, n):
            raise ValidationError(f"view-factor matrix must be {n}x{n}")
        if np.any(F < 0):
            raise ValidationError("view factors must be >= 0")
        rows = F.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > self.tol):
            i = int(np.argmax(np.abs(rows - 1.0)))
            raise ValidationError(f"view-factor row {i} sums to {rows[i]:.12g}, not 1")
        A = np.array([nd.area for nd in self.nodes])
        AF = A[:, None] * F
        scale = max(float(A.max()), 1e-300)
        if np.any(np.abs(AF - AF.T) > self.tol * scale):
            raise ValidationError("view factors violate reciprocity A_i F_ij = A_j F_ji")
        object.__setattr__(self, "view_factors", F)


@dataclass(frozen=True)
class RadiositySolution:
    temperatures: np.ndarray
    radiosities: np.ndarray
    power: np.ndarray  # injected (free nodes) or required (fixed nodes), W
    radiative_gain: np.ndarray  # W
    convective_loss: np.ndarray  # W
    energy_residual: float
    iterations: int


def radiosity_solve(net: RadiosityNetwork, fixed_temps, injected=None, tol=1e-6, max_iter=100):
    """Solve the gray-diffuse enclosure with convective losses.

    ``fixed_temps`` maps node index to a held temperature (at least one);
    ``injected`` maps free-node index to supplied power (W, default 0).
    Free nodes satisfy ``P_i + A_i (G_i - J_i) = h_i A_i (T_i - T_inf)`` with
    irradiation ``G = F J`` and ``J_i = eps_i sigma T_i^4 + (1 - eps_i) G_i``.
    """
    n = len(net.nodes)
    fixed = {int(k): float(v) for k, v in dict(fixed_temps).items()}
    if not fixed:
        raise DomainError("at least one node must have a fixed temperature")
    if any(not 0 <= k < n for k in fixed) or any(v <= 0 for v in fixed.values()):
        raise DomainError("fixed temperatures must name valid nodes and be positive")
    injected = {int(k): float(v) for k, v in dict(injected or {}).items()}
    if any(k in fixed or not 0 <= k < n for k in injected):
        raise DomainError("power can only be injected into free nodes")

    F = net.view_factors
    A = np.array([nd.area for nd in net.nodes])
    eps = np.array([nd.emissivity for nd in net.nodes])
    h = np.array([nd.loss_coeff for nd in net.nodes])
    T_inf = net.environment_temp
    P = np.zeros(n)
    for k, v in injected.items():
        P[k] = v
    free = np.array([i for i in range(n) if i not in fixed], dtype=int)
    T = np.full(n, max(fixed.values()))
    for k, v in fixed.items():
        T[k] = v

    eye = np.eye(n)
    # closure is linear in J for given T
    M = eye - (1.0 - eps)[:, None] * F

    def radiosity(T):
        return np.linalg.solve(M, eps * SIGMA * T ** 4)

    def residuals(T, J):
        G = F @ J
        closure = J - eps * SIGMA * T ** 4 - (1.0 - eps) * G
        balance = P + A * (G - J) - h * A * (T - T_inf)
        return closure, balance[free]

    nf = len(free)
    J = radiosity(T)
    it = 0
    for it in range(1, max_iter + 1):
        closure, balance = residuals(T, J)
        if np.max(np.abs(balance), initial=0.0) < tol and np.max(np.abs(closure)) < tol:
            break
        jac = np.zeros((n + nf, n + nf))
        jac[:n, :n] = M
        jac[n:, :n] = (A[:, None] * (F - eye))[free]
        for c, i in enumerate(free):
            jac[i, n + c] = -4.0 * eps[i] * SIGMA * T[i] ** 3
            jac[n + c, n + c] = -h[i] * A[i]
        step = np.linalg.solve(jac, -np.concatenate([closure, balance]))
        dT = step[n:]
        # keep temperatures positive
        lam = 1.0
        while np.any(T[free] + lam * dT <= 0.0):
            lam *= 0.5
        J = J + lam * step[:n]
        T[free] = T[free] + lam * dT
    else:
        raise ConvergenceError("radiosity network did not converge")

    G = F @ J
    gain = A * (G - J)
    loss = h * A * (T - T_inf)
    power = P.copy()
    for k in fixed:
        power[k] = loss[k] - gain[k]
    # radiation is internal to the enclosure: supplied power must equal convective loss
    residual = float(abs(np.sum(power) - np.sum(loss)))
    return RadiositySolution(T.copy(), J, power, gain, loss, residual, it)
