"""Quasistatic grow-and-steer loop: heat field -> temperature -> pressure ->
contraction -> body shape.

Every step first senses flux at the muscle midpoints, relaxes each muscle's
temperature toward equilibrium, converts it to gauge pressure and then to the
contraction at which the muscle balances the backbone.  The chain shape is
re-solved from the new contractions and the tip grows unless it would enter
an obstacle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import heatfield, kinematics, ppam, thermo
from .errors import SimulationError, ValidationError, VineError

ANGLE_MODELS = ("constant-curvature", "alternating")
TRAJECTORY_HEADER = ["time", "index", "x1", "y1", "x2", "y2", "T1", "T2", "gamma1", "gamma2"]


@dataclass(frozen=True)
class RobotConfig:
    """Robot description.

    ``base_position`` is the backbone centre at the base and
    ``base_heading`` the initial growth direction (rad, clockwise from +y).
    ``thermal_tau = 0`` puts every muscle at its equilibrium temperature.
    ``angle_model`` picks the interface-angle rule used for the body:
    ``"constant-curvature"`` (each section bends by its own contraction
    difference) or ``"alternating"`` (the sequential trapezoid recurrence,
    which turns infeasible under strongly non-uniform heating).
    """

    spine: kinematics.SpineConfig = field(default_factory=kinematics.SpineConfig)
    actuator: ppam.ActuatorGeometry = field(default_factory=ppam.ActuatorGeometry)
    fluid: thermo.FluidState = field(default_factory=thermo.FluidState)
    chain: kinematics.ChainGeometry = field(default_factory=kinematics.ChainGeometry)
    thermal: thermo.ThermalNode = field(default_factory=thermo.ThermalNode)
    thermal_mode: str = "reradiating"
    base_position: tuple[float, float] = (0.0, 0.0)
    base_heading: float = 0.0
    growth_rate: float = 0.005
    shading_factor: float = 0.2
    thermal_tau: float = 0.0
    initial_segments: int = 1
    max_segments: int = 500
    angle_model: str = "constant-curvature"

    def __post_init__(self):
        object.__setattr__(self, "base_position", tuple(float(v) for v in self.base_position))
        if self.growth_rate < 0:
            raise ValidationError("growth_rate must be >= 0")
        if not 0.0 <= self.shading_factor <= 1.0:
            raise ValidationError("shading_factor must lie in [0, 1]")
        if self.thermal_tau < 0:
            raise ValidationError("thermal_tau must be >= 0")
        if self.thermal_mode not in ("linear", "reradiating"):
            raise ValidationError("thermal_mode must be 'linear' or 'reradiating'")
        if self.angle_model not in ANGLE_MODELS:
            raise ValidationError(f"angle_model must be one of {ANGLE_MODELS}")
        if not 0 <= self.initial_segments <= self.max_segments:
            raise ValidationError("initial_segments must lie in [0, max_segments]")

    def mirrored(self):
        x, y = self.base_position
        return replace(self, base_position=(-x, y), base_heading=-self.base_heading)


@dataclass
class SimState:
    time: float
    gammas: np.ndarray  # (N, 2): side 1, side 2
    temps: np.ndarray  # (N, 2)
    accumulator: float = 0.0
    pose: kinematics.ChainPose | None = None
    blocked: bool = False

    @property
    def n_segments(self):
        return len(self.gammas)


@dataclass(frozen=True)
class Sample:
    time: float
    side1: np.ndarray
    side2: np.ndarray
    temps: np.ndarray
    gammas: np.ndarray
    blocked: bool


@dataclass
class RobotTrajectory:
    samples: list[Sample] = field(default_factory=list)

    def append(self, sample: Sample):
        if self.samples and not sample.time > self.samples[-1].time:
            raise ValidationError("trajectory timestamps must increase strictly")
        self.samples.append(sample)

    def __len__(self):
        return len(self.samples)

    @property
    def final(self) -> Sample:
        return self.samples[-1]

    def rows(self):
        """One row per sample per section; points are the section's far end."""
        for s in self.samples:
            for i in range(len(s.gammas)):
                yield [
                    s.time, i + 1,
                    s.side1[i + 1, 0], s.side1[i + 1, 1],
                    s.side2[i + 1, 0], s.side2[i + 1, 1],
                    s.temps[i, 0], s.temps[i, 1],
                    s.gammas[i, 0], s.gammas[i, 1],
                ]


# ---------------------------------------------------------------------------

def world_pose(gammas, cfg: RobotConfig) -> kinematics.ChainPose:
    g = np.asarray(gammas, dtype=float).reshape(-1, 2)
    thetas = None
    if cfg.angle_model == "constant-curvature":
        thetas = kinematics.constant_curvature_angles(g, cfg.chain)
    local = kinematics.chain_pose(g, cfg.chain, thetas)
    # chain frame has side 1 at the origin; centre the backbone on the base
    d = cfg.chain.d
    shifted = kinematics.ChainPose(
        local.side1 - (0.5 * d, 0.0), local.side2 - (0.5 * d, 0.0),
        local.headings, local.thetas, local.end_heading,
    )
    return kinematics.transform_pose(shifted, cfg.base_position, cfg.base_heading)


def initial_state(scene: heatfield.HeatScene, cfg: RobotConfig) -> SimState:
    n = cfg.initial_segments
    gammas = np.zeros((n, 2))
    temps = np.full((n, 2), scene.ambient_temp)
    return SimState(0.0, gammas, temps, 0.0, world_pose(gammas, cfg))


def shading(cos_offaxis, factor):
    """Attenuation of the far-side muscle.

    Graded with the sine of the angle between the section axis and the
    heater direction: broadside heaters see the full ``factor``, heaters on
    the axis none.
    """
    sin_off = np.sqrt(np.clip(1.0 - np.square(cos_offaxis), 0.0, 1.0))
    return 1.0 - (1.0 - factor) * sin_off


def sense(state: SimState, scene: heatfield.HeatScene, cfg: RobotConfig) -> np.ndarray:
    """Incident flux ``(N, 2)`` at the midpoint of each muscle.

    For each heater the muscle on the far side of the backbone is attenuated
    by :func:`shading`; the robot body casts no other shadow.
    """
    pose = state.pose
    n = state.n_segments
    q = np.zeros((n, 2))
    if n == 0:
        return q
    mid1 = 0.5 * (pose.side1[:-1] + pose.side1[1:])
    mid2 = 0.5 * (pose.side2[:-1] + pose.side2[1:])
    centre = 0.5 * (mid1 + mid2)
    h = pose.headings
    tangents = np.column_stack([np.sin(h), np.cos(h)])
    normals = np.column_stack([np.cos(h), -np.sin(h)])  # side 1 -> side 2
    for heater in scene.heaters:
        to_heater = np.asarray(heater.position) - centre
        dist = np.hypot(to_heater[:, 0], to_heater[:, 1])
        side = np.einsum("ij,ij->i", to_heater, normals)
        along = np.einsum("ij,ij->i", to_heater, tangents) / np.where(dist > 0, dist, 1.0)
        att = shading(along, cfg.shading_factor)
        for i in range(n):
            f1 = heatfield.heater_flux(scene, heater, mid1[i])
            f2 = heatfield.heater_flux(scene, heater, mid2[i])
            if side[i] > 0.0:
                f1 *= att[i]
            elif side[i] < 0.0:
                f2 *= att[i]
            q[i, 0] += f1
            q[i, 1] += f2
    return q


def _segment_of(exc, values, low, high):
    bad = np.argwhere(~((values >= low) & (values <= high)))
    return int(bad[0][0]) + 1 if len(bad) else None


def update_actuation(state: SimState, fluxes, cfg: RobotConfig, dt: float, T_inf: float):
    """New ``(temps, pressures, gammas)`` for every muscle."""
    node = cfg.thermal
    T_eq = thermo.equilibrium_temp(fluxes, node, T_inf, cfg.thermal_mode)
    temps = np.array(thermo.lag_step(state.temps, T_eq, dt, cfg.thermal_tau), dtype=float)
    model = cfg.fluid.vapor_model
    try:
        V = None
        if cfg.fluid.n_air > 0:
            V = cfg.fluid.volume(state.gammas, ppam.zero_force_gamma(cfg.actuator.l_over_r))
        pressures = np.asarray(thermo.gauge_pressure(temps, cfg.fluid, V), dtype=float)
    except VineError as exc:
        seg = _segment_of(exc, temps, model.T_min, model.T_max)
        raise type(exc)(f"segment {seg}: {exc}") from exc
    target = kinematics.spam_equilibrium_force(cfg.spine)
    gammas = ppam.gamma_from_force(target, pressures, cfg.actuator, unreachable="slack")
    return temps, pressures, np.asarray(gammas, dtype=float).reshape(temps.shape)


def collide(pose: kinematics.ChainPose, occluders, advance: float):
    """Tip points advanced by ``advance`` along the tip normal that land inside an occluder.

    Returns ``(blocked, hits)`` with ``hits`` a list of occluder indices.
    """
    e = np.array([math.sin(pose.end_heading), math.cos(pose.end_heading)])
    tips = np.array([pose.side1[-1], pose.side2[-1], 0.5 * (pose.side1[-1] + pose.side2[-1])])
    probes = tips + advance * e
    hits = [k for k, occ in enumerate(occluders) if np.any(occ.contains(probes))]
    return bool(hits), hits


def grow(state: SimState, dt: float, cfg: RobotConfig, T_inf: float, blocked=False) -> SimState:
    """Advance the tip; whole sections are appended once ``l0`` has accumulated."""
    if not dt > 0:
        raise ValidationError("dt must be positive")
    if blocked:
        return replace(state, blocked=True)
    acc = state.accumulator + cfg.growth_rate * dt
    gammas, temps = state.gammas, state.temps
    l0 = cfg.chain.l0
    n_new = 0
    # tolerance keeps growth_rate * dt == l0 at exactly one section per step
    while acc >= l0 * (1.0 - 1e-12):
        acc -= l0
        n_new += 1
    acc = max(acc, 0.0)
    if n_new:
        if state.n_segments + n_new > cfg.max_segments:
            raise SimulationError(f"segment count would exceed max_segments = {cfg.max_segments}")
        gammas = np.vstack([gammas, np.zeros((n_new, 2))])
        temps = np.vstack([temps, np.full((n_new, 2), T_inf)])
    return SimState(state.time, gammas, temps, acc, world_pose(gammas, cfg), False)


def bearing_error(pose: kinematics.ChainPose, target) -> float:
    """Absolute angle (rad) between the tip heading and the tip-to-target bearing."""
    tip = 0.5 * (pose.side1[-1] + pose.side2[-1])
    dx, dy = np.asarray(target, dtype=float) - tip
    bearing = math.atan2(dx, dy)
    err = (bearing - pose.tip_heading + math.pi) % (2.0 * math.pi) - math.pi
    return abs(err)


def step(state: SimState, scene: heatfield.HeatScene, cfg: RobotConfig, dt: float) -> SimState:
    T_inf = scene.ambient_temp
    fluxes = sense(state, scene, cfg)
    temps, _, gammas = update_actuation(state, fluxes, cfg, dt, T_inf)
    pose = world_pose(gammas, cfg)
    solved = SimState(state.time, gammas, temps, state.accumulator, pose)
    advance = solved.accumulator + cfg.growth_rate * dt
    blocked = False
    if cfg.growth_rate > 0 and scene.occluders:
        blocked, _ = collide(pose, scene.occluders, advance)
    grown = grow(solved, dt, cfg, T_inf, blocked)
    grown.time = state.time + dt
    return grown


def _sample(state: SimState) -> Sample:
    return Sample(
        state.time, state.pose.side1.copy(), state.pose.side2.copy(),
        state.temps.copy(), state.gammas.copy(), state.blocked,
    )


def run(scene: heatfield.HeatScene, cfg: RobotConfig, dt=1.0, t_end=120.0, sample_every=1,
        callback=None) -> RobotTrajectory:
    """Simulate from ``t = 0`` to ``t_end``; every ``sample_every``-th step is recorded.

    A failing step raises :class:`SimulationError` with the partial
    trajectory attached.
    """
    if not dt > 0:
        raise ValidationError("dt must be positive")
    if int(sample_every) < 1:
        raise ValidationError("sample_every must be >= 1")
    n_steps = int(math.floor(t_end / dt + 1e-9))
    traj = RobotTrajectory()
    state = initial_state(scene, cfg)
    traj.append(_sample(state))
    for k in range(1, n_steps + 1):
        try:
            state = step(state, scene, cfg, dt)
        except VineError as exc:
            raise SimulationError(f"step {k} (t = {k * dt:g} s): {exc}", trajectory=traj) from exc
        if callback is not None:
            callback(state)
        if k % int(sample_every) == 0:
            traj.append(_sample(state))
    return traj
