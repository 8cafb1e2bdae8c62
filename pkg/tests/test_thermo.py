import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from vinetherm import thermo
from vinetherm.errors import DomainError, OutOfRangeError, ValidationError

FLUID = thermo.FluidState()
SIGMA = 5.670374419e-8


def random_network(rng, n):
    """Reciprocal, row-stochastic view factors built from a symmetric exchange matrix."""
    areas = rng.uniform(0.01, 0.2, n)
    S = rng.uniform(0.0, 1.0, (n, n))
    S = 0.5 * (S + S.T)
    # scale so every row of S / A stays below one, leaving room for self-view
    S *= 0.9 * np.min(areas) / np.max(S.sum(axis=1))
    F = S / areas[:, None]
    np.fill_diagonal(F, 0.0)
    F[np.diag_indices(n)] = 1.0 - F.sum(axis=1)
    nodes = [thermo.ThermalNode(area=a, emissivity=e, loss_coeff=h)
             for a, e, h in zip(areas, rng.uniform(0.2, 1.0, n), rng.uniform(0.0, 20.0, n))]
    return thermo.RadiosityNetwork(nodes, F, environment_temp=293.15)


class TestVaporPressure:
    def test_boiling_point(self):
        assert thermo.vapor_pressure(307.15, FLUID) == pytest.approx(101325.0, rel=1e-3)

    def test_closed_form_at_320(self):
        H = thermo.NOVEC7000_HVAP
        want = 101325.0 * math.exp(-(H / 8.314462618) * (1 / 320.0 - 1 / 307.15))
        assert thermo.vapor_pressure(320.0, FLUID) == pytest.approx(want, rel=1e-14)

    def test_monotone(self):
        T = np.linspace(250.0, 450.0, 300)
        assert np.all(np.diff(thermo.vapor_pressure(T, FLUID)) > 0)

    def test_out_of_range(self):
        with pytest.raises(OutOfRangeError):
            thermo.vapor_pressure(150.0, FLUID)
        with pytest.raises(OutOfRangeError):
            thermo.vapor_pressure(600.0, FLUID)

    def test_antoine_through_points(self):
        model = thermo.Antoine.through(307.15, 101325.0, 330.0, 2.2e5)
        assert model(307.15) == pytest.approx(101325.0, rel=1e-12)
        assert model(330.0) == pytest.approx(2.2e5, rel=1e-12)
        fluid = thermo.FluidState(vapor_model=model)
        assert thermo.vapor_pressure(320.0, fluid) > 101325.0

    def test_calibration_rule(self):
        off = thermo.ClausiusClapeyron(T_ref=307.15 * 1.01)
        with pytest.raises(ValidationError, match="thermo rule"):
            thermo.FluidState(vapor_model=off)


class TestGaugePressure:
    def test_zero_at_boiling(self):
        assert thermo.gauge_pressure(307.15, FLUID) == pytest.approx(0.0, abs=1e-6)

    def test_zero_below_boiling(self):
        assert thermo.gauge_pressure(295.0, FLUID) == 0.0

    def test_above_boiling(self):
        assert thermo.gauge_pressure(320.0, FLUID) == pytest.approx(
            thermo.vapor_pressure(320.0, FLUID) - 101325.0, rel=1e-14)

    def test_continuous_nondecreasing(self):
        T = np.linspace(290.0, 330.0, 200)
        pg = thermo.gauge_pressure(T, FLUID)
        assert np.all(np.diff(pg) >= 0)
        assert np.max(np.diff(pg)) < 2e3  # no jump across the switch

    def test_residual_air(self):
        fluid = thermo.FluidState(n_air=1e-5)
        with pytest.raises(DomainError):
            thermo.gauge_pressure(300.0, fluid)
        pg = thermo.gauge_pressure(300.0, fluid, V=5e-6)
        want = thermo.vapor_pressure(300.0, fluid) + 1e-5 * 8.314462618 * 300.0 / 5e-6 - 101325.0
        assert pg == pytest.approx(max(want, 0.0))

    def test_volume_model(self):
        assert FLUID.volume(0.0, 0.45) == pytest.approx(FLUID.dead_volume)
        assert FLUID.volume(0.45, 0.45) == pytest.approx(FLUID.max_volume)


def _bisect(f, lo, hi, tol=1e-9):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if f(mid) < 0 else (lo, mid)
    return 0.5 * (lo + hi)


class TestEquilibrium:
    @pytest.mark.parametrize("mode", ["linear", "reradiating"])
    def test_zero_flux(self, mode):
        assert thermo.equilibrium_temp(0.0, thermo.ThermalNode(), 293.15, mode) == pytest.approx(293.15, abs=1e-9)

    def test_linear(self):
        node = thermo.ThermalNode(absorptivity=0.9, loss_coeff=15.0)
        assert thermo.equilibrium_temp(500.0, node, 293.15, "linear") == pytest.approx(323.15)

    def test_reradiating_against_bisection(self):
        node = thermo.ThermalNode(absorptivity=1.0, emissivity=1.0, loss_coeff=10.0)
        got = thermo.equilibrium_temp(800.0, node, 293.0, "reradiating")
        want = _bisect(lambda T: 10 * (T - 293) + SIGMA * (T ** 4 - 293.0 ** 4) - 800.0, 293.0, 500.0)
        assert got == pytest.approx(want, abs=1e-4)

    @given(st.floats(1.0, 5000.0))
    def test_reradiation_lowers_temperature(self, Q):
        node = thermo.ThermalNode()
        lin = thermo.equilibrium_temp(Q, node, 293.15, "linear")
        rad = thermo.equilibrium_temp(Q, node, 293.15, "reradiating")
        assert 293.15 < rad < lin

    def test_array_input(self):
        Q = np.array([0.0, 100.0, 1000.0])
        T = thermo.equilibrium_temp(Q, thermo.ThermalNode(), 293.15, "reradiating")
        assert T.shape == (3,) and np.all(np.diff(T) > 0)

    def test_negative_flux(self):
        with pytest.raises(DomainError):
            thermo.equilibrium_temp(-1.0, thermo.ThermalNode(), 293.15)


class TestTransient:
    def test_one_time_constant(self):
        node = thermo.ThermalNode()
        T_eq = thermo.equilibrium_temp(500.0, node, 293.15)
        t, T = thermo.transient_temp(node, 500.0, 20.0, 0.5, 20.0, 293.15)
        frac = (T[-1] - 293.15) / (T_eq - 293.15)
        assert frac == pytest.approx(1 - math.exp(-1), abs=0.005)

    def test_constant_at_ambient(self):
        t, T = thermo.transient_temp(thermo.ThermalNode(), 0.0, 10.0, 1.0, 30.0, 293.15)
        assert np.all(T == 293.15)

    def test_five_time_constants(self):
        node = thermo.ThermalNode()
        T_eq = thermo.equilibrium_temp(500.0, node, 293.15, "reradiating")
        t, T = thermo.transient_temp(node, 500.0, 10.0, 1.0, 50.0, 293.15, "reradiating")
        assert abs(T[-1] - T_eq) <= 0.01 * (T_eq - 293.15)

    def test_step_schedule(self):
        t, T = thermo.transient_temp(thermo.ThermalNode(), [(0.0, 0.0), (10.0, 400.0)], 5.0, 0.5, 20.0, 293.15)
        assert np.all(T[t <= 10.0] == 293.15) and T[-1] > 293.15

    def test_dt_too_large(self):
        with pytest.raises(DomainError):
            thermo.transient_temp(thermo.ThermalNode(), 100.0, 10.0, 2.0, 30.0, 293.15)

    def test_lag_step(self):
        assert thermo.lag_step(300.0, 320.0, 1.0, 0.0) == 320.0
        assert thermo.lag_step(300.0, 320.0, 1.0, 1.0) == pytest.approx(320 - 20 * math.exp(-1))


class TestPlateFlux:
    def test_literal_variant_at_ambient(self):
        assert thermo.plate_flux_estimate(293.0, 293.0, 10.0, "literal") == pytest.approx(SIGMA * 293.0 ** 4)

    def test_physical_variant_at_ambient(self):
        assert thermo.plate_flux_estimate(293.0, 293.0, 10.0, "physical") == 0.0

    def test_physical_value(self):
        want = SIGMA * (350.0 ** 4 - 293.0 ** 4) + 570.0
        assert thermo.plate_flux_estimate(350.0, 293.0, 10.0) == pytest.approx(want, rel=1e-14)

    def test_physical_needs_hot_plate(self):
        with pytest.raises(DomainError):
            thermo.plate_flux_estimate(280.0, 293.0, 10.0, "physical")


class TestRadiosity:
    def test_isothermal_blackbody(self):
        nodes = [thermo.ThermalNode(area=0.1, emissivity=1.0, loss_coeff=0.0) for _ in range(3)]
        F = np.full((3, 3), 1 / 3)
        net = thermo.RadiosityNetwork(nodes, F, environment_temp=400.0)
        sol = thermo.radiosity_solve(net, {0: 400.0, 1: 400.0, 2: 400.0})
        np.testing.assert_allclose(sol.radiosities, SIGMA * 400.0 ** 4, rtol=1e-12)
        np.testing.assert_allclose(sol.radiative_gain, 0.0, atol=1e-10)

    def test_adiabatic_floats_to_source(self):
        nodes = [thermo.ThermalNode(area=0.1, emissivity=1.0, loss_coeff=0.0) for _ in range(2)]
        net = thermo.RadiosityNetwork(nodes, [[0.0, 1.0], [1.0, 0.0]])
        sol = thermo.radiosity_solve(net, {0: 500.0})
        assert sol.temperatures[1] == pytest.approx(500.0, abs=1e-6)

    def test_three_node_against_root_finder(self):
        A = np.array([0.05, 0.02, 0.02])
        # heater sees the near muscle well and the shaded far muscle weakly
        F01, F02, F12 = 0.30, 0.05, 0.10
        F = np.array([
            [0.0, F01, F02],
            [A[0] * F01 / A[1], 0.0, F12],
            [A[0] * F02 / A[2], F12 * A[1] / A[2], 0.0],
        ])
        np.fill_diagonal(F, 1.0 - F.sum(axis=1))
        eps = np.array([0.9, 0.8, 0.8])
        h = np.array([0.0, 10.0, 10.0])
        nodes = [thermo.ThermalNode(area=a, emissivity=e, loss_coeff=k) for a, e, k in zip(A, eps, h)]
        net = thermo.RadiosityNetwork(nodes, F, environment_temp=293.15)
        sol = thermo.radiosity_solve(net, {0: 600.0})

        def full(x):
            J = x[:3]
            T = np.array([600.0, x[3], x[4]])
            G = F @ J
            closure = J - eps * SIGMA * T ** 4 - (1 - eps) * G
            bal = A * (G - J) - h * A * (T - 293.15)
            return np.concatenate([closure, bal[1:]])

        x0 = np.array([SIGMA * 600.0 ** 4, SIGMA * 350.0 ** 4, SIGMA * 350.0 ** 4, 350.0, 350.0])
        ref = optimize.root(full, x0, method="hybr", tol=1e-14)
        assert ref.success
        np.testing.assert_allclose(sol.temperatures[1:], ref.x[3:], atol=1e-3)
        assert sol.temperatures[1] > sol.temperatures[2]

    def test_energy_conserved_on_random_networks(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            n = int(rng.integers(2, 7))
            net = random_network(rng, n)
            fixed = {0: float(rng.uniform(400.0, 900.0))}
            injected = {i: float(rng.uniform(0.0, 5.0)) for i in range(1, n) if rng.random() < 0.5}
            sol = thermo.radiosity_solve(net, fixed, injected)
            assert sol.energy_residual < 1e-6

    def test_view_factor_tolerances(self):
        nodes = [thermo.ThermalNode(area=0.1) for _ in range(2)]
        base = np.array([[0.5, 0.5], [0.5, 0.5]])
        thermo.RadiosityNetwork(nodes, base + np.array([[1e-6, 0.0], [0.0, 0.0]]))
        with pytest.raises(ValidationError):
            thermo.RadiosityNetwork(nodes, base + np.array([[1e-3, 0.0], [0.0, 0.0]]))
        with pytest.raises(ValidationError):
            thermo.RadiosityNetwork(nodes, [[0.5, 0.5], [0.7, 0.3]], tol=1e-9)
        with pytest.raises(ValidationError):
            thermo.RadiosityNetwork(nodes, [[1.2, -0.2], [0.5, 0.5]])

    def test_requires_fixed_node(self):
        nodes = [thermo.ThermalNode(area=0.1) for _ in range(2)]
        net = thermo.RadiosityNetwork(nodes, [[0.0, 1.0], [1.0, 0.0]])
        with pytest.raises(DomainError):
            thermo.radiosity_solve(net, {})
