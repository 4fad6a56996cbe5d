"""Tests for the built-in systems."""

import math

import numpy as np
import pytest

from tdcis.core.brackets import first_integral_residual, poisson_v
from tdcis.core.errors import UnknownSystemError
from tdcis.core.fields import check_gradient
from tdcis.core.flow import StepControl, integrate, solve_ode
from tdcis.core.phase import PhasePoint
from tdcis.core.systems import (
    BUILDERS,
    ErmakovAuxiliary,
    SystemSpec,
    default_region,
    free_particle,
    make_expression_system,
    make_system,
    td_oscillator,
)
from tdcis.core.verify import check_conservation

BUILT_INS = ["free_particle", "harmonic", "pendulum", "td_oscillator", "separable_2dof"]


class TestMakeSystem:
    """Test system construction by name."""

    def test_registered_names(self):
        """Every documented system is registered."""
        assert set(BUILT_INS + ["adversarial", "custom"]) == set(BUILDERS)

    def test_unknown_name(self):
        """Unknown names raise UnknownSystemError listing the alternatives."""
        with pytest.raises(UnknownSystemError, match="harmonic"):
            make_system(SystemSpec("kepler"))

    def test_harmonic(self):
        """harmonic(1) has one integral equal to the Hamiltonian."""
        sys = make_system(SystemSpec("harmonic", {"omega": 1.0}))
        assert sys.m == 1
        assert sys.integrals[0] is sys.hamiltonian
        assert sys.compact == (True,)
        assert sys.autonomous

    def test_free_particle_dimension(self):
        """free_particle takes its dimension from m."""
        sys = make_system(SystemSpec("free_particle", m=3))
        assert sys.m == 3
        assert sys.compact == (False, False, False)

    def test_separable_2dof(self):
        """The 2-DOF oscillators split the energy."""
        sys = make_system(SystemSpec("separable_2dof", {"omega1": 1.0, "omega2": 2.0}))
        x = PhasePoint(0.0, (1.0, 0.5), (0.0, 1.0))
        total = sum(f(x) for f in sys.integrals)
        assert sys.hamiltonian(x) == pytest.approx(total)
        assert sys.separable

    @pytest.mark.parametrize(
        "spec",
        [
            SystemSpec("harmonic", {"omega": -1.0}),
            SystemSpec("harmonic", {"frequency": 1.0}),
            SystemSpec("pendulum", {"omega": 0.0}),
            SystemSpec("td_oscillator", {"omega0": 1.0, "amplitude": 1.5}),
            SystemSpec("td_oscillator", {"omega0": -1.0}),
            SystemSpec("custom", m=None, expressions={"hamiltonian": "p1"}),
            SystemSpec("adversarial", {"omega": 1.0}),
        ],
    )
    def test_invalid_parameters(self, spec):
        """Invalid parameters raise ValueError."""
        with pytest.raises(ValueError):
            make_system(spec)

    def test_custom(self):
        """custom systems come from expressions."""
        spec = SystemSpec(
            "custom",
            m=1,
            expressions={"hamiltonian": "p1^2/2 + q1^2/2", "integrals": ["p1^2/2 + q1^2/2"]},
        )
        sys = make_system(spec)
        assert sys.autonomous
        assert sys.hamiltonian(PhasePoint(0.0, (1.0,), (1.0,))) == pytest.approx(1.0)

    def test_custom_time_dependent(self):
        """A Hamiltonian using t is not autonomous."""
        sys = make_expression_system("p1^2/2 + t*q1", ["p1 + t^2/2"], m=1)
        assert not sys.autonomous
        assert abs(first_integral_residual(sys, sys.integrals[0], PhasePoint(0.5, (1.0,), (2.0,)))) < 1e-15

    def test_td_oscillator_user_frequency(self):
        """A user omega^2(t) expression is accepted."""
        sys = make_system(SystemSpec("td_oscillator", expressions={"omega_sq": "2 + cos(t)"}))
        x = PhasePoint(0.0, (1.0,), (0.0,))
        assert sys.hamiltonian(x) == pytest.approx(1.5)
        assert "omega_sq" in sys.label


class TestGradientContract:
    """Analytic gradients agree with finite differences."""

    @pytest.mark.parametrize("name", BUILT_INS + ["adversarial"])
    def test_built_in_gradients(self, name):
        """H and every F_k pass the 1e-6 relative check at 50 points."""
        spec = SystemSpec(name)
        sys = make_system(spec)
        region = default_region(spec, count=50, seed=7)
        for x in region.sample(sys):
            for f in (sys.hamiltonian, *sys.integrals):
                assert check_gradient(f, x) < 1e-6, (name, f.name, x)


class TestErmakovLewis:
    """Test the time-dependent oscillator and its invariant."""

    def test_auxiliary_initial_state(self):
        """rho(0) = omega(0)^(-1/2)."""
        aux = ErmakovAuxiliary(lambda t: 4.0)
        assert aux.initial_state() == pytest.approx([1 / math.sqrt(2.0), 0.0])

    def test_constant_frequency_is_stationary(self):
        """With constant omega, rho stays at omega^(-1/2)."""
        aux = ErmakovAuxiliary(lambda t: 4.0)
        assert aux.state_at(3.3) == pytest.approx([1 / math.sqrt(2.0), 0.0], abs=1e-12)

    @pytest.mark.parametrize("t", [3.1, -1.3, 0.25, 7.9])
    def test_state_matches_direct_integration(self, t):
        """Cached node chain agrees with a direct tight integration."""
        w = lambda s: 1.0 + 0.1 * math.sin(s)  # noqa: E731
        aux = ErmakovAuxiliary(w)
        ctl = StepControl(abs_tol=1e-13, rel_tol=1e-13)
        direct = solve_ode(aux.rhs, 0.0, aux.initial_state(), t, ctl).states[-1]
        assert np.allclose(aux.state_at(t), direct, atol=1e-9)

    def test_residual_vanishes(self):
        """dF/dt + {H, F} < 1e-8 at sampled points."""
        sys = td_oscillator(1.0, 0.1, 1.0)
        rng = np.random.default_rng(1)
        for _ in range(50):
            x = PhasePoint(rng.uniform(0, 10), (rng.uniform(-2, 2),), (rng.uniform(-2, 2),))
            assert abs(first_integral_residual(sys, sys.integrals[0], x)) < 1e-8

    def test_conservation_over_ten_units(self):
        """The invariant drifts less than 1e-6 over t in [0, 10]."""
        sys = td_oscillator(1.0, 0.1, 1.0)
        ctl = StepControl(abs_tol=1e-10, rel_tol=1e-10)
        traj = integrate(sys, PhasePoint(0.0, (1.0,), (0.3,)), 10.0, ctl)
        report = check_conservation(traj, sys.integrals[0], 1e-6)
        assert report.passed
        assert report.details["integral"] == "ErmakovLewis"

    def test_invariant_at_t_zero(self):
        """At t = 0 with omega(0) = 1 the invariant is the energy."""
        sys = td_oscillator(1.0, 0.1, 1.0)
        x = PhasePoint(0.0, (0.6,), (0.8,))
        assert sys.integrals[0](x) == pytest.approx(0.5)


class TestDefaultRegion:
    """Test per-system sampling defaults."""

    def test_pendulum_stays_in_well(self):
        """Pendulum samples lie below energy -0.1."""
        spec = SystemSpec("pendulum")
        sys = make_system(spec)
        region = default_region(spec, count=100)
        assert region.max_energy == pytest.approx(-0.1)
        assert all(sys.hamiltonian(x) < -0.1 for x in region.sample(sys))

    @pytest.mark.parametrize("name", BUILT_INS + ["adversarial", "custom"])
    def test_dimensions(self, name):
        """Regions match the system's degrees of freedom."""
        spec = SystemSpec(name, m=1) if name == "custom" else SystemSpec(name)
        expected = 2 if name in ("separable_2dof", "adversarial") else 1
        assert default_region(spec).m == expected

    def test_free_particle_involution(self):
        """Momenta commute."""
        sys = free_particle(2)
        for x in default_region(SystemSpec("free_particle", m=2), count=10).sample(sys):
            assert poisson_v(sys.integrals[0], sys.integrals[1], x) == 0.0
