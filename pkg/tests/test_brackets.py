"""Tests for Poisson brackets, vector fields and the autonomous lift."""

import numpy as np
import pytest

from tdcis.core.brackets import (
    first_integral_residual,
    gamma_h,
    gamma_t,
    hamiltonian_vector_field,
    lie_derivative,
    lift_hamiltonian,
    lift_integrals,
    lifted_vector_field,
    poisson_t,
    poisson_v,
    section_h_r,
)
from tdcis.core.errors import DimensionError
from tdcis.core.expression import parse_expression
from tdcis.core.fields import EXTENDED, Gradient, ScalarField, coordinate_field
from tdcis.core.phase import ExtendedPoint, PhasePoint
from tdcis.core.systems import (
    free_particle,
    make_expression_system,
    td_oscillator,
    td_oscillator_system,
)


def _names(m, extended):
    names = ["t"] + [f"q{k + 1}" for k in range(m)]
    if extended:
        names.append("p0")
    return names + [f"p{k + 1}" for k in range(m)]


def _polynomial(rng, m, extended, terms=6):
    """Random polynomial of degree <= 3 with small integer coefficients."""
    names = _names(m, extended)
    parts = []
    for _ in range(terms):
        degree = int(rng.integers(0, 4))
        factors = [str(int(rng.integers(-3, 4)))]
        factors += [names[int(i)] for i in rng.integers(0, len(names), degree)]
        parts.append("*".join(factors))
    return " + ".join(parts)


def _field(text, m, extended=False):
    """Field with symbolic gradients, on V*Q or T*Q."""
    names = _names(m, extended)
    expr = parse_expression(text, names)
    partials = {v: expr.derivative(v) for v in names}

    def split(env):
        d = {v: float(partials[v].evaluate(env)) for v in names}
        dq = np.array([d[f"q{k + 1}"] for k in range(m)])
        dp = np.array([d[f"p{k + 1}"] for k in range(m)])
        return Gradient(d["t"], dq, dp, d.get("p0", 0.0))

    if extended:
        return ScalarField(
            m,
            lambda t, q, p0, p: float(expr.evaluate(dict(zip(names, (t, *q, p0, *p))))),
            lambda t, q, p0, p: split(dict(zip(names, (t, *q, p0, *p)))),
            arity=EXTENDED,
            p0_free=False,
        )
    return ScalarField(
        m,
        lambda t, q, p: float(expr.evaluate(dict(zip(names, (t, *q, *p))))),
        lambda t, q, p: split(dict(zip(names, (t, *q, *p)))),
    )


def _bracket_text(f, g, m, extended):
    """Symbolic {f, g} of two polynomial texts."""
    names = _names(m, extended)
    ef, eg = parse_expression(f, names), parse_expression(g, names)
    pairs = [(f"p{k + 1}", f"q{k + 1}") for k in range(m)]
    if extended:
        pairs.append(("p0", "t"))
    terms = [
        f"({ef.derivative(p)}) * ({eg.derivative(q)}) - ({ef.derivative(q)}) * ({eg.derivative(p)})"
        for p, q in pairs
    ]
    return " + ".join(terms)


def _point(rng, m, extended):
    values = rng.uniform(-1.0, 1.0, 2 * m + 2)
    if extended:
        return ExtendedPoint(values[0], values[1 : 1 + m], values[1 + m], values[2 + m :])
    return PhasePoint(values[0], values[1 : 1 + m], values[1 + m : 1 + 2 * m])


class TestPoissonV:
    """Test the bracket on V*Q."""

    def test_conjugate_pair(self):
        """{p, q} = +1 in this sign convention."""
        p, q = coordinate_field("p1", 1), coordinate_field("q1", 1)
        x = PhasePoint(0.3, (0.7,), (-1.1,))
        assert poisson_v(p, q, x) == 1.0
        assert poisson_v(q, p, x) == -1.0

    def test_self_bracket(self):
        """{f, f} = 0."""
        f = _field("q1*p1*p1 + t*q1", 1)
        assert poisson_v(f, f, PhasePoint(0.5, (1.0,), (2.0,))) == 0.0

    def test_energy_and_position(self):
        """{(p^2 + q^2)/2, q} = p."""
        f = _field("p1*p1/2 + q1*q1/2", 1)
        q = coordinate_field("q1", 1)
        assert poisson_v(f, q, PhasePoint(0.0, (1.0,), (2.0,))) == pytest.approx(2.0)

    def test_arity_mismatch(self):
        """Extended fields are rejected."""
        p0 = coordinate_field("p0", 1, EXTENDED)
        q = coordinate_field("q1", 1)
        with pytest.raises(DimensionError):
            poisson_v(p0, q, PhasePoint(0.0, (0.0,), (0.0,)))

    def test_dimension_mismatch(self):
        """Fields and point must agree on m."""
        q = coordinate_field("q1", 2)
        with pytest.raises(DimensionError):
            poisson_v(q, q, PhasePoint(0.0, (0.0,), (0.0,)))


class TestPoissonT:
    """Test the bracket on T*Q."""

    def test_time_pair(self):
        """{p0, t} = 1."""
        p0 = coordinate_field("p0", 1, EXTENDED)
        t = coordinate_field("t", 1, EXTENDED)
        assert poisson_t(p0, t, ExtendedPoint(0.0, (0.0,), 0.0, (0.0,))) == 1.0

    def test_compatible_with_vertical_bracket(self):
        """Pulled-back fields bracket exactly as on V*Q."""
        rng = np.random.default_rng(3)
        for _ in range(20):
            f = _field(_polynomial(rng, 2, False), 2)
            g = _field(_polynomial(rng, 2, False), 2)
            X = _point(rng, 2, True)
            assert poisson_t(f.pullback(), g.pullback(), X) == poisson_v(f, g, X.project())

    def test_vertical_fields_rejected(self):
        """poisson_t needs extended fields."""
        q = coordinate_field("q1", 1)
        with pytest.raises(DimensionError):
            poisson_t(q, q, ExtendedPoint(0.0, (0.0,), 0.0, (0.0,)))


@pytest.mark.parametrize("extended", [False, True])
class TestBracketLaws:
    """Antisymmetry, bilinearity, Leibniz rule and Jacobi identity on random polynomials."""

    M = 2
    POINTS = 100

    def _bracket(self, extended):
        return poisson_t if extended else poisson_v

    def test_antisymmetry(self, extended):
        """{f, g} = -{g, f}."""
        rng = np.random.default_rng(11)
        bracket = self._bracket(extended)
        for _ in range(self.POINTS):
            f = _field(_polynomial(rng, self.M, extended), self.M, extended)
            g = _field(_polynomial(rng, self.M, extended), self.M, extended)
            x = _point(rng, self.M, extended)
            assert abs(bracket(f, g, x) + bracket(g, f, x)) < 1e-9

    def test_bilinearity(self, extended):
        """{f, 2g + 3h} = 2{f, g} + 3{f, h}."""
        rng = np.random.default_rng(12)
        bracket = self._bracket(extended)
        for _ in range(self.POINTS):
            a, b, c = (_polynomial(rng, self.M, extended) for _ in range(3))
            f, g, h = (_field(s, self.M, extended) for s in (a, b, c))
            combo = _field(f"2*({b}) + 3*({c})", self.M, extended)
            x = _point(rng, self.M, extended)
            expected = 2 * bracket(f, g, x) + 3 * bracket(f, h, x)
            assert abs(bracket(f, combo, x) - expected) < 1e-9

    def test_leibniz(self, extended):
        """{f, gh} = {f, g} h + g {f, h}."""
        rng = np.random.default_rng(13)
        bracket = self._bracket(extended)
        for _ in range(self.POINTS):
            a, b, c = (_polynomial(rng, self.M, extended) for _ in range(3))
            f, g, h = (_field(s, self.M, extended) for s in (a, b, c))
            gh = _field(f"({b}) * ({c})", self.M, extended)
            x = _point(rng, self.M, extended)
            expected = bracket(f, g, x) * h.eval(x) + g.eval(x) * bracket(f, h, x)
            assert abs(bracket(f, gh, x) - expected) < 1e-9

    def test_jacobi(self, extended):
        """{f, {g, h}} + {g, {h, f}} + {h, {f, g}} = 0."""
        rng = np.random.default_rng(14)
        bracket = self._bracket(extended)
        m = self.M
        for _ in range(self.POINTS):
            a, b, c = (_polynomial(rng, m, extended, terms=4) for _ in range(3))
            f, g, h = (_field(s, m, extended) for s in (a, b, c))
            gh = _field(_bracket_text(b, c, m, extended), m, extended)
            hf = _field(_bracket_text(c, a, m, extended), m, extended)
            fg = _field(_bracket_text(a, b, m, extended), m, extended)
            x = _point(rng, m, extended)
            total = bracket(f, gh, x) + bracket(g, hf, x) + bracket(h, fg, x)
            assert abs(total) < 1e-9


class TestVectorFields:
    """Test gamma_h, gamma_t and Hamiltonian vector fields."""

    def test_gamma_h_free_particle(self):
        """H = p^2/2 at (0, 0, 3) gives (1, 3, 0)."""
        v = gamma_h(free_particle(1), PhasePoint(0.0, (0.0,), (3.0,)))
        assert (v.dt, v.dq, v.dp) == (1.0, (3.0,), (0.0,))

    def test_gamma_h_constant_hamiltonian(self):
        """A constant Hamiltonian only moves time."""
        sys = make_expression_system("3", ["p1"], m=1)
        v = gamma_h(sys, PhasePoint(0.0, (1.0,), (2.0,)))
        assert (v.dt, v.dq, v.dp) == (1.0, (0.0,), (0.0,))

    def test_gamma_h_time_dependent_frequency(self):
        """omega(0) = 2 at (0, 1, 0) gives (1, 0, -4)."""
        sys = td_oscillator_system(lambda t: 4.0 + t, lambda t: 1.0)
        v = gamma_h(sys, PhasePoint(0.0, (1.0,), (0.0,)))
        assert v.dt == 1.0
        assert v.dq[0] == 0.0
        assert v.dp[0] == pytest.approx(-4.0)

    def test_gamma_t_autonomous(self):
        """Autonomous Hamiltonians give dp0 = 0."""
        sys = free_particle(1)
        v = gamma_t(sys, ExtendedPoint(0.0, (0.0,), 1.0, (3.0,)))
        assert v.dp0 == 0.0

    def test_gamma_t_time_dependent(self):
        """omega^2 = 1 + t at (0, 1, ., 0) gives dp0 = -1/2."""
        sys = td_oscillator_system(lambda t: 1.0 + t, lambda t: 1.0)
        v = gamma_t(sys, ExtendedPoint(0.0, (1.0,), 0.0, (0.0,)))
        assert v.dp0 == pytest.approx(-0.5)

    def test_gamma_t_projects_to_gamma_h(self):
        """Dropping dp0 from gamma_t gives gamma_h."""
        sys = td_oscillator()
        rng = np.random.default_rng(5)
        for _ in range(20):
            X = _point(rng, 1, True)
            assert gamma_t(sys, X).vertical() == gamma_h(sys, X.project())

    def test_hamiltonian_vector_field_is_vertical(self):
        """The field of F keeps time fixed."""
        f = _field("p1*p1/2 + q1*q1/2", 1)
        v = hamiltonian_vector_field(f, PhasePoint(3.0, (1.0,), (0.0,)))
        assert v.dt == 0.0
        assert v.dq == (0.0,)
        assert v.dp == (-1.0,)

    def test_lifted_vector_field(self):
        """Lifted field carries -dF/dt in p0 and the vertical field elsewhere."""
        f = _field("t*q1 + p1", 1)
        X = ExtendedPoint(2.0, (3.0,), 0.0, (1.0,))
        v = lifted_vector_field(f, X)
        assert v.dp0 == pytest.approx(-3.0)
        assert v.vertical() == hamiltonian_vector_field(f, X.project())


class TestFirstIntegrals:
    """Test the first-integral residual and the Lie derivative."""

    def test_energy_is_integral(self):
        """Autonomous H is conserved."""
        sys = make_expression_system("p1*p1/2 + q1*q1/2", ["p1*p1/2 + q1*q1/2"], m=1)
        x = PhasePoint(0.0, (0.4,), (0.9,))
        assert first_integral_residual(sys, sys.integrals[0], x) == 0.0

    def test_lie_derivative_matches_residual(self):
        """Contracting gamma_h with dF equals dF/dt + {H, F}."""
        sys = make_expression_system("p1*p1/2 + t*q1*q1", ["q1*p1 + t"], m=1)
        rng = np.random.default_rng(9)
        for _ in range(20):
            x = _point(rng, 1, False)
            f = sys.integrals[0]
            assert lie_derivative(sys, f, x) == pytest.approx(
                first_integral_residual(sys, f, x), abs=1e-12
            )


class TestLift:
    """Test H*, the sections h_r and the lifted involution."""

    def test_lift_hamiltonian_value(self):
        """H* = p0 + H."""
        hstar = lift_hamiltonian(free_particle(1))
        assert hstar(ExtendedPoint(0.0, (0.0,), 1.0, (2.0,))) == pytest.approx(3.0)
        assert hstar.grad(ExtendedPoint(0.0, (0.0,), 1.0, (2.0,))).dp0 == 1.0

    def test_lift_hamiltonian_oscillator(self):
        """(p^2 + q^2)/2 at (0, 1, 0.5, 1) gives 1.5."""
        sys = make_expression_system("p1*p1/2 + q1*q1/2", ["p1*p1/2 + q1*q1/2"], m=1)
        assert lift_hamiltonian(sys)(ExtendedPoint(0.0, (1.0,), 0.5, (1.0,))) == pytest.approx(1.5)

    def test_section_h(self):
        """H* vanishes on h."""
        sys = td_oscillator()
        x = PhasePoint(0.7, (0.3,), (-0.2,))
        X = section_h_r(sys, 0.0, x)
        assert lift_hamiltonian(sys)(X) == pytest.approx(0.0, abs=1e-15)
        assert X.project() == x

    def test_section_h_r(self):
        """r = 0.3, H = p^2/2, x = (0, 0, 2) gives p0 = -1.7 and H* = 0.3."""
        sys = free_particle(1)
        X = section_h_r(sys, 0.3, PhasePoint(0.0, (0.0,), (2.0,)))
        assert X.p0 == pytest.approx(-1.7)
        assert lift_hamiltonian(sys)(X) == pytest.approx(0.3)

    def test_lifted_integrals_commute_with_hstar(self):
        """{H*, zeta*F} vanishes for the Ermakov-Lewis invariant."""
        sys = td_oscillator()
        hstar = lift_hamiltonian(sys)
        (zf,) = lift_integrals(sys)
        rng = np.random.default_rng(21)
        for _ in range(10):
            x = PhasePoint(float(rng.uniform(0, 2)), (rng.uniform(-1, 1),), (rng.uniform(-1, 1),))
            assert abs(poisson_t(hstar, zf, section_h_r(sys, 0.0, x))) < 1e-9
