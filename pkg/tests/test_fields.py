"""Tests for phase points, scalar fields and systems."""

import math

import numpy as np
import pytest

from tdcis.core.dual import cos, sin
from tdcis.core.errors import DimensionError, NumericError
from tdcis.core.fields import (
    EXTENDED,
    Gradient,
    ScalarField,
    TDSystem,
    check_gradient,
    coordinate_field,
)
from tdcis.core.phase import ExtendedPoint, PhasePoint, TangentVector, zeta


class TestPhasePoint:
    """Test PhasePoint and ExtendedPoint."""

    def test_create_point(self):
        """Points store floats as tuples."""
        x = PhasePoint(0, [1, 2], [3, 4])
        assert x.t == 0.0
        assert x.q == (1.0, 2.0)
        assert x.p == (3.0, 4.0)
        assert x.m == 2

    def test_length_mismatch(self):
        """q and p must have the same length."""
        with pytest.raises(DimensionError):
            PhasePoint(0.0, (1.0,), (1.0, 2.0))

    def test_empty_point(self):
        """At least one degree of freedom is required."""
        with pytest.raises(DimensionError):
            PhasePoint(0.0, (), ())

    def test_non_finite(self):
        """Non-finite components are rejected."""
        with pytest.raises(NumericError):
            PhasePoint(0.0, (math.nan,), (0.0,))

    def test_state_round_trip(self):
        """from_state inverts state."""
        x = PhasePoint(1.5, (1.0, 2.0), (3.0, 4.0))
        assert PhasePoint.from_state(1.5, x.state) == x

    def test_immutable(self):
        """Points are frozen."""
        x = PhasePoint(0.0, (1.0,), (0.0,))
        with pytest.raises(AttributeError):
            x.t = 1.0  # type: ignore[misc]

    def test_describe_is_one_based(self):
        """Reports use 1-based degree labels."""
        text = PhasePoint(0.0, (1.0, 2.0), (3.0, 4.0)).describe()
        assert "q1=1" in text and "p2=4" in text

    def test_zeta_drops_p0(self):
        """Projection drops p0 and keeps everything else."""
        X = ExtendedPoint(1.0, (2.0,), -7.0, (3.0,))
        assert zeta(X) == PhasePoint(1.0, (2.0,), (3.0,))

    def test_tangent_vertical(self):
        """vertical() drops dp0."""
        v = TangentVector(1.0, (2.0,), (3.0,), 4.0)
        assert v.is_extended
        assert not v.vertical().is_extended
        assert np.array_equal(v.state, [2.0, 3.0])


class TestScalarField:
    """Test ScalarField evaluation and gradients."""

    def test_dual_gradient(self):
        """Fields without an analytic gradient use dual numbers."""
        f = ScalarField.from_callable(lambda t, q, p: p[0] ** 2 / 2 - cos(q[0]) + t * q[0], 1)
        x = PhasePoint(0.5, (0.3,), (1.2,))
        g = f.grad(x)
        assert not f.exact_gradient
        assert g.dt == pytest.approx(0.3)
        assert g.dq[0] == pytest.approx(math.sin(0.3) + 0.5)
        assert g.dp[0] == pytest.approx(1.2)

    def test_analytic_gradient_used(self):
        """An analytic gradient is returned as given."""
        f = ScalarField(
            1, lambda t, q, p: q[0], lambda t, q, p: Gradient(0.0, np.array([1.0]), np.zeros(1))
        )
        assert f.exact_gradient
        assert f.grad(PhasePoint(0.0, (5.0,), (0.0,))).dq[0] == 1.0

    def test_dimension_mismatch(self):
        """Evaluating at a point of another dimension fails."""
        f = coordinate_field("q1", 1)
        with pytest.raises(DimensionError):
            f.eval(PhasePoint(0.0, (1.0, 2.0), (0.0, 0.0)))

    def test_arity_mismatch(self):
        """Vertical fields reject extended points."""
        f = coordinate_field("q1", 1)
        with pytest.raises(DimensionError):
            f.eval(ExtendedPoint(0.0, (1.0,), 0.0, (0.0,)))

    def test_non_finite_value(self):
        """Non-finite values raise NumericError."""
        f = ScalarField.from_callable(lambda t, q, p: 1.0 / q[0] if q[0] else math.inf, 1)
        with pytest.raises(NumericError):
            f.eval(PhasePoint(0.0, (0.0,), (0.0,)))

    def test_unknown_arity(self):
        """Arity must be vertical or extended."""
        with pytest.raises(ValueError):
            ScalarField(1, lambda t, q, p: 0.0, arity="diagonal")

    def test_pullback(self):
        """zeta*f ignores p0 and has d/dp0 = 0."""
        f = ScalarField.from_callable(lambda t, q, p: t * q[0] * p[0], 1, name="f")
        zf = f.pullback()
        X = ExtendedPoint(2.0, (3.0,), 100.0, (5.0,))
        assert zf.arity == EXTENDED
        assert zf.p0_free
        assert zf.eval(X) == f.eval(X.project())
        assert zf.grad(X).dp0 == 0.0
        assert zf.grad(X).dt == pytest.approx(15.0)

    def test_restrict_to_degree(self):
        """Restriction keeps the degree's own coordinates."""
        f = ScalarField.from_callable(lambda t, q, p: q[1] ** 2 + 3 * p[1], 2, name="F2")
        r = f.restrict_to_degree(1)
        x = PhasePoint(0.0, (2.0,), (1.0,))
        assert r.m == 1
        assert r.eval(x) == pytest.approx(7.0)
        assert r.grad(x).dq[0] == pytest.approx(4.0)
        assert r.grad(x).dp[0] == pytest.approx(3.0)

    def test_restrict_out_of_range(self):
        """Degree indices are checked."""
        with pytest.raises(DimensionError):
            coordinate_field("q1", 1).restrict_to_degree(1)


class TestCoordinateField:
    """Test coordinate functions."""

    def test_coordinates(self):
        """Coordinates pick the right component."""
        x = PhasePoint(0.5, (1.0, 2.0), (3.0, 4.0))
        assert coordinate_field("t", 2)(x) == 0.5
        assert coordinate_field("q2", 2)(x) == 2.0
        assert coordinate_field("p1", 2)(x) == 3.0

    def test_p0_only_extended(self):
        """p0 exists only on T*Q."""
        with pytest.raises(DimensionError):
            coordinate_field("p0", 1)
        p0 = coordinate_field("p0", 1, arity=EXTENDED)
        assert not p0.p0_free
        assert p0(ExtendedPoint(0.0, (0.0,), 2.5, (0.0,))) == 2.5

    def test_unknown_coordinate(self):
        """Unknown names are rejected."""
        with pytest.raises(ValueError):
            coordinate_field("x1", 1)
        with pytest.raises(DimensionError):
            coordinate_field("q3", 2)


class TestCheckGradient:
    """Test the finite-difference contract."""

    def test_dual_field_passes(self):
        """Dual-number gradients agree with finite differences."""
        f = ScalarField.from_callable(
            lambda t, q, p: sin(t) * q[0] * q[0] + p[0] ** 3 / 3 - q[0] * p[0], 1
        )
        rng = np.random.default_rng(0)
        for _ in range(20):
            t, q, p = rng.uniform(-2, 2, 3)
            assert check_gradient(f, PhasePoint(t, (q,), (p,))) < 1e-6

    def test_extended_field(self):
        """Extended points are differentiated in (t, q, p0, p)."""
        f = ScalarField.from_callable(lambda t, q, p0, p: p0 * q[0] + t, 1, arity=EXTENDED)
        assert check_gradient(f, ExtendedPoint(0.5, (2.0,), -1.0, (3.0,))) < 1e-6

    def test_wrong_gradient_detected(self):
        """A wrong analytic gradient is flagged."""
        f = ScalarField(
            1,
            lambda t, q, p: q[0] ** 2,
            lambda t, q, p: Gradient(0.0, np.array([q[0]]), np.zeros(1)),
        )
        assert check_gradient(f, PhasePoint(0.0, (1.0,), (0.0,))) > 0.1


class TestTDSystem:
    """Test TDSystem validation."""

    def test_integral_count(self):
        """The number of integrals must equal m."""
        h = coordinate_field("p1", 1)
        with pytest.raises(DimensionError):
            TDSystem(m=1, hamiltonian=h, integrals=(h, h))

    def test_defaults(self):
        """Compactness and centres default per degree."""
        h = coordinate_field("p1", 1)
        sys = TDSystem(m=1, hamiltonian=h, integrals=(h,))
        assert sys.compact == (False,)
        assert sys.centers == (0.0,)

    def test_extended_integral_rejected(self):
        """Integrals must live on V*Q."""
        h = coordinate_field("p1", 1)
        with pytest.raises(DimensionError):
            TDSystem(m=1, hamiltonian=h, integrals=(coordinate_field("p0", 1, EXTENDED),))
