"""Tests for forward-mode dual numbers."""

import math

import numpy as np
import pytest

from tdcis.core import dual
from tdcis.core.dual import Dual, seed, value_and_grad


class TestSeed:
    """Test creation of independent variables."""

    def test_unit_gradients(self):
        """Each seeded variable has a unit gradient."""
        x, y, z = seed([1.0, 2.0, 3.0])
        assert np.array_equal(x.grad, [1.0, 0.0, 0.0])
        assert np.array_equal(y.grad, [0.0, 1.0, 0.0])
        assert np.array_equal(z.grad, [0.0, 0.0, 1.0])
        assert (x.value, y.value, z.value) == (1.0, 2.0, 3.0)


class TestArithmetic:
    """Test propagation through arithmetic."""

    def test_product_rule(self):
        """d(xy) = (y, x)."""
        x, y = seed([3.0, 5.0])
        f = x * y
        assert f.value == 15.0
        assert np.allclose(f.grad, [5.0, 3.0])

    def test_quotient_rule(self):
        """d(x/y) = (1/y, -x/y^2)."""
        x, y = seed([3.0, 2.0])
        f = x / y
        assert f.value == 1.5
        assert np.allclose(f.grad, [0.5, -0.75])

    def test_mixed_with_floats(self):
        """Plain numbers act as constants on either side."""
        (x,) = seed([2.0])
        f = 1.0 - 3.0 * x + x / 4.0 + 2.0 / x
        assert f.value == pytest.approx(1.0 - 6.0 + 0.5 + 1.0)
        assert f.grad[0] == pytest.approx(-3.0 + 0.25 - 0.5)

    def test_integer_power(self):
        """d(x^3) = 3x^2."""
        (x,) = seed([2.0])
        f = x**3
        assert f.value == 8.0
        assert f.grad[0] == pytest.approx(12.0)

    def test_power_zero_has_zero_gradient(self):
        """x^0 is the constant one."""
        (x,) = seed([2.0])
        f = x**0
        assert f.value == 1.0
        assert np.array_equal(f.grad, [0.0])

    def test_dual_exponent(self):
        """d(x^y) includes the log term."""
        x, y = seed([2.0, 3.0])
        f = x**y
        assert f.value == pytest.approx(8.0)
        assert np.allclose(f.grad, [12.0, 8.0 * math.log(2.0)])

    def test_comparisons_use_values(self):
        """Comparisons look at values only."""
        x, y = seed([1.0, 2.0])
        assert x < y
        assert y >= 2.0
        assert not x > 1.0


class TestElementaryFunctions:
    """Test elementary functions on floats and duals."""

    @pytest.mark.parametrize(
        "fn,derivative",
        [
            (dual.sin, math.cos),
            (dual.cos, lambda v: -math.sin(v)),
            (dual.exp, math.exp),
            (dual.log, lambda v: 1.0 / v),
            (dual.sqrt, lambda v: 0.5 / math.sqrt(v)),
            (dual.tanh, lambda v: 1.0 - math.tanh(v) ** 2),
            (dual.atan, lambda v: 1.0 / (1.0 + v * v)),
            (dual.tan, lambda v: 1.0 / math.cos(v) ** 2),
        ],
    )
    def test_derivatives(self, fn, derivative):
        """Derivatives match the analytic ones."""
        (x,) = seed([0.7])
        assert fn(x).grad[0] == pytest.approx(derivative(0.7), rel=1e-14)

    def test_floats_pass_through(self):
        """Plain floats return plain floats."""
        assert dual.sin(0.5) == math.sin(0.5)
        assert isinstance(dual.exp(1.0), float)


class TestValueAndGrad:
    """Test splitting results."""

    def test_dual_result(self):
        """Duals split into value and gradient."""
        x, y = seed([1.0, 2.0])
        value, grad = value_and_grad(x + y, 2)
        assert value == 3.0
        assert np.array_equal(grad, [1.0, 1.0])

    def test_constant_result(self):
        """Constants get a zero gradient of the requested length."""
        value, grad = value_and_grad(4, 3)
        assert value == 4.0
        assert np.array_equal(grad, np.zeros(3))

    def test_repr(self):
        """Repr shows value and gradient."""
        assert "Dual(1.0" in repr(Dual(1.0, np.zeros(1)))
