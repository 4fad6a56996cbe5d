"""
Forward-mode automatic differentiation with dual numbers.

A ``Dual`` carries a value and the vector of its first partial derivatives
with respect to every seeded input. Arithmetic propagates both exactly, so a
function written with ``+ - * / **`` and the elementary functions below yields
its gradient in one evaluation without finite differences.

The elementary functions accept plain floats as well, which lets the same
user function serve evaluation and differentiation.

Examples:
    >>> x, y = seed([1.0, 2.0])
    >>> f = x * y + sin(x)
    >>> f.grad  # [y + cos(x), x]
    array([2.54030231, 1.        ])
"""

import math
from typing import Any, List, Sequence, Union

import numpy as np

Number = Union[int, float]


class Dual:
    """Scalar value with an exact gradient vector."""

    __slots__ = ("value", "grad")

    def __init__(self, value: float, grad: np.ndarray):
        self.value = float(value)
        self.grad = np.asarray(grad, dtype=float)

    def __repr__(self) -> str:
        return f"Dual({self.value!r}, {self.grad!r})"

    def _lift(self, other: Any) -> "Dual":
        if isinstance(other, Dual):
            return other
        return Dual(other, np.zeros_like(self.grad))

    def __add__(self, other: Any) -> "Dual":
        if isinstance(other, Dual):
            return Dual(self.value + other.value, self.grad + other.grad)
        return Dual(self.value + other, self.grad)

    __radd__ = __add__

    def __sub__(self, other: Any) -> "Dual":
        if isinstance(other, Dual):
            return Dual(self.value - other.value, self.grad - other.grad)
        return Dual(self.value - other, self.grad)

    def __rsub__(self, other: Any) -> "Dual":
        return Dual(other - self.value, -self.grad)

    def __neg__(self) -> "Dual":
        return Dual(-self.value, -self.grad)

    def __pos__(self) -> "Dual":
        return self

    def __mul__(self, other: Any) -> "Dual":
        if isinstance(other, Dual):
            return Dual(self.value * other.value, self.value * other.grad + other.value * self.grad)
        return Dual(self.value * other, self.grad * other)

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "Dual":
        if isinstance(other, Dual):
            return Dual(
                self.value / other.value,
                (self.grad * other.value - self.value * other.grad) / (other.value**2),
            )
        return Dual(self.value / other, self.grad / other)

    def __rtruediv__(self, other: Any) -> "Dual":
        return Dual(other / self.value, -other * self.grad / (self.value**2))

    def __pow__(self, power: Any) -> "Dual":
        if isinstance(power, Dual):
            return exp(power * log(self))
        if power == 0:
            return Dual(1.0, np.zeros_like(self.grad))
        return Dual(self.value**power, power * self.value ** (power - 1) * self.grad)

    def __rpow__(self, base: Any) -> "Dual":
        return exp(self * math.log(base))

    def __abs__(self) -> "Dual":
        return Dual(abs(self.value), self.grad * np.sign(self.value))

    def __lt__(self, other: Any) -> bool:
        return self.value < _value(other)

    def __le__(self, other: Any) -> bool:
        return self.value <= _value(other)

    def __gt__(self, other: Any) -> bool:
        return self.value > _value(other)

    def __ge__(self, other: Any) -> bool:
        return self.value >= _value(other)


def _value(x: Any) -> float:
    return x.value if isinstance(x, Dual) else float(x)


def seed(values: Sequence[float]) -> List[Dual]:
    """
    Create independent dual variables, one unit direction per input.

    Args:
        values: Input values

    Returns:
        List of duals whose gradients are the rows of the identity matrix
    """
    n = len(values)
    eye = np.eye(n)
    return [Dual(v, eye[i]) for i, v in enumerate(values)]


def sin(x: Any) -> Any:
    """Sine for floats and duals."""
    if isinstance(x, Dual):
        return Dual(math.sin(x.value), math.cos(x.value) * x.grad)
    return math.sin(x)


def cos(x: Any) -> Any:
    """Cosine for floats and duals."""
    if isinstance(x, Dual):
        return Dual(math.cos(x.value), -math.sin(x.value) * x.grad)
    return math.cos(x)


def tan(x: Any) -> Any:
    """Tangent for floats and duals."""
    if isinstance(x, Dual):
        return Dual(math.tan(x.value), x.grad / math.cos(x.value) ** 2)
    return math.tan(x)


def exp(x: Any) -> Any:
    """Exponential for floats and duals."""
    if isinstance(x, Dual):
        e = math.exp(x.value)
        return Dual(e, e * x.grad)
    return math.exp(x)


def log(x: Any) -> Any:
    """Natural logarithm for floats and duals."""
    if isinstance(x, Dual):
        return Dual(math.log(x.value), x.grad / x.value)
    return math.log(x)


def sqrt(x: Any) -> Any:
    """Square root for floats and duals."""
    if isinstance(x, Dual):
        s = math.sqrt(x.value)
        return Dual(s, 0.5 * x.grad / s)
    return math.sqrt(x)


def tanh(x: Any) -> Any:
    """Hyperbolic tangent for floats and duals."""
    if isinstance(x, Dual):
        th = math.tanh(x.value)
        return Dual(th, (1.0 - th * th) * x.grad)
    return math.tanh(x)


def atan(x: Any) -> Any:
    """Arc tangent for floats and duals."""
    if isinstance(x, Dual):
        return Dual(math.atan(x.value), x.grad / (1.0 + x.value**2))
    return math.atan(x)


def value_and_grad(result: Any, n: int) -> "tuple[float, np.ndarray]":
    """
    Split a function result into value and gradient.

    Constant results (plain numbers) get a zero gradient of length ``n``.
    """
    if isinstance(result, Dual):
        return result.value, result.grad
    return float(result), np.zeros(n)
