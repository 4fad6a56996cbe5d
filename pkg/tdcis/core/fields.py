"""
Scalar fields with exact first derivatives, and time-dependent systems.

A ``ScalarField`` is a smooth function on V*Q (``vertical``) or on T*Q
(``extended``). Its gradient is either supplied analytically or obtained by
forward-mode dual-number evaluation of the same function; finite differences
are never used internally.

Gradient ordering:
    vertical: (d/dt, d/dq^1..d/dq^m, d/dp_1..d/dp_m)
    extended: (d/dt, d/dq^1..d/dq^m, d/dp_0, d/dp_1..d/dp_m)
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, Sequence, Tuple, Union

import numpy as np

from tdcis.core.dual import seed, value_and_grad
from tdcis.core.errors import DimensionError, NumericError
from tdcis.core.phase import ExtendedPoint, PhasePoint

VERTICAL = "vertical"
EXTENDED = "extended"

Point = Union[PhasePoint, ExtendedPoint]


@dataclass(frozen=True, eq=False)
class Gradient:
    """All first partial derivatives of a scalar field at a point."""

    dt: float
    dq: np.ndarray
    dp: np.ndarray
    dp0: float = 0.0

    def as_array(self, extended: bool = False) -> np.ndarray:
        """Flatten in the canonical ordering of the given arity."""
        if extended:
            return np.concatenate(([self.dt], self.dq, [self.dp0], self.dp))
        return np.concatenate(([self.dt], self.dq, self.dp))

    def is_finite(self) -> bool:
        """Whether every component is finite."""
        return bool(
            math.isfinite(self.dt)
            and math.isfinite(self.dp0)
            and np.all(np.isfinite(self.dq))
            and np.all(np.isfinite(self.dp))
        )


class ScalarField:
    """
    Smooth real function on V*Q or T*Q with exact gradient.

    Attributes:
        m: Degrees of freedom
        arity: ``"vertical"`` or ``"extended"``
        name: Label used in reports
        p0_free: True when the field does not depend on p0 (always for vertical)
    """

    def __init__(
        self,
        m: int,
        value: Callable[..., float],
        grad: Optional[Callable[..., Gradient]] = None,
        arity: str = VERTICAL,
        name: str = "",
        p0_free: Optional[bool] = None,
        aux_value: Optional[Callable[[PhasePoint, Sequence[float]], float]] = None,
    ):
        """
        Initialize a field.

        Args:
            m: Degrees of freedom
            value: ``value(t, q, p)`` (vertical) or ``value(t, q, p0, p)`` (extended);
                must accept duals when ``grad`` is omitted
            grad: Analytic gradient with the same signature, returning ``Gradient``
            arity: ``"vertical"`` or ``"extended"``
            name: Label used in reports
            p0_free: Declares independence of p0 for extended fields
            aux_value: Optional evaluation from co-integrated auxiliary states
        """
        if arity not in (VERTICAL, EXTENDED):
            raise ValueError(f"Unknown arity: {arity}")
        if m < 1:
            raise DimensionError("a field needs at least one degree of freedom")
        self.m = m
        self.arity = arity
        self.name = name
        self.p0_free = True if arity == VERTICAL else bool(p0_free)
        self._value = value
        self._grad = grad
        self._aux_value = aux_value

    def __repr__(self) -> str:
        return f"ScalarField(name={self.name!r}, m={self.m}, arity={self.arity!r})"

    @property
    def exact_gradient(self) -> bool:
        """True when the gradient is analytic rather than dual-number evaluated."""
        return self._grad is not None

    @property
    def uses_aux(self) -> bool:
        """Whether the field can consume co-integrated auxiliary states."""
        return self._aux_value is not None

    @classmethod
    def from_callable(
        cls, fn: Callable[..., object], m: int, arity: str = VERTICAL, name: str = ""
    ) -> "ScalarField":
        """
        Wrap a user function differentiated by dual numbers.

        Examples:
            >>> from tdcis.core.dual import cos
            >>> pendulum = ScalarField.from_callable(
            ...     lambda t, q, p: p[0] ** 2 / 2 - cos(q[0]), m=1)
        """
        return cls(m, fn, None, arity=arity, name=name)

    def _check_point(self, x: Point) -> None:
        expected = ExtendedPoint if self.arity == EXTENDED else PhasePoint
        if not isinstance(x, expected):
            raise DimensionError(
                f"{self.arity} field '{self.name}' evaluated at {type(x).__name__}"
            )
        if x.m != self.m:
            raise DimensionError(f"field '{self.name}' has m={self.m}, point has m={x.m}")

    def _args(self, x: Point) -> tuple:
        if isinstance(x, ExtendedPoint):
            return (x.t, x.q, x.p0, x.p)
        return (x.t, x.q, x.p)

    def eval(self, x: Point, aux: Optional[Sequence[float]] = None) -> float:
        """
        Evaluate the field.

        Args:
            x: Point of matching arity and dimension
            aux: Co-integrated auxiliary state, used when the field supports it

        Returns:
            Field value
        """
        self._check_point(x)
        if aux is not None and self._aux_value is not None and isinstance(x, PhasePoint):
            value = float(self._aux_value(x, aux))
        else:
            value = float(self._value(*self._args(x)))
        if not math.isfinite(value):
            raise NumericError(f"field '{self.name}' is not finite at {x}")
        return value

    def __call__(self, x: Point) -> float:
        return self.eval(x)

    def grad(self, x: Point) -> Gradient:
        """
        All first partial derivatives at ``x``.

        Raises:
            DimensionError: If the point does not match the field
            NumericError: If any component is non-finite
        """
        self._check_point(x)
        if self._grad is not None:
            g = self._grad(*self._args(x))
        else:
            g = self._dual_grad(x)
        if not g.is_finite():
            raise NumericError(f"gradient of field '{self.name}' is not finite at {x}")
        return g

    def _dual_grad(self, x: Point) -> Gradient:
        m = self.m
        if isinstance(x, ExtendedPoint):
            v = seed((x.t, *x.q, x.p0, *x.p))
            result = self._value(v[0], tuple(v[1 : 1 + m]), v[1 + m], tuple(v[2 + m :]))
            _, g = value_and_grad(result, 2 * m + 2)
            return Gradient(g[0], g[1 : 1 + m], g[2 + m :], g[1 + m])
        v = seed((x.t, *x.q, *x.p))
        result = self._value(v[0], tuple(v[1 : 1 + m]), tuple(v[1 + m :]))
        _, g = value_and_grad(result, 2 * m + 1)
        return Gradient(g[0], g[1 : 1 + m], g[1 + m :])

    def pullback(self) -> "ScalarField":
        """
        The pull-back zeta*f onto T*Q.

        The result ignores p0 and reuses this field's gradient with d/dp0 = 0.
        """
        if self.arity != VERTICAL:
            raise DimensionError("only vertical fields can be pulled back along zeta")
        base = self

        def value(t, q, p0, p):  # noqa: ARG001
            return base.eval(PhasePoint(t, q, p))

        def grad(t, q, p0, p):  # noqa: ARG001
            g = base.grad(PhasePoint(t, q, p))
            return Gradient(g.dt, g.dq, g.dp, 0.0)

        name = f"zeta*{self.name}" if self.name else "zeta*f"
        return ScalarField(self.m, value, grad, arity=EXTENDED, name=name, p0_free=True)

    def restrict_to_degree(self, k: int) -> "ScalarField":
        """
        One-degree-of-freedom restriction onto (t, q^k, p_k).

        The other coordinates are frozen at zero; meaningful for fields of a
        separable system whose k-th integral depends on degree k only.
        """
        if self.arity != VERTICAL:
            raise DimensionError("only vertical fields can be restricted to a degree")
        if not 0 <= k < self.m:
            raise DimensionError(f"degree index {k} out of range for m={self.m}")
        base, m = self, self.m

        def embed(t, q, p) -> PhasePoint:
            qs = [0.0] * m
            ps = [0.0] * m
            qs[k] = q[0]
            ps[k] = p[0]
            return PhasePoint(t, qs, ps)

        def value(t, q, p):
            return base.eval(embed(t, q, p))

        def grad(t, q, p):
            g = base.grad(embed(t, q, p))
            return Gradient(g.dt, np.array([g.dq[k]]), np.array([g.dp[k]]))

        return ScalarField(1, value, grad, name=f"{self.name}|{k + 1}")


def coordinate_field(coordinate: str, m: int, arity: str = VERTICAL) -> ScalarField:
    """
    Coordinate function ``t``, ``p0``, ``qK`` or ``pK`` (K is 1-based).

    Examples:
        >>> coordinate_field("q1", m=1)(PhasePoint(0.0, (2.0,), (3.0,)))
        2.0
    """
    extended = arity == EXTENDED
    if coordinate == "t":
        kind, index = "t", 0
    elif coordinate == "p0":
        if not extended:
            raise DimensionError("p0 exists only on T*Q")
        kind, index = "p0", 0
    elif coordinate[:1] in ("q", "p") and coordinate[1:].isdigit():
        kind, index = coordinate[0], int(coordinate[1:]) - 1
        if not 0 <= index < m:
            raise DimensionError(f"coordinate {coordinate} out of range for m={m}")
    else:
        raise ValueError(f"Unknown coordinate: {coordinate}")

    def unit(i: int) -> np.ndarray:
        e = np.zeros(m)
        e[i] = 1.0
        return e

    def pick(t, q, p, p0):
        return {"t": t, "p0": p0, "q": q[index], "p": p[index]}[kind]

    def gradient() -> Gradient:
        zero = np.zeros(m)
        return Gradient(
            1.0 if kind == "t" else 0.0,
            unit(index) if kind == "q" else zero,
            unit(index) if kind == "p" else zero,
            1.0 if kind == "p0" else 0.0,
        )

    if extended:
        return ScalarField(
            m,
            lambda t, q, p0, p: pick(t, q, p, p0),
            lambda t, q, p0, p: gradient(),
            arity=EXTENDED,
            name=coordinate,
            p0_free=kind != "p0",
        )
    return ScalarField(
        m, lambda t, q, p: pick(t, q, p, 0.0), lambda t, q, p: gradient(), name=coordinate
    )


def check_gradient(f: ScalarField, x: Point, step: float = 1e-6) -> float:
    """
    Compare the exact gradient against central finite differences.

    Returns the largest relative deviation, measured as
    ``|exact - fd| / max(1, |exact|)`` per component.
    """
    extended = isinstance(x, ExtendedPoint)
    exact = f.grad(x).as_array(extended)
    if extended:
        base = np.array((x.t, *x.q, x.p0, *x.p))
    else:
        base = np.array((x.t, *x.q, *x.p))
    m = x.m

    def rebuild(v: np.ndarray) -> Point:
        if extended:
            return ExtendedPoint(v[0], v[1 : 1 + m], v[1 + m], v[2 + m :])
        return PhasePoint(v[0], v[1 : 1 + m], v[1 + m :])

    worst = 0.0
    for i in range(base.size):
        h = step * max(1.0, abs(base[i]))
        up, down = base.copy(), base.copy()
        up[i] += h
        down[i] -= h
        fd = (f.eval(rebuild(up)) - f.eval(rebuild(down))) / (2.0 * h)
        worst = max(worst, abs(exact[i] - fd) / max(1.0, abs(exact[i])))
    return worst


class AuxiliaryODE(Protocol):
    """Extra state integrated alongside a system's trajectories."""

    dim: int

    def initial_state(self) -> np.ndarray:
        """State at t = 0."""
        ...

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        """Time derivative of the auxiliary state."""
        ...

    def state_at(self, t: float) -> np.ndarray:
        """State at time t, integrated from t = 0."""
        ...


@dataclass(frozen=True)
class TDSystem:
    """
    A time-dependent Hamiltonian system with m candidate first integrals.

    Attributes:
        m: Degrees of freedom
        hamiltonian: Vertical field H(t, q, p)
        integrals: Vertical fields F_1..F_m
        label: Name used in reports and CSV metadata
        compact: Per-degree flag: slices of the invariant manifolds are compact
        separable: Integral k depends only on (t, q^k, p_k)
        centers: Per-degree q of the well centre (angle reference side)
        autonomous: H carries no explicit time dependence
        auxiliary: Extra ODE co-integrated with trajectories
    """

    m: int
    hamiltonian: ScalarField
    integrals: Tuple[ScalarField, ...]
    label: str = ""
    compact: Tuple[bool, ...] = field(default=())
    separable: bool = False
    centers: Tuple[float, ...] = field(default=())
    autonomous: bool = False
    auxiliary: Optional[AuxiliaryODE] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "integrals", tuple(self.integrals))
        if len(self.integrals) != self.m:
            raise DimensionError(
                f"system '{self.label}' has m={self.m} but {len(self.integrals)} integrals"
            )
        for f in (self.hamiltonian, *self.integrals):
            if f.arity != VERTICAL or f.m != self.m:
                raise DimensionError(f"field '{f.name}' does not live on V*Q with m={self.m}")
        if not self.compact:
            object.__setattr__(self, "compact", (False,) * self.m)
        if not self.centers:
            object.__setattr__(self, "centers", (0.0,) * self.m)
        if len(self.compact) != self.m or len(self.centers) != self.m:
            raise DimensionError("compact and centers need one entry per degree")
