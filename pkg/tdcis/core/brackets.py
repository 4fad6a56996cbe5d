"""
Poisson brackets, evolution vector fields and the autonomous lift.

Sign convention (fixed, note it when comparing with other texts):

    {f, g}_V = sum_k  df/dp_k * dg/dq^k  -  df/dq^k * dg/dp_k

so that {p, q} = +1. The bracket on T*Q adds the pair (t, p0) with the
same convention. Many references use the opposite sign.
"""

from typing import Tuple

import numpy as np

from tdcis.core.errors import DimensionError, NumericError
from tdcis.core.fields import EXTENDED, VERTICAL, Gradient, ScalarField, TDSystem
from tdcis.core.phase import ExtendedPoint, PhasePoint, TangentVector


def _require(f: ScalarField, arity: str, m: int) -> None:
    if f.arity != arity:
        raise DimensionError(f"field '{f.name}' is {f.arity}, expected {arity}")
    if f.m != m:
        raise DimensionError(f"field '{f.name}' has m={f.m}, point has m={m}")


def _vertical_sum(gf: Gradient, gg: Gradient) -> float:
    # Shared by both brackets so that pulled-back fields agree bit for bit.
    total = 0.0
    for k in range(gf.dq.size):
        total += gf.dp[k] * gg.dq[k] - gf.dq[k] * gg.dp[k]
    return float(total)


def poisson_v(f: ScalarField, g: ScalarField, x: PhasePoint) -> float:
    """
    Canonical Poisson bracket on V*Q.

    Args:
        f: Vertical field
        g: Vertical field
        x: Point of V*Q

    Returns:
        {f, g}_V at x

    Raises:
        DimensionError: On arity or dimension mismatch
        NumericError: On non-finite gradients

    Examples:
        >>> from tdcis.core.fields import coordinate_field
        >>> p, q = coordinate_field("p1", 1), coordinate_field("q1", 1)
        >>> poisson_v(p, q, PhasePoint(0.0, (0.0,), (0.0,)))
        1.0
    """
    _require(f, VERTICAL, x.m)
    _require(g, VERTICAL, x.m)
    return _vertical_sum(f.grad(x), g.grad(x))


def poisson_t(f: ScalarField, g: ScalarField, x: ExtendedPoint) -> float:
    """
    Canonical Poisson bracket on T*Q, summed over lambda = 0..m.

    For p0-independent fields the time pair contributes an exact zero, so the
    result equals ``poisson_v`` of the projected fields at the projected point.
    """
    _require(f, EXTENDED, x.m)
    _require(g, EXTENDED, x.m)
    gf, gg = f.grad(x), g.grad(x)
    time_pair = gf.dp0 * gg.dt - gf.dt * gg.dp0
    return float(time_pair + _vertical_sum(gf, gg))


def _hamiltonian_gradient(sys: TDSystem, x: PhasePoint) -> Gradient:
    if x.m != sys.m:
        raise DimensionError(f"system '{sys.label}' has m={sys.m}, point has m={x.m}")
    g = sys.hamiltonian.grad(x)
    if not g.is_finite():
        raise NumericError(f"Hamiltonian gradient is not finite at {x}")
    return g


def gamma_h(sys: TDSystem, x: PhasePoint) -> TangentVector:
    """
    Evolution vector field on V*Q: d/dt + dH/dp_k d/dq^k - dH/dq^k d/dp_k.

    Examples:
        free particle H = p^2/2 at (0, 0, 3) -> (1, 3, 0)
    """
    g = _hamiltonian_gradient(sys, x)
    return TangentVector(1.0, tuple(g.dp), tuple(-g.dq))


def gamma_t(sys: TDSystem, x: ExtendedPoint) -> TangentVector:
    """
    Hamiltonian vector field of H* = p0 + H on T*Q.

    Its (dt, dq, dp) part is gamma_h at the projected point; dp0 = -dH/dt.
    """
    g = _hamiltonian_gradient(sys, x.project())
    return TangentVector(1.0, tuple(g.dp), tuple(-g.dq), -g.dt)


def hamiltonian_vector_field(f: ScalarField, x: PhasePoint) -> TangentVector:
    """
    Vertical Hamiltonian field of f: df/dp_k d/dq^k - df/dq^k d/dp_k.

    The time component is zero: the flow stays inside the slice of x.
    """
    _require(f, VERTICAL, x.m)
    g = f.grad(x)
    return TangentVector(0.0, tuple(g.dp), tuple(-g.dq))


def lifted_vector_field(f: ScalarField, x: ExtendedPoint) -> TangentVector:
    """
    Hamiltonian field of zeta*f on T*Q: -df/dt d/dp0 + (vertical field of f).

    It is tangent to the images of the sections h_r whenever f is a first
    integral.
    """
    _require(f, VERTICAL, x.m)
    g = f.grad(x.project())
    return TangentVector(0.0, tuple(g.dp), tuple(-g.dq), -g.dt)


def lie_derivative(sys: TDSystem, f: ScalarField, x: PhasePoint) -> float:
    """
    Derivative of f along gamma_h, i.e. dt/dt * df/dt + dq . df/dq + dp . df/dp.

    Equals df/dt + {H, f}_V; zero for first integrals.
    """
    _require(f, VERTICAL, x.m)
    v = gamma_h(sys, x)
    g = f.grad(x)
    return float(v.dt * g.dt + np.dot(v.dq, g.dq) + np.dot(v.dp, g.dp))


def first_integral_residual(sys: TDSystem, f: ScalarField, x: PhasePoint) -> float:
    """Residual df/dt + {H, f}_V of the first-integral condition."""
    return float(f.grad(x).dt + poisson_v(sys.hamiltonian, f, x))


def lift_hamiltonian(sys: TDSystem) -> ScalarField:
    """
    The autonomous Hamiltonian H* = p0 + H on T*Q.

    dH*/dp0 is identically 1 and H* vanishes on the image of h (p0 = -H).
    """
    ham = sys.hamiltonian

    def value(t, q, p0, p):
        return p0 + ham.eval(PhasePoint(t, q, p))

    def grad(t, q, p0, p):  # noqa: ARG001
        g = ham.grad(PhasePoint(t, q, p))
        return Gradient(g.dt, g.dq, g.dp, 1.0)

    return ScalarField(sys.m, value, grad, arity=EXTENDED, name="H*", p0_free=False)


def section_h_r(sys: TDSystem, r: float, x: PhasePoint) -> ExtendedPoint:
    """
    Section h_r of zeta with p0 = -H(x) + r.

    ``r = 0`` is the Hamiltonian section h. The projection of the result is x
    and H* takes the value r there.
    """
    if x.m != sys.m:
        raise DimensionError(f"system '{sys.label}' has m={sys.m}, point has m={x.m}")
    return ExtendedPoint(x.t, x.q, -sys.hamiltonian.eval(x) + r, x.p)


def lift_integrals(sys: TDSystem) -> Tuple[ScalarField, ...]:
    """Pull-backs zeta*F_k of the system's integrals."""
    return tuple(f.pullback() for f in sys.integrals)
