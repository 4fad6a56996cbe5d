"""
Built-in time-dependent Hamiltonian systems.

Every built-in supplies analytic gradients and declares, per degree of
freedom, whether the fixed-time slices of its invariant manifolds are
compact, which gates action-angle chart construction.

Available systems:
    free_particle   H = |p|^2/2, F_k = p_k                      (non-compact)
    harmonic        H = F = (p^2 + omega^2 q^2)/2                (compact)
    pendulum        H = F = p^2/2 - omega^2 cos q                (compact in the well)
    td_oscillator   H = p^2/2 + w(t) q^2/2, w = omega0^2 + a sin(b t),
                    F = Ermakov-Lewis invariant                  (compact)
    separable_2dof  F_k = (p_k^2 + omega_k^2 q_k^2)/2, H = F_1 + F_2
    adversarial     2 DOF free particle with F = (q1, p1) (fails checks on purpose)
    custom          H and F_k given as expressions in t, q1..qm, p1..pm
"""

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from tdcis.core.errors import UnknownSystemError
from tdcis.core.expression import Expression, parse_expression
from tdcis.core.fields import Gradient, ScalarField, TDSystem
from tdcis.core.flow import step_once
from tdcis.core.phase import PhasePoint
from tdcis.core.verify import SampleRegion
from tdcis.logging.logger import get_logger

RealFn = Callable[[float], float]


@dataclass(frozen=True)
class SystemSpec:
    """
    Name and parameters of a system.

    Attributes:
        name: Registered system name
        parameters: Named real parameters (e.g. omega, amplitude)
        m: Degrees of freedom, for systems of variable size
        expressions: Expression parameters (``custom`` systems, user w(t))
    """

    name: str
    parameters: Mapping[str, float] = field(default_factory=dict)
    m: Optional[int] = None
    expressions: Mapping[str, object] = field(default_factory=dict)


def _zeros(m: int) -> np.ndarray:
    return np.zeros(m)


def _oscillator_energy(omega: float, k: int, m: int, name: str) -> ScalarField:
    w2 = omega * omega

    def value(t, q, p):  # noqa: ARG001
        return 0.5 * (p[k] * p[k] + w2 * q[k] * q[k])

    def grad(t, q, p):  # noqa: ARG001
        dq, dp = _zeros(m), _zeros(m)
        dq[k] = w2 * q[k]
        dp[k] = p[k]
        return Gradient(0.0, dq, dp)

    return ScalarField(m, value, grad, name=name)


def _sum_fields(fields: Sequence[ScalarField], name: str) -> ScalarField:
    m = fields[0].m

    def value(t, q, p):
        x = PhasePoint(t, q, p)
        return math.fsum(f.eval(x) for f in fields)

    def grad(t, q, p):
        x = PhasePoint(t, q, p)
        gs = [f.grad(x) for f in fields]
        return Gradient(
            math.fsum(g.dt for g in gs), sum(g.dq for g in gs), sum(g.dp for g in gs)
        )

    return ScalarField(m, value, grad, name=name)


def _positive(parameters: Mapping[str, float], key: str, default: float) -> float:
    value = float(parameters.get(key, default))
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"Parameter '{key}' must be positive, got {value}")
    return value


def _check_keys(spec: SystemSpec, allowed: Sequence[str]) -> None:
    unknown = sorted(set(spec.parameters) - set(allowed))
    if unknown:
        raise ValueError(f"Unknown parameter(s) for '{spec.name}': {', '.join(unknown)}")


def free_particle(m: int = 1) -> TDSystem:
    """Free particle in m dimensions; integrals are the momenta."""
    if m < 1:
        raise ValueError("m must be at least 1")

    def h_value(t, q, p):  # noqa: ARG001
        return 0.5 * math.fsum(v * v for v in p)

    def h_grad(t, q, p):  # noqa: ARG001
        return Gradient(0.0, _zeros(m), np.array(p, dtype=float))

    def momentum(k: int) -> ScalarField:
        def grad(t, q, p):  # noqa: ARG001
            dp = _zeros(m)
            dp[k] = 1.0
            return Gradient(0.0, _zeros(m), dp)

        return ScalarField(m, lambda t, q, p: p[k], grad, name=f"p{k + 1}")

    return TDSystem(
        m=m,
        hamiltonian=ScalarField(m, h_value, h_grad, name="H"),
        integrals=tuple(momentum(k) for k in range(m)),
        label=f"free_particle(m={m})",
        compact=(False,) * m,
        separable=True,
        autonomous=True,
    )


def harmonic(omega: float = 1.0) -> TDSystem:
    """One-dimensional harmonic oscillator with F = H."""
    energy = _oscillator_energy(omega, 0, 1, "H")
    return TDSystem(
        m=1,
        hamiltonian=energy,
        integrals=(energy,),
        label=f"harmonic(omega={omega:g})",
        compact=(True,),
        separable=True,
        autonomous=True,
    )


def pendulum(omega: float = 1.0) -> TDSystem:
    """Mathematical pendulum H = p^2/2 - omega^2 cos q with F = H."""
    w2 = omega * omega

    def value(t, q, p):  # noqa: ARG001
        return 0.5 * p[0] * p[0] - w2 * math.cos(q[0])

    def grad(t, q, p):  # noqa: ARG001
        return Gradient(0.0, np.array([w2 * math.sin(q[0])]), np.array([p[0]]))

    energy = ScalarField(1, value, grad, name="H")
    return TDSystem(
        m=1,
        hamiltonian=energy,
        integrals=(energy,),
        label=f"pendulum(omega={omega:g})",
        compact=(True,),
        separable=True,
        autonomous=True,
    )


def separable_2dof(omega1: float = 1.0, omega2: float = 2.0) -> TDSystem:
    """Two uncoupled oscillators; the integrals are the partial energies."""
    f1 = _oscillator_energy(omega1, 0, 2, "F1")
    f2 = _oscillator_energy(omega2, 1, 2, "F2")
    return TDSystem(
        m=2,
        hamiltonian=_sum_fields((f1, f2), "H"),
        integrals=(f1, f2),
        label=f"separable_2dof(omega1={omega1:g}, omega2={omega2:g})",
        compact=(True, True),
        separable=True,
        autonomous=True,
    )


def adversarial() -> TDSystem:
    """Two-dimensional free particle paired with the non-involutive (q1, p1)."""
    base = free_particle(2)

    def q1_grad(t, q, p):  # noqa: ARG001
        return Gradient(0.0, np.array([1.0, 0.0]), _zeros(2))

    q1 = ScalarField(2, lambda t, q, p: q[0], q1_grad, name="q1")
    return TDSystem(
        m=2,
        hamiltonian=base.hamiltonian,
        integrals=(q1, base.integrals[0]),
        label="adversarial",
        compact=(False, False),
        autonomous=True,
    )


class ErmakovAuxiliary:
    """
    Auxiliary function rho(t) of a time-dependent oscillator.

    rho solves rho'' + w(t) rho = rho^-3 with rho(0) = w(0)^(-1/4) (that is
    omega(0)^(-1/2)) and rho'(0) = 0. ``state_at`` integrates from t = 0
    through a cached chain of nodes spaced ``node_spacing`` apart, with a fixed
    number of fifth-order substeps per interval, so values depend smoothly on t.
    """

    dim = 2

    def __init__(
        self,
        omega_sq: RealFn,
        node_spacing: float = 0.25,
        substeps: int = 16,
    ):
        self.omega_sq = omega_sq
        self.node_spacing = node_spacing
        self.substeps = substeps
        w0 = omega_sq(0.0)
        if not w0 > 0:
            raise ValueError(f"omega^2(0) must be positive, got {w0}")
        self._initial = np.array([w0**-0.25, 0.0])
        self._forward: List[np.ndarray] = [self._initial]
        self._backward: List[np.ndarray] = [self._initial]
        self._lock = threading.Lock()

    def initial_state(self) -> np.ndarray:
        """(rho, rho') at t = 0."""
        return self._initial.copy()

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        """Ermakov equation as a first-order system."""
        rho, rho_dot = y[0], y[1]
        return np.array([rho_dot, -self.omega_sq(t) * rho + rho**-3])

    def second_derivative(self, t: float, rho: float) -> float:
        """rho'' from the Ermakov equation."""
        return -self.omega_sq(t) * rho + rho**-3

    def _advance(self, t: float, y: np.ndarray, dt: float) -> np.ndarray:
        h = dt / self.substeps
        for i in range(self.substeps):
            y = step_once(self.rhs, t + i * h, y, h, "rk45")
        return y

    def _node(self, k: int) -> np.ndarray:
        nodes = self._forward if k >= 0 else self._backward
        sign = 1.0 if k >= 0 else -1.0
        with self._lock:
            while len(nodes) <= abs(k):
                j = len(nodes) - 1
                nodes.append(
                    self._advance(sign * j * self.node_spacing, nodes[j], sign * self.node_spacing)
                )
            return nodes[abs(k)]

    def state_at(self, t: float) -> np.ndarray:
        """(rho, rho') at time t."""
        k = int(math.floor(abs(t) / self.node_spacing)) * (1 if t >= 0 else -1)
        t_node = k * self.node_spacing
        y = self._node(k)
        if t == t_node:
            return y.copy()
        return self._advance(t_node, y, t - t_node)


def td_oscillator_system(
    omega_sq: RealFn, omega_sq_dot: RealFn, label: str = "td_oscillator"
) -> TDSystem:
    """
    Time-dependent oscillator H = p^2/2 + w(t) q^2/2 with its Ermakov-Lewis
    invariant F = ((q/rho)^2 + (rho p - rho' q)^2)/2.

    Args:
        omega_sq: w(t) = omega(t)^2, positive
        omega_sq_dot: dw/dt
        label: Report label
    """
    aux = ErmakovAuxiliary(omega_sq)

    def h_value(t, q, p):
        return 0.5 * p[0] * p[0] + 0.5 * omega_sq(t) * q[0] * q[0]

    def h_grad(t, q, p):
        return Gradient(
            0.5 * omega_sq_dot(t) * q[0] * q[0],
            np.array([omega_sq(t) * q[0]]),
            np.array([p[0]]),
        )

    def invariant(t: float, q: float, p: float, rho: float, rho_dot: float) -> float:
        w = rho * p - rho_dot * q
        return 0.5 * ((q / rho) ** 2 + w * w)

    def f_value(t, q, p):
        rho, rho_dot = aux.state_at(t)
        return invariant(t, q[0], p[0], rho, rho_dot)

    def f_grad(t, q, p):
        rho, rho_dot = aux.state_at(t)
        rho_ddot = aux.second_derivative(t, rho)
        qq, pp = q[0], p[0]
        w = rho * pp - rho_dot * qq
        dt = -qq * qq * rho_dot / rho**3 + w * (rho_dot * pp - rho_ddot * qq)
        return Gradient(
            dt,
            np.array([qq / rho**2 - rho_dot * w]),
            np.array([rho * w]),
        )

    def f_aux(x: PhasePoint, state: Sequence[float]) -> float:
        return invariant(x.t, x.q[0], x.p[0], state[0], state[1])

    ermakov = ScalarField(1, f_value, f_grad, name="ErmakovLewis", aux_value=f_aux)
    return TDSystem(
        m=1,
        hamiltonian=ScalarField(1, h_value, h_grad, name="H"),
        integrals=(ermakov,),
        label=label,
        compact=(True,),
        separable=True,
        autonomous=False,
        auxiliary=aux,
    )


def td_oscillator(omega0: float = 1.0, amplitude: float = 0.1, frequency: float = 1.0) -> TDSystem:
    """
    Oscillator with w(t) = omega0^2 + amplitude * sin(frequency * t).

    Raises:
        ValueError: Unless omega0 > 0 and |amplitude| < omega0^2
    """
    if not omega0 > 0:
        raise ValueError(f"omega0 must be positive, got {omega0}")
    base = omega0 * omega0
    if not abs(amplitude) < base:
        raise ValueError(f"|amplitude| must be below omega0^2={base:g}, got {amplitude}")
    return td_oscillator_system(
        lambda t: base + amplitude * math.sin(frequency * t),
        lambda t: amplitude * frequency * math.cos(frequency * t),
        label=f"td_oscillator(omega0={omega0:g}, amplitude={amplitude:g}, frequency={frequency:g})",
    )


def _expression_field(expr: Expression, m: int, name: str) -> ScalarField:
    names = ["t"] + [f"q{k + 1}" for k in range(m)] + [f"p{k + 1}" for k in range(m)]
    partials = [expr.derivative(v) for v in names]

    def env(t, q, p) -> Dict[str, float]:
        return dict(zip(names, (t, *q, *p)))

    def value(t, q, p):
        return expr.evaluate(env(t, q, p))

    def grad(t, q, p):
        e = env(t, q, p)
        g = [float(d.evaluate(e)) for d in partials]
        return Gradient(g[0], np.array(g[1 : 1 + m]), np.array(g[1 + m :]))

    return ScalarField(m, value, grad, name=name)


def make_expression_system(
    hamiltonian: str,
    integrals: Sequence[str],
    m: int,
    label: str = "custom",
    compact: Optional[Sequence[bool]] = None,
    separable: bool = False,
) -> TDSystem:
    """
    System from scalar expressions in t, q1..qm, p1..pm with exact gradients.

    Examples:
        >>> sys = make_expression_system("p1^2/2 + q1^2/2", ["p1^2/2 + q1^2/2"], m=1)
    """
    names = ["t"] + [f"q{k + 1}" for k in range(m)] + [f"p{k + 1}" for k in range(m)]
    h_expr = parse_expression(hamiltonian, names)
    fields = tuple(
        _expression_field(parse_expression(src, names), m, f"F{k + 1}")
        for k, src in enumerate(integrals)
    )
    return TDSystem(
        m=m,
        hamiltonian=_expression_field(h_expr, m, "H"),
        integrals=fields,
        label=label,
        compact=tuple(compact) if compact is not None else (False,) * m,
        separable=separable,
        autonomous="t" not in h_expr.variables,
    )


def _build_td_oscillator(spec: SystemSpec) -> TDSystem:
    _check_keys(spec, ("omega0", "amplitude", "frequency"))
    custom = spec.expressions.get("omega_sq")
    if custom is None:
        return td_oscillator(
            omega0=float(spec.parameters.get("omega0", 1.0)),
            amplitude=float(spec.parameters.get("amplitude", 0.1)),
            frequency=float(spec.parameters.get("frequency", 1.0)),
        )
    expr = parse_expression(str(custom), ["t"])
    rate = expr.derivative("t")
    get_logger().warning(
        f"td_oscillator with user omega^2(t) = {custom}: positivity and boundedness "
        "of the Ermakov auxiliary are not guaranteed"
    )
    return td_oscillator_system(
        lambda t: float(expr.evaluate({"t": t})),
        lambda t: float(rate.evaluate({"t": t})),
        label=f"td_oscillator(omega_sq={custom})",
    )


def _build_custom(spec: SystemSpec) -> TDSystem:
    if spec.m is None:
        raise ValueError("custom systems need 'm'")
    h = spec.expressions.get("hamiltonian")
    fs = spec.expressions.get("integrals")
    if not isinstance(h, str) or not isinstance(fs, (list, tuple)):
        raise ValueError("custom systems need 'hamiltonian' and a list of 'integrals'")
    compact = spec.expressions.get("compact")
    return make_expression_system(
        h,
        [str(f) for f in fs],
        spec.m,
        label=str(spec.expressions.get("label", "custom")),
        compact=compact if isinstance(compact, (list, tuple)) else None,
        separable=bool(spec.expressions.get("separable", False)),
    )


def _simple(builder: Callable[..., TDSystem], keys: Sequence[str]) -> Callable[[SystemSpec], TDSystem]:
    def build(spec: SystemSpec) -> TDSystem:
        _check_keys(spec, keys)
        kwargs = {k: _positive(spec.parameters, k, 1.0) for k in keys if k in spec.parameters}
        return builder(**kwargs)

    return build


def _build_free_particle(spec: SystemSpec) -> TDSystem:
    _check_keys(spec, ())
    return free_particle(spec.m or 1)


def _build_adversarial(spec: SystemSpec) -> TDSystem:
    _check_keys(spec, ())
    return adversarial()


BUILDERS: Dict[str, Callable[[SystemSpec], TDSystem]] = {
    "free_particle": _build_free_particle,
    "harmonic": _simple(harmonic, ("omega",)),
    "pendulum": _simple(pendulum, ("omega",)),
    "td_oscillator": _build_td_oscillator,
    "separable_2dof": _simple(separable_2dof, ("omega1", "omega2")),
    "adversarial": _build_adversarial,
    "custom": _build_custom,
}


def make_system(spec: SystemSpec) -> TDSystem:
    """
    Build a registered system.

    Raises:
        UnknownSystemError: Unknown name
        ValueError: Invalid parameters
    """
    try:
        builder = BUILDERS[spec.name]
    except KeyError as e:
        raise UnknownSystemError(
            f"Unknown system '{spec.name}'. Available: {', '.join(sorted(BUILDERS))}"
        ) from e
    sys = builder(spec)
    get_logger().debug(f"Built system {sys.label}")
    return sys


def default_region(spec: SystemSpec, count: int = 200, seed: int = 42) -> SampleRegion:
    """
    Default sampling region of a system.

    Regions avoid the known critical sets: equilibria are excluded per degree
    and the pendulum stays inside the well (energy below -0.1).
    """
    name = spec.name
    if name == "pendulum":
        w2 = _positive(spec.parameters, "omega", 1.0) ** 2
        return SampleRegion(
            (0.0, 2.0), ((-2.5, 2.5),), ((-1.2, 1.2),), count, seed,
            max_energy=-0.1 * w2, min_radius=0.05,
        )
    if name in ("free_particle", "adversarial"):
        m = 2 if name == "adversarial" else spec.m or 1
        return SampleRegion((0.0, 2.0), ((-2.0, 2.0),) * m, ((-2.0, 2.0),) * m, count, seed)
    if name == "separable_2dof":
        return SampleRegion(
            (0.0, 2.0), ((-1.5, 1.5),) * 2, ((-1.5, 1.5),) * 2, count, seed, min_radius=0.1
        )
    if name == "custom":
        m = spec.m or 1
        return SampleRegion((0.0, 1.0), ((-1.0, 1.0),) * m, ((-1.0, 1.0),) * m, count, seed)
    return SampleRegion((0.0, 2.0), ((-2.0, 2.0),), ((-2.0, 2.0),), count, seed, min_radius=0.1)
