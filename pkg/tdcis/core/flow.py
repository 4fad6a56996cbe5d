"""
Trajectory integration on V*Q.

Two explicit Runge-Kutta schemes drive every flow in the package: classic
fixed-step RK4 and the embedded Runge-Kutta-Fehlberg 4(5) pair with error
control (the fifth-order solution is propagated). Backward runs integrate
the negated vector field in a forward parameter, so step control is the same
in both directions.
"""

import csv
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, List, Optional, Tuple

import numpy as np

from tdcis.core.brackets import gamma_h, hamiltonian_vector_field
from tdcis.core.errors import (
    BlowUpError,
    DivergenceError,
    ExpressionError,
    IncompletenessError,
    IntegrationError,
    NumericError,
)
from tdcis.core.fields import ScalarField, TDSystem
from tdcis.core.phase import PhasePoint
from tdcis.core.utils import format_real
from tdcis.logging.logger import get_logger

RHS = Callable[[float, np.ndarray], np.ndarray]
StopCondition = Callable[[float, np.ndarray, float, np.ndarray], bool]

METHODS = ("rk4", "rk45")

# Runge-Kutta-Fehlberg tableau
_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)
_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)
_E = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))


@dataclass(frozen=True)
class StepControl:
    """
    Integrator selection and step control.

    Attributes:
        method: ``"rk4"`` (fixed step) or ``"rk45"`` (adaptive)
        step: Fixed step for rk4; initial step for rk45
        abs_tol: Absolute local error tolerance (rk45)
        rel_tol: Relative local error tolerance (rk45)
        max_steps: Step budget, attempts included
    """

    method: str = "rk45"
    step: float = 0.01
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_steps: int = 100_000

    def __post_init__(self) -> None:
        method = "rk45" if self.method == "rk45_adaptive" else self.method
        if method not in METHODS:
            raise ValueError(f"Unknown integration method: {self.method}")
        object.__setattr__(self, "method", method)
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")

    def tightened(self, tol: float) -> "StepControl":
        """Adaptive control with both tolerances at most ``tol``."""
        return replace(
            self,
            method="rk45",
            abs_tol=min(self.abs_tol, tol),
            rel_tol=min(self.rel_tol, tol),
        )


@dataclass(frozen=True)
class StepStats:
    """Accepted steps, largest step taken, largest local error estimate."""

    steps: int = 0
    max_step: float = 0.0
    est_error: float = 0.0


@dataclass
class Solution:
    """Raw output of ``solve_ode``: sampled times, states and step statistics."""

    times: List[float]
    states: List[np.ndarray]
    stats: StepStats
    stopped: bool = False


def rk4_step(rhs: RHS, t: float, y: np.ndarray, h: float) -> np.ndarray:
    """Single classic Runge-Kutta step."""
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def rkf45_step(rhs: RHS, t: float, y: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Single Runge-Kutta-Fehlberg step.

    Returns:
        Fifth-order solution and the local error estimate (y5 - y4)
    """
    ks: List[np.ndarray] = []
    for c, row in zip(_C, _A):
        yi = y.copy()
        for a, k in zip(row, ks):
            yi = yi + h * a * k
        ks.append(rhs(t + c * h, yi))
    y5 = y + h * sum(b * k for b, k in zip(_B5, ks))
    err = h * sum(e * k for e, k in zip(_E, ks))
    return y5, err


def step_once(rhs: RHS, t: float, y: np.ndarray, h: float, method: str) -> np.ndarray:
    """Advance by exactly ``h`` with the propagated solution of ``method``."""
    if method == "rk4":
        return rk4_step(rhs, t, y, h)
    return rkf45_step(rhs, t, y, h)[0]


def _safe_eval(rhs: RHS) -> RHS:
    def wrapped(t: float, y: np.ndarray) -> np.ndarray:
        try:
            dy = np.asarray(rhs(t, y), dtype=float)
        except (NumericError, ExpressionError, ArithmeticError, ValueError):
            return np.full_like(y, np.nan)
        return dy

    return wrapped


def solve_ode(
    rhs: RHS,
    t0: float,
    y0: np.ndarray,
    t1: float,
    ctl: StepControl,
    stop: Optional[StopCondition] = None,
) -> Solution:
    """
    Integrate ``dy/dt = rhs(t, y)`` from t0 to t1.

    Integration runs in the forward parameter s = |t - t0| on the field
    multiplied by sign(t1 - t0). Every accepted step is recorded; the last
    recorded time is exactly ``t1`` unless ``stop`` ended the run early.

    Args:
        rhs: Right-hand side
        t0: Initial time
        y0: Initial state (copied)
        t1: Target time, may precede t0
        ctl: Step control
        stop: Called after each accepted step with (t_prev, y_prev, t_new, y_new);
            returning True ends the run with ``stopped=True``

    Raises:
        DivergenceError: Step budget exhausted
        BlowUpError: Non-finite state or collapsed step size
    """
    y = np.array(y0, dtype=float)
    times, states = [t0], [y.copy()]
    span = abs(t1 - t0)
    if span == 0.0:
        return Solution(times, states, StepStats())

    direction = 1.0 if t1 > t0 else -1.0
    f = _safe_eval(rhs)

    def g(s: float, state: np.ndarray) -> np.ndarray:
        return direction * f(t0 + direction * s, state)

    def time_at(s: float, last: bool) -> float:
        return t1 if last else t0 + direction * s

    s, steps, attempts = 0.0, 0, 0
    max_step, est_error = 0.0, 0.0

    def last_point_error(kind, message: str) -> IntegrationError:
        return kind(message, last_point=(times[-1], states[-1].copy()))

    if ctl.method == "rk4":
        n = max(1, math.ceil(span / ctl.step - 1e-9))
        if n > ctl.max_steps:
            raise last_point_error(
                DivergenceError, f"rk4 needs {n} steps, budget is {ctl.max_steps}"
            )
        h = span / n
        for i in range(n):
            y_new = rk4_step(g, s, y, h)
            if not np.all(np.isfinite(y_new)):
                raise last_point_error(BlowUpError, f"state blew up near t={time_at(s, False)}")
            s_new = (i + 1) * h
            t_prev = times[-1]
            last = i == n - 1
            times.append(time_at(s_new, last))
            states.append(y_new)
            steps += 1
            if stop is not None and stop(t_prev, y, times[-1], y_new):
                return Solution(times, states, StepStats(steps, h, 0.0), stopped=True)
            s, y = s_new, y_new
        return Solution(times, states, StepStats(steps, h, 0.0))

    h = min(ctl.step, span)
    while s < span:
        if attempts >= ctl.max_steps:
            raise last_point_error(
                DivergenceError,
                f"max_steps={ctl.max_steps} exceeded at t={times[-1]:.17g}",
            )
        attempts += 1
        last = h >= span - s
        if last:
            h = span - s
        y_new, err = rkf45_step(g, s, y, h)
        if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(err))):
            h *= 0.25
            if h < 1e-14 * max(1.0, span):
                raise last_point_error(BlowUpError, f"state blew up near t={times[-1]:.17g}")
            continue
        scale = ctl.abs_tol + ctl.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        e = float(np.max(np.abs(err) / scale))
        if e <= 1.0:
            s_new = span if last else s + h
            t_prev = times[-1]
            times.append(time_at(s_new, last))
            states.append(y_new)
            steps += 1
            max_step = max(max_step, h)
            est_error = max(est_error, float(np.max(np.abs(err))))
            if stop is not None and stop(t_prev, y, times[-1], y_new):
                return Solution(times, states, StepStats(steps, max_step, est_error), True)
            s, y = s_new, y_new
            factor = 5.0 if e == 0.0 else min(5.0, max(0.2, 0.9 * e**-0.2))
        else:
            factor = max(0.2, 0.9 * e**-0.25)
        h *= factor
        if h < 1e-14 * max(1.0, span):
            raise last_point_error(BlowUpError, f"step size collapsed at t={times[-1]:.17g}")
    return Solution(times, states, StepStats(steps, max_step, est_error))


@dataclass(frozen=True)
class Trajectory:
    """
    Sampled solution of the Hamilton equation.

    Attributes:
        points: Accepted-step samples, strictly monotone in t; the first point
            is the requested initial condition itself
        system_label: Label of the integrated system
        step_stats: Step statistics of the run
        aux: Co-integrated auxiliary states, one per point (or None)
    """

    points: Tuple[PhasePoint, ...]
    system_label: str = ""
    step_stats: StepStats = field(default_factory=StepStats)
    aux: Optional[Tuple[Tuple[float, ...], ...]] = None

    def __len__(self) -> int:
        return len(self.points)

    @property
    def initial(self) -> PhasePoint:
        """First sample."""
        return self.points[0]

    @property
    def final(self) -> PhasePoint:
        """Last sample."""
        return self.points[-1]

    @property
    def times(self) -> np.ndarray:
        """Sample times."""
        return np.array([x.t for x in self.points])

    def aux_at(self, i: int) -> Optional[Tuple[float, ...]]:
        """Auxiliary state of sample i, if any."""
        return None if self.aux is None else self.aux[i]

    def to_csv_text(self) -> str:
        """CSV with header ``t,q1..qm,p1..pm`` and 17 significant digits."""
        m = self.points[0].m
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["t"] + [f"q{k + 1}" for k in range(m)] + [f"p{k + 1}" for k in range(m)])
        for x in self.points:
            writer.writerow([format_real(v) for v in (x.t, *x.q, *x.p)])
        return buffer.getvalue()

    def write_csv(self, path: str) -> str:
        """Write the CSV export and return the path."""
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(self.to_csv_text(), encoding="utf-8")
        return str(target)


def _system_rhs(sys: TDSystem) -> RHS:
    m = sys.m
    aux = sys.auxiliary

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        v = gamma_h(sys, PhasePoint.from_state(t, y[: 2 * m]))
        dy = v.state
        if aux is not None:
            dy = np.concatenate((dy, aux.rhs(t, y[2 * m :])))
        return dy

    return rhs


def integrate(sys: TDSystem, x0: PhasePoint, t_target: float, ctl: StepControl) -> Trajectory:
    """
    Integrate the Hamilton equation from x0 to time ``t_target``.

    Auxiliary states of the system (if any) are co-integrated with the same
    step control and stored on the trajectory.

    Raises:
        DivergenceError: Step budget exhausted (``last_point`` holds the last good sample)
        BlowUpError: Non-finite state
    """
    if not math.isfinite(t_target):
        raise NumericError(f"t_target must be finite, got {t_target}")
    m = sys.m
    y0 = x0.state
    aux = sys.auxiliary
    if aux is not None:
        aux0 = aux.initial_state() if x0.t == 0.0 else aux.state_at(x0.t)
        y0 = np.concatenate((y0, aux0))

    try:
        sol = solve_ode(_system_rhs(sys), x0.t, y0, t_target, ctl)
    except IntegrationError as e:
        if e.last_point is not None:
            t_last, y_last = e.last_point
            e.last_point = PhasePoint.from_state(t_last, y_last[: 2 * m])
        get_logger().log_numeric_failure("integrate", str(e))
        raise

    points = [x0] + [
        PhasePoint.from_state(t, y[: 2 * m]) for t, y in zip(sol.times[1:], sol.states[1:])
    ]
    aux_states = None
    if aux is not None:
        aux_states = tuple(tuple(float(v) for v in y[2 * m :]) for y in sol.states)
    traj = Trajectory(tuple(points), sys.label, sol.stats, aux_states)
    get_logger().log_trajectory(traj)
    return traj


@dataclass(frozen=True)
class ProjectionResult:
    """Initial-data projection with its forward round-trip residual."""

    point: PhasePoint
    round_trip_error: float


def initial_data_projection(sys: TDSystem, x: PhasePoint, ctl: StepControl) -> PhasePoint:
    """
    Flow x back along the trajectory through it to the t = 0 fibre.

    Points already at t = 0 are returned unchanged, no integration performed.

    Raises:
        IncompletenessError: When the backward integration cannot be completed
    """
    if x.t == 0.0:
        return x
    try:
        return integrate(sys, x, 0.0, ctl).final
    except IntegrationError as e:
        raise IncompletenessError(
            f"trajectory through {x.describe()} cannot be continued to t=0: {e}",
            last_point=e.last_point,
        ) from e


def project_with_round_trip(sys: TDSystem, x: PhasePoint, ctl: StepControl) -> ProjectionResult:
    """
    Initial-data projection plus the distance between x and the forward image
    of the projected point.
    """
    x0 = initial_data_projection(sys, x, ctl)
    if x.t == 0.0:
        return ProjectionResult(x0, 0.0)
    back = integrate(sys, x0, x.t, ctl).final
    residual = back.distance(x)
    get_logger().debug(f"initial-data projection round trip residual {residual:.3e}")
    return ProjectionResult(x0, residual)


def slice_flow(f: ScalarField, x: PhasePoint, tau: float, ctl: StepControl) -> PhasePoint:
    """
    Flow of the vertical Hamiltonian field of f for parameter ``tau``.

    Time stays fixed at x.t; f is conserved along the flow.

    Raises:
        IncompletenessError: When the flow blows up before ``tau``
    """
    if tau == 0.0:
        return x
    t = x.t

    def rhs(s: float, y: np.ndarray) -> np.ndarray:  # noqa: ARG001
        return hamiltonian_vector_field(f, PhasePoint.from_state(t, y)).state

    try:
        sol = solve_ode(rhs, 0.0, x.state, tau, ctl)
    except IntegrationError as e:
        raise IncompletenessError(f"flow of '{f.name}' incomplete: {e}") from e
    return PhasePoint.from_state(t, sol.states[-1])
