"""
Time-dependent action-angle charts.

Charts are built for separable systems whose level sets are compact closed
curves on each time slice. A point is first carried to the t = 0 fibre by the
initial-data projection; each degree of freedom is then charted on that slice:

    action  I = (1/2pi) * loop integral of p dq over the level curve of F_k
    angle   phi = 2pi * (flow parameter since the reference section) / period

The reference section of a curve is its intersection with p = 0 on the side
q > q_center (the largest such q). Tracing the curve and accumulating the
loop integral happen in a single adaptive integration pass.

Shifted charts add t * grad H(I) to the angles, which turns the vanishing
initial-data Hamiltonian into H(I).
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq
from tqdm import tqdm

from tdcis.core.brackets import lift_hamiltonian
from tdcis.core.dual import seed, value_and_grad
from tdcis.core.errors import (
    ChartDomainError,
    ChartError,
    IntegrationError,
    NonCompactError,
    PeriodNotFoundError,
    SeparatrixError,
)
from tdcis.core.expression import parse_expression
from tdcis.core.fields import ScalarField, TDSystem
from tdcis.core.flow import (
    StepControl,
    initial_data_projection,
    integrate,
    slice_flow,
    solve_ode,
    step_once,
)
from tdcis.core.phase import ExtendedPoint, PhasePoint
from tdcis.core.utils import TWO_PI, angle_difference, format_real, unwrap_angles, wrap_angle
from tdcis.core.verify import SampleRegion, VerifyReport
from tdcis.logging.logger import get_logger

INITIAL_DATA = "initial_data"
SHIFTED = "shifted"
WW26 = "ww26"

DEFAULT_CHART_TOL = 1e-12
DEFAULT_SEPARATRIX_GAP = 1e-3
DEFAULT_MAX_PARAMETER = 100.0
CURVE_CACHE_SIZE = 256


def chart_control(ctl: Optional[StepControl] = None, tol: float = DEFAULT_CHART_TOL) -> StepControl:
    """Adaptive step control used for level-curve tracing and chart flows."""
    return (ctl or StepControl()).tightened(tol)


@dataclass(frozen=True)
class LevelCurve:
    """
    A traced closed level curve.

    Attributes:
        level: Value of F on the curve
        action: (1/2pi) * loop integral of p dq
        period: Flow parameter of one revolution
        reference: Intersection with the reference section
    """

    level: float
    action: float
    period: float
    reference: PhasePoint


@dataclass(frozen=True)
class ActionProfile:
    """Actions and periods of a one-degree-of-freedom field over a set of levels."""

    f_slice: ScalarField
    t: float
    levels: Tuple[float, ...]
    actions: Tuple[float, ...]
    periods: Tuple[float, ...]


def _slice_point(t: float, q: float, p: float) -> PhasePoint:
    return PhasePoint(t, (q,), (p,))


def _require_single_degree(f: ScalarField) -> None:
    if f.m != 1:
        raise ChartError(f"field '{f.name}' has m={f.m}; restrict it to one degree first")


def _march(
    f: ScalarField,
    t: float,
    level: float,
    center: float,
    direction: float,
    gap: float,
    max_extent: float,
) -> float:
    """
    Walk along p = 0 from the well centre until the level is crossed.

    Maxima of F met on the way, and any within a margin beyond the crossing,
    are treated as critical values; the level must stay ``gap`` away from them.
    """

    def g(q: float) -> float:
        return f.eval(_slice_point(t, q, 0.0)) - level

    def slope(q: float) -> float:
        return direction * float(f.grad(_slice_point(t, q, 0.0)).dq[0])

    def root(fn: Callable[[float], float], a: float, b: float) -> float:
        lo, hi = (a, b) if a < b else (b, a)
        return float(brentq(fn, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))

    def dslope(q: float) -> float:
        return float(f.grad(_slice_point(t, q, 0.0)).dq[0])

    q_prev, g_prev, d_prev = center, g(center), slope(center)
    turning: Optional[float] = None
    limit = max_extent
    while abs(q_prev - center) <= limit:
        dist = abs(q_prev - center)
        q = q_prev + direction * 0.02 * max(1.0, dist)
        gv, d = g(q), slope(q)
        if d_prev > 0.0 and d <= 0.0:
            qe = root(dslope, q_prev, q) if d < 0.0 else q
            ge = g(qe)
            if abs(ge) < gap:
                raise SeparatrixError(
                    f"level {level:.17g} lies within {gap:g} of the critical value "
                    f"{ge + level:.17g} at q={qe:.17g}"
                )
            if turning is None:
                if ge < 0.0:
                    raise NonCompactError(
                        f"level {level:.17g} passes above the barrier at q={qe:.17g}; "
                        "the level set is not a closed curve around the well"
                    )
                turning = root(g, q_prev, qe)
                limit = abs(turning - center) * 1.25 + 0.05
        elif turning is None and gv >= 0.0 > g_prev:
            turning = root(g, q_prev, q) if gv > 0.0 else q
            limit = abs(turning - center) * 1.25 + 0.05
        q_prev, g_prev, d_prev = q, gv, d
    if turning is None:
        raise NonCompactError(
            f"level {level:.17g} of '{f.name}' does not close within |q - q_center| <= {max_extent:g}"
        )
    return turning


def reference_point(
    f: ScalarField,
    t: float,
    level: float,
    center: float = 0.0,
    separatrix_gap: float = DEFAULT_SEPARATRIX_GAP,
    max_extent: float = 1e4,
) -> PhasePoint:
    """
    Intersection of a level curve with the reference section p = 0, q > center.

    Both sides of the well are scanned so that critical values on either
    side are detected.

    Raises:
        ChartDomainError: Level at or below the bottom of the well
        NonCompactError: Level set is open
        SeparatrixError: Level too close to a critical value
    """
    _require_single_degree(f)
    bottom = f.eval(_slice_point(t, center, 0.0))
    if not level > bottom:
        raise ChartDomainError(
            f"level {level:.17g} is not above the well bottom {bottom:.17g} of '{f.name}'"
        )
    right = _march(f, t, level, center, 1.0, separatrix_gap, max_extent)
    _march(f, t, level, center, -1.0, separatrix_gap, max_extent)
    return _slice_point(t, right, 0.0)


def _trace(
    f: ScalarField,
    start: PhasePoint,
    center: float,
    ctl: StepControl,
    max_parameter: float,
    crossings: int,
) -> List[Tuple[float, np.ndarray]]:
    """
    Follow the vertical Hamiltonian flow of f from ``start`` while
    accumulating the loop integral of p dq.

    Returns (parameter, [q, p, integral]) at each downward crossing of the
    reference section, ``crossings`` of them.
    """
    t = start.t

    def rhs(s: float, y: np.ndarray) -> np.ndarray:  # noqa: ARG001
        g = f.grad(_slice_point(t, y[0], y[1]))
        dq, dp = g.dp[0], -g.dq[0]
        return np.array([dq, dp, y[1] * dq])

    pending: List[Tuple[float, np.ndarray, float, np.ndarray]] = []

    def stop(s0: float, y0: np.ndarray, s1: float, y1: np.ndarray) -> bool:
        if y0[1] > 0.0 >= y1[1] and y1[0] > center:
            pending.append((s0, y0.copy(), s1, y1.copy()))
            return len(pending) >= crossings
        return False

    y_start = np.array([start.q[0], start.p[0], 0.0])
    try:
        sol = solve_ode(rhs, 0.0, y_start, max_parameter, ctl, stop)
    except IntegrationError as e:
        raise PeriodNotFoundError(f"tracing the level curve of '{f.name}' failed: {e}") from e
    if not sol.stopped:
        raise PeriodNotFoundError(
            f"level curve of '{f.name}' through {start.describe()} did not close "
            f"within parameter {max_parameter:g}"
        )

    hits = []
    for s0, y0, s1, y1 in pending:
        if y1[1] == 0.0:
            hits.append((s1, y1))
            continue

        def momentum(s: float, s0: float = s0, y0: np.ndarray = y0) -> float:
            return float(step_once(rhs, s0, y0, s - s0, ctl.method)[1]) if s > s0 else float(y0[1])

        s_hit = float(brentq(momentum, s0, s1, xtol=1e-15, rtol=4 * np.finfo(float).eps))
        hits.append((s_hit, step_once(rhs, s0, y0, s_hit - s0, ctl.method)))
    return hits


def trace_level(
    f: ScalarField,
    t: float,
    level: float,
    ctl: Optional[StepControl] = None,
    center: float = 0.0,
    tol: float = 1e-7,
    separatrix_gap: float = DEFAULT_SEPARATRIX_GAP,
    max_parameter: float = DEFAULT_MAX_PARAMETER,
) -> LevelCurve:
    """
    Trace one closed level curve of a one-degree-of-freedom field.

    Args:
        f: Field with m = 1
        t: Time slice
        level: Value of f on the curve
        ctl: Step control (tightened to the chart tolerance when omitted)
        center: q of the well centre
        tol: Closure tolerance, relative to max(1, |q_ref|)
        separatrix_gap: Minimal distance of the level from critical values
        max_parameter: Flow parameter cap

    Raises:
        NonCompactError, SeparatrixError, PeriodNotFoundError, ChartDomainError
    """
    ref = reference_point(f, t, level, center, separatrix_gap)
    ctl = ctl or chart_control()
    [(s_hit, y_hit)] = _trace(f, ref, center, ctl, max_parameter, 1)
    gap = math.hypot(y_hit[0] - ref.q[0], y_hit[1])
    if gap > tol * max(1.0, abs(ref.q[0])):
        raise PeriodNotFoundError(
            f"level curve {level:.17g} of '{f.name}' returned {gap:.3e} away from its start"
        )
    return LevelCurve(level, abs(float(y_hit[2])) / TWO_PI, s_hit, ref)


def action_integral(
    f: ScalarField, t: float, level: float, quad_tol: float = 1e-10, center: float = 0.0
) -> float:
    """
    Action (1/2pi) * loop integral of p dq of the level curve {f = level}.

    Examples:
        harmonic energy (p^2 + q^2)/2 at level 0.5 -> 0.5
    """
    ctl = chart_control(tol=min(quad_tol * 1e-2, DEFAULT_CHART_TOL))
    return trace_level(f, t, level, ctl, center).action


def period(
    f: ScalarField,
    t: float,
    level: float,
    tol: float = 1e-8,
    center: float = 0.0,
    max_parameter: float = DEFAULT_MAX_PARAMETER,
) -> float:
    """
    Flow parameter of one revolution of the level curve.

    Raises:
        PeriodNotFoundError: No return within ``max_parameter`` (``SeparatrixError``
            near critical levels)
    """
    ctl = chart_control(tol=min(tol * 1e-2, DEFAULT_CHART_TOL))
    return trace_level(f, t, level, ctl, center, max_parameter=max_parameter).period


def action_profile(
    f: ScalarField,
    t: float,
    levels: Sequence[float],
    ctl: Optional[StepControl] = None,
    center: float = 0.0,
) -> ActionProfile:
    """
    Actions and periods over sorted levels.

    Raises:
        ChartError: When the actions are not strictly increasing
    """
    ordered = sorted(float(v) for v in levels)
    curves = [trace_level(f, t, level, ctl, center) for level in ordered]
    actions = [c.action for c in curves]
    for a, b, la, lb in zip(actions, actions[1:], ordered, ordered[1:]):
        if not b > a:
            raise ChartError(f"action is not increasing between levels {la:g} and {lb:g}")
    return ActionProfile(
        f, t, tuple(ordered), tuple(actions), tuple(c.period for c in curves)
    )


def level_for_action(
    f: ScalarField,
    t: float,
    action: float,
    ctl: Optional[StepControl] = None,
    center: float = 0.0,
    guess: Optional[float] = None,
    tol: float = 1e-11,
    max_iter: int = 50,
    separatrix_gap: float = DEFAULT_SEPARATRIX_GAP,
    max_parameter: float = DEFAULT_MAX_PARAMETER,
) -> LevelCurve:
    """
    Level curve with the given action.

    Newton iteration on the level using dI/dlevel = period / 2pi, safeguarded
    by bisection.

    Raises:
        ChartDomainError: Negative action or no convergence
    """
    if action <= 0.0:
        raise ChartDomainError(f"action must be positive, got {action}")
    bottom = f.eval(_slice_point(t, center, 0.0))
    lo, hi = bottom, math.inf
    level = guess if guess is not None and guess > bottom else bottom + action

    for _ in range(max_iter):
        try:
            curve = trace_level(f, t, level, ctl, center, separatrix_gap=separatrix_gap,
                                max_parameter=max_parameter)
        except (NonCompactError, PeriodNotFoundError):
            hi = level
            level = 0.5 * (lo + hi)
            continue
        diff = curve.action - action
        if abs(diff) <= tol * max(1.0, action):
            return curve
        if diff < 0.0:
            lo = max(lo, level)
        else:
            hi = min(hi, level)
        step = diff * TWO_PI / curve.period
        candidate = level - step
        if not lo < candidate < hi:
            candidate = 0.5 * (lo + hi) if math.isfinite(hi) else lo + 2.0 * (level - lo)
        if abs(candidate - level) <= 4 * np.finfo(float).eps * max(1.0, abs(level)):
            return curve
        level = candidate
    raise ChartDomainError(f"no level of '{f.name}' with action {action:.17g}")


class SliceChart:
    """
    Action-angle chart of a single degree of freedom on one time slice.

    Attributes:
        field: One-degree-of-freedom field whose level curves are charted
        t: Slice time
        center: q of the well centre
    """

    def __init__(
        self,
        field: ScalarField,
        t: float = 0.0,
        center: float = 0.0,
        ctl: Optional[StepControl] = None,
        separatrix_gap: float = DEFAULT_SEPARATRIX_GAP,
        max_parameter: float = DEFAULT_MAX_PARAMETER,
    ):
        _require_single_degree(field)
        self.field = field
        self.t = t
        self.center = center
        self.ctl = ctl or chart_control()
        self.separatrix_gap = separatrix_gap
        self.max_parameter = max_parameter
        self._cached_curve = lru_cache(maxsize=CURVE_CACHE_SIZE)(self._level_curve)

    def forward(self, q: float, p: float) -> Tuple[float, float]:
        """(action, angle) of (q, p)."""
        x = _slice_point(self.t, q, p)
        level = self.field.eval(x)
        reference_point(self.field, self.t, level, self.center, self.separatrix_gap)
        (s1, y1), (s2, y2) = _trace(
            self.field, x, self.center, self.ctl, 2.0 * self.max_parameter, 2
        )
        tau = s2 - s1
        if abs(y2[0] - y1[0]) > 1e-7 * max(1.0, abs(y1[0])):
            raise PeriodNotFoundError(f"level curve through ({q}, {p}) does not close")
        action = abs(float(y2[2] - y1[2])) / TWO_PI
        return action, wrap_angle(TWO_PI * (1.0 - s1 / tau))

    def _level_curve(self, action: float) -> LevelCurve:
        return level_for_action(
            self.field, self.t, action, self.ctl, self.center,
            separatrix_gap=self.separatrix_gap, max_parameter=self.max_parameter,
        )

    def curve_for_action(self, action: float) -> LevelCurve:
        """Level curve of the given action (least recently used curves are evicted)."""
        return self._cached_curve(action)

    def inverse(self, action: float, phi: float) -> Tuple[float, float]:
        """(q, p) with the given action and angle."""
        if action < 0.0:
            raise ChartDomainError(f"negative action {action}")
        if action == 0.0:
            return self.center, 0.0
        curve = self.curve_for_action(action)
        x = slice_flow(
            self.field, curve.reference, wrap_angle(phi) * curve.period / TWO_PI, self.ctl
        )
        return x.q[0], x.p[0]


class ActionFunction:
    """
    Smooth function of the actions with an exact gradient.

    Built from an expression in I1..Im (symbolic derivatives) or from a
    callable differentiated with dual numbers.
    """

    def __init__(
        self,
        m: int,
        value: Callable[[Sequence[float]], float],
        gradient: Callable[[Sequence[float]], np.ndarray],
        source: str = "",
    ):
        self.m = m
        self._value = value
        self._gradient = gradient
        self.source = source

    def __repr__(self) -> str:
        return f"ActionFunction({self.source!r}, m={self.m})"

    def __call__(self, actions: Sequence[float]) -> float:
        return float(self._value(actions))

    def gradient(self, actions: Sequence[float]) -> np.ndarray:
        """Partial derivatives with respect to I1..Im."""
        return np.asarray(self._gradient(actions), dtype=float)

    @classmethod
    def from_expression(cls, text: str, m: int) -> "ActionFunction":
        """
        Parse an expression in I1..Im.

        Raises:
            ExpressionError: On syntax errors or unknown variables
        """
        names = [f"I{k + 1}" for k in range(m)]
        expr = parse_expression(text, names)
        partials = [expr.derivative(n) for n in names]

        def env(actions: Sequence[float]) -> Dict[str, float]:
            return dict(zip(names, actions))

        return cls(
            m,
            lambda a: float(expr.evaluate(env(a))),
            lambda a: np.array([float(d.evaluate(env(a))) for d in partials]),
            source=text,
        )

    @classmethod
    def from_callable(cls, fn: Callable[[Sequence[object]], object], m: int) -> "ActionFunction":
        """Wrap ``fn(I)``, differentiated with dual numbers."""

        def gradient(actions: Sequence[float]) -> np.ndarray:
            return value_and_grad(fn(seed(actions)), m)[1]

        return cls(m, lambda a: float(fn(list(a))), gradient, source=getattr(fn, "__name__", "fn"))

    @classmethod
    def zero(cls, m: int) -> "ActionFunction":
        """The zero function."""
        return cls(m, lambda a: 0.0, lambda a: np.zeros(m), source="0")


@dataclass(frozen=True)
class ChartPoint:
    """Chart coordinates (t, I, phi) with angles in [0, 2pi)."""

    t: float
    I: Tuple[float, ...]  # noqa: E741
    phi: Tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "I", tuple(float(v) for v in self.I))
        object.__setattr__(self, "phi", tuple(wrap_angle(float(v)) for v in self.phi))


class ActionAngleChart:
    """
    Action-angle chart (I; t, phi) of a separable system.

    Attributes:
        system: Charted system
        m: Degrees of freedom
        kind: ``initial_data``, ``shifted`` or ``ww26``
        domain: Region the chart was built for
        shift: Function of the actions added to the Hamiltonian (None for initial data)
    """

    def __init__(
        self,
        system: TDSystem,
        kind: str,
        domain: SampleRegion,
        ctl: StepControl,
        slices: Sequence[SliceChart],
        base: Optional["ActionAngleChart"] = None,
        shift: Optional[ActionFunction] = None,
    ):
        self.system = system
        self.m = system.m
        self.kind = kind
        self.domain = domain
        self.ctl = ctl
        self.slices = tuple(slices)
        self.base = base
        self.shift = shift

    def __repr__(self) -> str:
        return f"ActionAngleChart(kind={self.kind!r}, system={self.system.label!r})"

    def _project(self, x: PhasePoint) -> PhasePoint:
        return initial_data_projection(self.system, x, self.ctl)

    def _angle_shift(self, t: float, actions: Sequence[float]) -> np.ndarray:
        if self.shift is None:
            return np.zeros(self.m)
        return t * self.shift.gradient(actions)

    def frequencies(self, actions: Sequence[float]) -> np.ndarray:
        """Angle rates along trajectories: the gradient of the effective Hamiltonian."""
        own = np.zeros(self.m) if self.shift is None else self.shift.gradient(actions)
        return own if self.base is None else own + self.base.frequencies(actions)

    def effective_hamiltonian(self, actions: Sequence[float]) -> float:
        """Hamiltonian of the dynamics in this chart (zero for initial data)."""
        own = 0.0 if self.shift is None else self.shift(actions)
        return own if self.base is None else own + self.base.effective_hamiltonian(actions)

    def forward(self, x: PhasePoint) -> ChartPoint:
        """
        Chart coordinates of x.

        Raises:
            ChartError: Level set not chartable
            IncompletenessError: Projection to t = 0 failed
        """
        if x.m != self.m:
            raise ChartDomainError(f"chart has m={self.m}, point has m={x.m}")
        if self.base is not None:
            inner = self.base.forward(x)
            phi = np.array(inner.phi) + self._angle_shift(x.t, inner.I)
            return ChartPoint(x.t, inner.I, phi)
        y = self._project(x)
        actions, angles = [], []
        for k, sl in enumerate(self.slices):
            a, phi = sl.forward(y.q[k], y.p[k])
            actions.append(a)
            angles.append(phi)
        return ChartPoint(x.t, actions, angles)

    def inverse(self, t: float, actions: Sequence[float], angles: Sequence[float]) -> PhasePoint:
        """
        Phase point with chart coordinates (t, I, phi).

        Raises:
            ChartDomainError: Coordinates outside the chart
        """
        if len(actions) != self.m or len(angles) != self.m:
            raise ChartDomainError(f"chart has m={self.m}")
        if self.base is not None:
            phi = np.asarray(angles, dtype=float) - self._angle_shift(t, actions)
            return self.base.inverse(t, actions, phi)
        qs, ps = [], []
        for sl, a, phi in zip(self.slices, actions, angles):
            q, p = sl.inverse(float(a), float(phi))
            qs.append(q)
            ps.append(p)
        y = PhasePoint(0.0, qs, ps)
        if t == 0.0:
            return y
        try:
            return integrate(self.system, y, t, self.ctl).final
        except IntegrationError as e:
            raise ChartDomainError(f"cannot flow chart point to t={t}: {e}") from e

    def inverse_point(self, cp: ChartPoint) -> PhasePoint:
        """Inverse of a ``ChartPoint``."""
        return self.inverse(cp.t, cp.I, cp.phi)

    def lifted_forward(self, X: ExtendedPoint) -> Tuple[float, ChartPoint]:
        """
        Chart of the homogeneous phase space.

        Returns (I0, chart point) where I0 = H*(X) minus the effective
        Hamiltonian, the action conjugate to time.
        """
        cp = self.forward(X.project())
        i0 = lift_hamiltonian(self.system).eval(X) - self.effective_hamiltonian(cp.I)
        return i0, cp


def build_initial_data_chart(
    sys: TDSystem,
    region: SampleRegion,
    ctl: Optional[StepControl] = None,
    separatrix_gap: float = DEFAULT_SEPARATRIX_GAP,
    max_parameter: float = DEFAULT_MAX_PARAMETER,
    probe: bool = True,
) -> ActionAngleChart:
    """
    Initial-data action-angle chart: project to t = 0, chart each degree there.

    Args:
        sys: Separable system with compact slices
        region: Domain of the chart
        ctl: Step control, tightened to the chart tolerance
        separatrix_gap: Minimal distance of levels from critical values
        max_parameter: Flow parameter cap when tracing level curves
        probe: Evaluate the chart at one sample of the region to fail early

    Raises:
        NonCompactError: A degree has non-compact level sets
        ChartError: The system is not separable
    """
    if sys.m > 1 and not sys.separable:
        raise ChartError(f"system '{sys.label}' is not separable; only separable charts are built")
    for k, compact in enumerate(sys.compact):
        if not compact:
            raise NonCompactError(
                f"degree {k + 1} of '{sys.label}' has non-compact level sets; "
                "no action-angle chart exists"
            )
    chart_ctl = chart_control(ctl)
    slices = []
    for k, f in enumerate(sys.integrals):
        degree_field = f if sys.m == 1 else f.restrict_to_degree(k)
        slices.append(
            SliceChart(degree_field, 0.0, sys.centers[k], chart_ctl, separatrix_gap, max_parameter)
        )
    chart = ActionAngleChart(sys, INITIAL_DATA, region, chart_ctl, slices)
    if probe:
        chart.forward(region.with_count(1).sample(sys)[0])
    get_logger().log_chart_built(INITIAL_DATA, sys.m, sys.label)
    return chart


def _shifted(chart: ActionAngleChart, fn: ActionFunction, kind: str) -> ActionAngleChart:
    if fn.m != chart.m:
        raise ValueError(f"function of {fn.m} actions for a chart with m={chart.m}")
    new = ActionAngleChart(
        chart.system, kind, chart.domain, chart.ctl, chart.slices, base=chart, shift=fn
    )
    get_logger().log_chart_built(kind, chart.m, chart.system.label)
    return new


def shift_chart(chart: ActionAngleChart, h_of_i: ActionFunction) -> ActionAngleChart:
    """
    Chart in which the Hamiltonian is H(I): phi' = phi + t * grad H(I), I' = I.

    Raises:
        ValueError: Unless ``chart`` is an initial-data chart
    """
    if chart.kind != INITIAL_DATA:
        raise ValueError(f"shift_chart needs an initial-data chart, got {chart.kind}")
    return _shifted(chart, h_of_i, SHIFTED)


def transform_ww26(chart: ActionAngleChart, f0: ActionFunction) -> ActionAngleChart:
    """
    Canonical transformation along the time coordinate:
    I'_0 = I_0 - F0(I), I' = I, phi' = phi + t * grad F0(I).

    Only the time direction is treated as a non-compact coordinate. Charts
    carry no other non-compact coordinates, so no further functions F_a of
    the actions are accepted.
    """
    return _shifted(chart, f0, WW26)


def _jacobian(
    chart: ActionAngleChart, x: PhasePoint, h: float
) -> Tuple[np.ndarray, np.ndarray]:
    """
    d(I, phi)/d(q, p) at x: central differences with one Richardson step.

    Returns (dI, dphi), each of shape (m, 2m) in the ordering (q..., p...).
    """
    m = x.m
    base = x.state

    def diff(step: float, i: int) -> Tuple[np.ndarray, np.ndarray]:
        up, down = base.copy(), base.copy()
        up[i] += step
        down[i] -= step
        a = chart.forward(PhasePoint.from_state(x.t, up))
        b = chart.forward(PhasePoint.from_state(x.t, down))
        d_i = (np.array(a.I) - np.array(b.I)) / (2 * step)
        d_phi = np.array(
            [angle_difference(u, v) for u, v in zip(a.phi, b.phi)]
        ) / (2 * step)
        return d_i, d_phi

    d_actions = np.zeros((m, 2 * m))
    d_angles = np.zeros((m, 2 * m))
    for i in range(2 * m):
        step = h * max(1.0, abs(base[i]))
        coarse_i, coarse_phi = diff(step, i)
        fine_i, fine_phi = diff(0.5 * step, i)
        d_actions[:, i] = (4.0 * fine_i - coarse_i) / 3.0
        d_angles[:, i] = (4.0 * fine_phi - coarse_phi) / 3.0
    return d_actions, d_angles


def _bracket(da: np.ndarray, db: np.ndarray, m: int) -> float:
    # {a, b} = da/dp . db/dq - da/dq . db/dp
    return float(np.dot(da[m:], db[:m]) - np.dot(da[:m], db[m:]))


def check_canonicity(
    chart: ActionAngleChart,
    region: SampleRegion,
    tol: float,
    step: float = 1e-6,
    progress: bool = False,
) -> VerifyReport:
    """
    Canonical relations {I_i, phi^j} = delta, {I_i, I_j} = 0, {phi^i, phi^j} = 0.

    Raises:
        ChartDomainError: When the chart cannot be evaluated on the region
    """
    m = chart.m
    points = region.sample(chart.system)
    residuals = []
    worst_pair = 0.0
    for x in tqdm(points, desc="canonicity", disable=not progress, leave=False):
        try:
            d_actions, d_angles = _jacobian(chart, x, step)
        except (ChartError, IntegrationError) as e:
            raise ChartDomainError(f"chart not invertible at {x.describe()}: {e}") from e
        worst = 0.0
        for i in range(m):
            for j in range(m):
                delta = 1.0 if i == j else 0.0
                pair = _bracket(d_actions[i], d_angles[j], m)
                worst_pair = max(worst_pair, abs(pair - delta))
                worst = max(worst, abs(pair - delta))
                if j > i:
                    worst = max(worst, abs(_bracket(d_actions[i], d_actions[j], m)))
                    worst = max(worst, abs(_bracket(d_angles[i], d_angles[j], m)))
        residuals.append(worst)
    details = {"kind": chart.kind, "max_action_angle_deviation": f"{worst_pair:.6e}"}
    return VerifyReport.from_residuals("canonicity", residuals, points, tol, details)


def check_round_trip(
    chart: ActionAngleChart, region: SampleRegion, tol: float = 1e-7, progress: bool = False
) -> VerifyReport:
    """Largest distance between x and inverse(forward(x)) over the region."""
    points = region.sample(chart.system)
    residuals = []
    for x in tqdm(points, desc="round_trip", disable=not progress, leave=False):
        try:
            back = chart.inverse_point(chart.forward(x))
        except (ChartError, IntegrationError) as e:
            get_logger().debug(f"round trip failed at {x.describe()}: {e}")
            residuals.append(math.inf)
            continue
        residuals.append(back.distance(x))
    return VerifyReport.from_residuals(
        "round_trip", residuals, points, tol, {"kind": chart.kind}
    )


def pullback_in_chart(
    f: ScalarField, chart: ActionAngleChart, t: float, actions: Sequence[float], angles: Sequence[float]
) -> float:
    """Value of f at the phase point with chart coordinates (t, I, phi)."""
    return f.eval(chart.inverse(t, actions, angles))


@dataclass(frozen=True)
class ChartDynamics:
    """
    Chart coordinates along one trajectory.

    Attributes:
        points: Chart points at the requested times
        action_drift: Largest |I(t) - I(t0)|
        angle_slopes: Least-squares slopes of the unwrapped angles
        expected_slopes: Frequencies predicted by the chart
        slope_error: Largest |slope - expected|
        angle_drift: Largest angle excursion from phi(t0) (wrapped)
    """

    points: Tuple[ChartPoint, ...]
    action_drift: float
    angle_slopes: Tuple[float, ...]
    expected_slopes: Tuple[float, ...]
    slope_error: float
    angle_drift: float

    def to_csv_text(self) -> str:
        """CSV ``t,I1..Im,phi1..phim``."""
        return chart_csv_text(self.points)


def chart_dynamics(
    sys: TDSystem,
    chart: ActionAngleChart,
    x0: PhasePoint,
    times: Sequence[float],
    ctl: Optional[StepControl] = None,
) -> ChartDynamics:
    """
    Follow the trajectory through x0 and express it in the chart.

    ``times`` must be dense enough that angles move by less than pi between
    consecutive samples.
    """
    ctl = chart_control(ctl)
    ordered = sorted(float(t) for t in times)
    if len(ordered) < 2:
        raise ValueError("chart dynamics needs at least two sample times")
    x = x0
    points = []
    for t in ordered:
        if t != x.t:
            x = integrate(sys, x, t, ctl).final
        points.append(chart.forward(x))
    actions = np.array([cp.I for cp in points])
    action_drift = float(np.max(np.abs(actions - actions[0])))
    angles = np.array([cp.phi for cp in points])
    slopes = []
    for k in range(chart.m):
        unwrapped = unwrap_angles(angles[:, k])
        slopes.append(float(np.polyfit(ordered, unwrapped, 1)[0]))
    expected = chart.frequencies(points[0].I)
    slope_error = float(np.max(np.abs(np.array(slopes) - expected)))
    angle_drift = max(
        abs(angle_difference(a, b)) for cp in points for a, b in zip(cp.phi, points[0].phi)
    )
    return ChartDynamics(
        tuple(points),
        action_drift,
        tuple(slopes),
        tuple(float(v) for v in expected),
        slope_error,
        angle_drift,
    )


def hamiltonian_in_chart(
    sys: TDSystem,
    chart: ActionAngleChart,
    region: SampleRegion,
    tol: float = 1e-5,
    step: float = 1e-3,
    progress: bool = False,
) -> VerifyReport:
    """
    Dependence of the Hamiltonian and the integrals on the angles.

    The effective Hamiltonian of the chart is a function of the actions by
    construction; the integrals (and H itself for autonomous systems) are
    pulled back through ``inverse`` and differentiated in each angle by
    central differences. Shifted charts additionally compare fitted angle
    rates along a trajectory with grad H(I).
    """
    fields = list(sys.integrals)
    if sys.autonomous:
        fields.append(sys.hamiltonian)
    points = region.sample(sys)
    residuals = []
    for x in tqdm(points, desc="hamiltonian_in_chart", disable=not progress, leave=False):
        try:
            cp = chart.forward(x)
            worst = 0.0
            for j in range(chart.m):
                up = list(cp.phi)
                down = list(cp.phi)
                up[j] += step
                down[j] -= step
                xu = chart.inverse(cp.t, cp.I, up)
                xd = chart.inverse(cp.t, cp.I, down)
                for f in fields:
                    worst = max(worst, abs(f.eval(xu) - f.eval(xd)) / (2 * step))
        except (ChartError, IntegrationError) as e:
            get_logger().debug(f"pull-back failed at {x.describe()}: {e}")
            worst = math.inf
        residuals.append(worst)

    details = {
        "kind": chart.kind,
        "effective_hamiltonian": "0" if chart.shift is None else chart.shift.source,
    }
    if chart.kind in (SHIFTED, WW26) and points:
        x0 = points[0]
        times = np.linspace(x0.t, x0.t + 2.0, 9)
        try:
            dyn = chart_dynamics(sys, chart, x0, times, chart.ctl)
            frequency_error = max(dyn.slope_error, dyn.action_drift)
        except (ChartError, IntegrationError):
            frequency_error = math.inf
        details["frequency_error"] = f"{frequency_error:.6e}"
        residuals[0] = max(residuals[0], frequency_error)
    return VerifyReport.from_residuals("hamiltonian_in_chart", residuals, points, tol, details)


def chart_csv_text(points: Sequence[ChartPoint]) -> str:
    """CSV ``t,I1..Im,phi1..phim`` with 17 significant digits."""
    if not points:
        return ""
    m = len(points[0].I)
    header = ["t"] + [f"I{k + 1}" for k in range(m)] + [f"phi{k + 1}" for k in range(m)]
    rows = [",".join(header)]
    for cp in points:
        rows.append(",".join(format_real(v) for v in (cp.t, *cp.I, *cp.phi)))
    return "\n".join(rows) + "\n"


def evaluate_chart(chart: ActionAngleChart, xs: Sequence[PhasePoint]) -> List[ChartPoint]:
    """Forward images of a sequence of points (e.g. trajectory samples)."""
    return [chart.forward(x) for x in xs]
