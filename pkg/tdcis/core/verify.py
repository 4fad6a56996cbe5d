"""
Sampling-based verification of time-dependent completely integrable systems.

Each check evaluates a residual at seeded sample points of a region and
returns a ``VerifyReport`` carrying the worst residual and the point where
it occurred. A failed property never raises; the report says FAIL.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from tdcis.core.brackets import (
    first_integral_residual,
    gamma_h,
    gamma_t,
    lie_derivative,
    lift_hamiltonian,
    lift_integrals,
    poisson_t,
    poisson_v,
    section_h_r,
)
from tdcis.core.errors import (
    DimensionError,
    ExpressionError,
    IntegrationError,
    NumericError,
    SamplingError,
)
from tdcis.core.fields import ScalarField, TDSystem
from tdcis.core.flow import StepControl, Trajectory, initial_data_projection, integrate
from tdcis.core.phase import PhasePoint
from tdcis.core.utils import format_real
from tdcis.logging.logger import get_logger

Range = Tuple[float, float]


def _as_range(value: Sequence[float], name: str, allow_point: bool = False) -> Range:
    try:
        lo, hi = (float(v) for v in value)
    except (TypeError, ValueError) as e:
        raise ValueError(f"{name} must be a pair of reals") from e
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError(f"{name} must be finite")
    if hi < lo or (hi == lo and not allow_point):
        raise ValueError(f"{name} is degenerate: [{lo}, {hi}]")
    return (lo, hi)


@dataclass(frozen=True)
class SampleRegion:
    """
    Axis-aligned box of V*Q sampled uniformly with a fixed seed.

    A one-point ``t_range`` samples a single instant. ``max_energy`` rejects
    points where the Hamiltonian is at or above the cap; ``min_radius``
    rejects points where some degree has hypot(q_k, p_k) below it.

    Attributes:
        t_range: Time interval
        q_box: Position interval per degree
        p_box: Momentum interval per degree
        count: Number of samples
        seed: Random seed
        max_energy: Optional energy cap
        min_radius: Per-degree exclusion radius around q_k = p_k = 0
    """

    t_range: Range
    q_box: Tuple[Range, ...]
    p_box: Tuple[Range, ...]
    count: int = 200
    seed: int = 42
    max_energy: Optional[float] = None
    min_radius: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "t_range", _as_range(self.t_range, "t_range", True))
        q_box = tuple(_as_range(r, f"q_box[{k}]") for k, r in enumerate(self.q_box))
        p_box = tuple(_as_range(r, f"p_box[{k}]") for k, r in enumerate(self.p_box))
        if len(q_box) != len(p_box) or not q_box:
            raise ValueError("q_box and p_box need the same, positive number of ranges")
        object.__setattr__(self, "q_box", q_box)
        object.__setattr__(self, "p_box", p_box)
        if self.count < 1:
            raise ValueError("count must be at least 1")
        if self.min_radius < 0:
            raise ValueError("min_radius must be non-negative")

    @property
    def m(self) -> int:
        """Degrees of freedom."""
        return len(self.q_box)

    def at_time(self, t: float) -> "SampleRegion":
        """Same box restricted to the instant t."""
        return replace(self, t_range=(t, t))

    def with_count(self, count: int) -> "SampleRegion":
        """Same region with another sample count."""
        return replace(self, count=count)

    def contains(self, x: PhasePoint) -> bool:
        """Whether x lies in the box (energy and radius filters ignored)."""
        lo, hi = self.t_range
        if not lo <= x.t <= hi or x.m != self.m:
            return False
        return all(a <= v <= b for v, (a, b) in zip(x.q, self.q_box)) and all(
            a <= v <= b for v, (a, b) in zip(x.p, self.p_box)
        )

    def sample(self, sys: Optional[TDSystem] = None, max_attempts: int = 1000) -> List[PhasePoint]:
        """
        Draw ``count`` accepted points.

        Args:
            sys: System for the energy filter (needed when ``max_energy`` is set)
            max_attempts: Rejection budget per requested point

        Raises:
            SamplingError: When the filters reject too many candidates
        """
        if self.max_energy is not None and sys is None:
            raise SamplingError("an energy-capped region needs the system to sample")
        if sys is not None and sys.m != self.m:
            raise DimensionError(f"region has m={self.m}, system has m={sys.m}")
        rng = np.random.default_rng(self.seed)
        points: List[PhasePoint] = []
        attempts = 0
        while len(points) < self.count:
            attempts += 1
            if attempts > max_attempts * self.count:
                raise SamplingError(
                    f"region filters rejected too many samples ({len(points)}/{self.count} accepted)"
                )
            t = float(rng.uniform(*self.t_range))
            q = [float(rng.uniform(a, b)) for a, b in self.q_box]
            p = [float(rng.uniform(a, b)) for a, b in self.p_box]
            if any(math.hypot(qk, pk) < self.min_radius for qk, pk in zip(q, p)):
                continue
            x = PhasePoint(t, q, p)
            if self.max_energy is not None and sys.hamiltonian.eval(x) >= self.max_energy:
                continue
            points.append(x)
        return points


@dataclass(frozen=True)
class VerifyReport:
    """
    Result of one check.

    ``passed`` holds iff ``max_residual <= tolerance``; for lower-bound
    reports (independence) ``max_residual`` is the smallest observed value
    and ``passed`` holds iff it is ``>= tolerance``.

    Attributes:
        check_name: Check identifier used in summaries
        max_residual: Worst residual over the samples
        worst_point: Sample where the worst residual occurred
        passed: Pass/fail verdict
        tolerance: Tolerance the verdict is based on
        details: Extra key/value facts for the text report
        lower_bound: Whether the residual is a lower bound to stay above
    """

    check_name: str
    max_residual: float
    worst_point: Optional[PhasePoint]
    passed: bool
    tolerance: float
    details: Dict[str, str] = field(default_factory=dict)
    lower_bound: bool = False

    @property
    def status(self) -> str:
        """``PASS`` or ``FAIL``."""
        return "PASS" if self.passed else "FAIL"

    @classmethod
    def from_residuals(
        cls,
        check_name: str,
        residuals: Sequence[float],
        points: Sequence[PhasePoint],
        tolerance: float,
        details: Optional[Dict[str, str]] = None,
        lower_bound: bool = False,
    ) -> "VerifyReport":
        """
        Reduce per-sample residuals; ties resolve to the lowest sample index.

        Non-finite residuals count as infinitely bad.
        """
        bad = -math.inf if lower_bound else math.inf
        values = [r if math.isfinite(r) else bad for r in residuals]
        if not values:
            return cls(check_name, 0.0, None, not lower_bound, tolerance, details or {}, lower_bound)
        pick = min if lower_bound else max
        worst = pick(values)
        index = values.index(worst)
        passed = worst >= tolerance if lower_bound else worst <= tolerance
        report = cls(
            check_name, worst, points[index], passed, tolerance, details or {}, lower_bound
        )
        get_logger().log_check(report)
        return report


def _progress(points: Iterable[PhasePoint], desc: str, enabled: bool) -> Iterable[PhasePoint]:
    return tqdm(points, desc=desc, disable=not enabled, leave=False)


def _guarded(fn: Callable[[PhasePoint], float], x: PhasePoint) -> float:
    try:
        return float(fn(x))
    except (NumericError, ExpressionError, ArithmeticError) as e:
        get_logger().debug(f"residual not computable at {x.describe()}: {e}")
        return math.inf


def _run(
    name: str,
    fn: Callable[[PhasePoint], float],
    points: Sequence[PhasePoint],
    tol: float,
    progress: bool,
    details: Optional[Dict[str, str]] = None,
) -> VerifyReport:
    residuals = [_guarded(fn, x) for x in _progress(points, name, progress)]
    return VerifyReport.from_residuals(name, residuals, points, tol, details)


def check_involution(
    sys: TDSystem, region: SampleRegion, tol: float, progress: bool = False
) -> VerifyReport:
    """Largest |{F_j, F_k}_V| over samples and pairs j < k."""
    integrals = sys.integrals

    def residual(x: PhasePoint) -> float:
        worst = 0.0
        for j in range(len(integrals)):
            for k in range(j + 1, len(integrals)):
                worst = max(worst, abs(poisson_v(integrals[j], integrals[k], x)))
        return worst

    return _run("involution", residual, region.sample(sys), tol, progress)


def check_first_integrals(
    sys: TDSystem, region: SampleRegion, tol: float, progress: bool = False
) -> VerifyReport:
    """Largest |dF_k/dt + {H, F_k}_V| over samples and integrals."""

    def residual(x: PhasePoint) -> float:
        return max(abs(first_integral_residual(sys, f, x)) for f in sys.integrals)

    return _run("first_integrals", residual, region.sample(sys), tol, progress)


def smallest_singular_value(sys: TDSystem, x: PhasePoint) -> float:
    """Smallest singular value of the m x (2m+1) Jacobian of (F_1..F_m) at x."""
    jacobian = np.array([f.grad(x).as_array() for f in sys.integrals])
    return float(np.linalg.svd(jacobian, compute_uv=False).min())


def check_independence(
    sys: TDSystem, region: SampleRegion, tol: float, progress: bool = False
) -> VerifyReport:
    """
    Smallest singular value of the integrals' Jacobian over the samples.

    A lower-bound report: passes when the minimum is at least ``tol``. Points
    below ten times ``tol`` count as near-critical.
    """
    points = region.sample(sys)
    values = []
    for x in _progress(points, "independence", progress):
        try:
            values.append(smallest_singular_value(sys, x))
        except NumericError:
            values.append(-math.inf)
    near = sum(1 for v in values if v < 10.0 * tol)
    details = {"near_critical_fraction": f"{near / len(points):.6g}"}
    return VerifyReport.from_residuals(
        "independence", values, points, tol, details, lower_bound=True
    )


def check_projection(
    sys: TDSystem, region: SampleRegion, tol: float, r: float = 0.0, progress: bool = False
) -> VerifyReport:
    """Largest componentwise gap between gamma_t at h_r(x), projected, and gamma_h at x."""

    def residual(x: PhasePoint) -> float:
        lifted = gamma_t(sys, section_h_r(sys, r, x))
        vertical = gamma_h(sys, x)
        gap = np.concatenate(
            (
                [lifted.dt - vertical.dt],
                np.subtract(lifted.dq, vertical.dq),
                np.subtract(lifted.dp, vertical.dp),
            )
        )
        return float(np.max(np.abs(gap)))

    details = {"r": f"{r:g}"}
    return _run("projection", residual, region.sample(sys), tol, progress, details)


def check_conservation(
    traj: Trajectory, f: ScalarField, tol: float, name: str = "conservation"
) -> VerifyReport:
    """
    Largest |F(x_i) - F(x_0)| along a trajectory.

    Fields that consume auxiliary states are evaluated with the trajectory's
    co-integrated values.
    """
    if len(traj) == 0:
        raise ValueError("trajectory is empty")
    use_aux = f.uses_aux and traj.aux is not None

    def value(i: int) -> float:
        return f.eval(traj.points[i], traj.aux_at(i) if use_aux else None)

    try:
        start = value(0)
    except NumericError:
        return VerifyReport.from_residuals(name, [math.inf], traj.points[:1], tol)
    residuals = []
    for i in range(len(traj)):
        try:
            residuals.append(abs(value(i) - start))
        except NumericError:
            residuals.append(math.inf)
    details = {"integral": f.name, "samples": str(len(traj)), "t_end": f"{traj.final.t:.17g}"}
    return VerifyReport.from_residuals(name, residuals, traj.points, tol, details)


def check_lifted_involution(
    sys: TDSystem, region: SampleRegion, tol: float, r: float = 0.0, progress: bool = False
) -> VerifyReport:
    """
    Involution of the lifted system on T*Q.

    Largest |{zeta*F_j, zeta*F_k}_T| and |{H*, zeta*F_k}_T| at h_r(x).
    """
    hstar = lift_hamiltonian(sys)
    lifted = lift_integrals(sys)

    def residual(x: PhasePoint) -> float:
        X = section_h_r(sys, r, x)
        worst = max(abs(poisson_t(hstar, f, X)) for f in lifted)
        for j in range(len(lifted)):
            for k in range(j + 1, len(lifted)):
                worst = max(worst, abs(poisson_t(lifted[j], lifted[k], X)))
        return worst

    details = {"r": f"{r:g}"}
    return _run("lifted_involution", residual, region.sample(sys), tol, progress, details)


def check_lift_identity(
    sys: TDSystem, region: SampleRegion, tol: float, progress: bool = False
) -> VerifyReport:
    """Largest |L_gamma_H F_k - {H*, zeta*F_k}_T| with the bracket taken on the section h."""
    hstar = lift_hamiltonian(sys)
    lifted = lift_integrals(sys)

    def residual(x: PhasePoint) -> float:
        X = section_h_r(sys, 0.0, x)
        return max(
            abs(lie_derivative(sys, f, x) - poisson_t(hstar, zf, X))
            for f, zf in zip(sys.integrals, lifted)
        )

    return _run("lift_identity", residual, region.sample(sys), tol, progress)


def check_initial_data_invariance(
    sys: TDSystem,
    region: SampleRegion,
    tol: float,
    ctl: StepControl,
    progress: bool = False,
) -> VerifyReport:
    """
    Time-independence of the integrals in initial-data coordinates.

    Largest |F_k(x) - F_k(xi(x))|, where xi flows x back to t = 0.
    """
    failures = 0

    def residual(x: PhasePoint) -> float:
        nonlocal failures
        try:
            y = initial_data_projection(sys, x, ctl)
        except IntegrationError:
            failures += 1
            return math.inf
        return max(abs(f.eval(x) - f.eval(y)) for f in sys.integrals)

    points = region.sample(sys)
    residuals = [_guarded(residual, x) for x in _progress(points, "initial_data", progress)]
    details = {"incomplete_flows": str(failures)}
    return VerifyReport.from_residuals(
        "initial_data_invariance", residuals, points, tol, details
    )


def run_suite(
    sys: TDSystem,
    region: SampleRegion,
    ctl: StepControl,
    tol: float = 1e-9,
    independence_tol: float = 1e-6,
    conservation_t: float = 2.0 * math.pi,
    conservation_tol: float = 1e-6,
    flow_tol: float = 1e-6,
    progress: bool = False,
) -> List[VerifyReport]:
    """
    Every check on V*Q and on the lift, in a fixed order.

    Conservation runs one trajectory per integral from the first sample of
    the region over ``conservation_t``.
    """
    reports = [
        check_involution(sys, region, tol, progress),
        check_first_integrals(sys, region, tol, progress),
        check_independence(sys, region, independence_tol, progress),
        check_projection(sys, region, tol, progress=progress),
    ]
    x0 = region.with_count(1).sample(sys)[0]
    try:
        traj = integrate(sys, x0, x0.t + conservation_t, ctl)
    except IntegrationError as e:
        get_logger().log_numeric_failure("conservation trajectory", str(e))
        reports.append(VerifyReport.from_residuals("conservation", [math.inf], [x0], conservation_tol))
    else:
        for k, f in enumerate(sys.integrals):
            name = "conservation" if sys.m == 1 else f"conservation[F{k + 1}]"
            reports.append(check_conservation(traj, f, conservation_tol, name))
    reports.append(check_lifted_involution(sys, region, tol, progress=progress))
    reports.append(check_lift_identity(sys, region, tol, progress))
    reports.append(check_initial_data_invariance(sys, region, flow_tol, ctl, progress))
    return reports


def summary_line(report: VerifyReport) -> str:
    """
    Machine-readable one-liner.

    Examples:
        CHECK involution PASS 0 1e-09
    """
    return (
        f"CHECK {report.check_name} {report.status} "
        f"{format_real(report.max_residual)} {report.tolerance:g}"
    )


def format_report(report: VerifyReport) -> str:
    """Key/value block of a single report."""
    lines = [
        f"check: {report.check_name}",
        f"status: {report.status}",
        f"max_residual: {format_real(report.max_residual)}",
        f"tolerance: {report.tolerance:g}",
    ]
    if report.lower_bound:
        lines.append("bound: lower")
    if report.worst_point is not None:
        lines.append(f"worst_point: {report.worst_point.describe()}")
    lines += [f"{key}: {value}" for key, value in report.details.items()]
    return "\n".join(lines)


def format_reports(reports: Sequence[VerifyReport]) -> str:
    """Text document with one block per report, blocks separated by blank lines."""
    return "\n\n".join(format_report(r) for r in reports) + "\n"


def all_passed(reports: Sequence[VerifyReport]) -> bool:
    """Whether every report passed."""
    return all(r.passed for r in reports)
