"""
TDCIS - time-dependent completely integrable systems.

Numerics for Hamiltonian systems that carry a time-dependent set of first
integrals in involution:

- tdcis.core: points, fields, brackets, flows, checks and action-angle charts
- tdcis.interface: command-line interface and rich report tables
- tdcis.logging: logging infrastructure
- tdcis.config: YAML run configuration

The most used names are re-exported here.
"""

from tdcis.core.actionangle import (
    ActionAngleChart,
    ActionFunction,
    build_initial_data_chart,
    check_canonicity,
    check_round_trip,
    shift_chart,
    transform_ww26,
)
from tdcis.core.brackets import (
    gamma_h,
    gamma_t,
    lift_hamiltonian,
    poisson_t,
    poisson_v,
    section_h_r,
)
from tdcis.core.errors import (
    ChartError,
    NonCompactError,
    PeriodNotFoundError,
    SamplingError,
    SeparatrixError,
    TDCISError,
)
from tdcis.core.fields import ScalarField, TDSystem
from tdcis.core.flow import StepControl, initial_data_projection, integrate, slice_flow
from tdcis.core.phase import ExtendedPoint, PhasePoint
from tdcis.core.systems import SystemSpec, default_region, make_system
from tdcis.core.verify import SampleRegion, VerifyReport, run_suite
from tdcis.interface.dashboard import RICH_AVAILABLE as _dashboard_available
from tdcis.interface.dashboard import ReportDashboard
from tdcis.version import __version__

__all__ = [
    "ActionAngleChart",
    "ActionFunction",
    "ChartError",
    "ExtendedPoint",
    "NonCompactError",
    "PeriodNotFoundError",
    "PhasePoint",
    "ReportDashboard",
    "SampleRegion",
    "SamplingError",
    "ScalarField",
    "SeparatrixError",
    "StepControl",
    "SystemSpec",
    "TDCISError",
    "TDSystem",
    "VerifyReport",
    "__version__",
    "build_initial_data_chart",
    "check_canonicity",
    "check_round_trip",
    "default_region",
    "gamma_h",
    "gamma_t",
    "initial_data_projection",
    "integrate",
    "lift_hamiltonian",
    "make_system",
    "poisson_t",
    "poisson_v",
    "run_suite",
    "section_h_r",
    "shift_chart",
    "slice_flow",
    "transform_ww26",
]
