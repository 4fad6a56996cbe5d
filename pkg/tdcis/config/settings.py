"""
Run configuration.

A run is described by one YAML document, validated into frozen dataclasses
before any computation starts. Unknown keys are rejected with their dotted
path. Numbers may be given as YAML numbers, numeric strings (``1e-10``) or
constant expressions (``2*pi``).

Example::

    system:
      name: harmonic
      parameters: {omega: 1}
    region: {count: 200, seed: 42}
    step: {method: rk45, abs_tol: 1e-10, rel_tol: 1e-10}
    simulate: {x0: {t: 0, q: [1], p: [0]}, t_target: 2*pi}
    transform: {h_of_i: "I1"}
    output: {dir: results}
"""

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
import yaml

from tdcis.core.errors import ConfigError, ExpressionError
from tdcis.core.expression import evaluate_constant
from tdcis.core.flow import StepControl
from tdcis.core.phase import PhasePoint
from tdcis.core.systems import BUILDERS, SystemSpec, default_region
from tdcis.core.verify import SampleRegion

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SimulateOptions:
    """Initial condition and target time of ``simulate``."""

    x0: Optional[PhasePoint] = None
    t_target: float = TWO_PI


@dataclass(frozen=True)
class VerifyOptions:
    """Tolerances of ``verify``."""

    tolerance: float = 1e-9
    independence_tolerance: float = 1e-6
    conservation_t: float = TWO_PI
    conservation_tolerance: float = 1e-6
    flow_tolerance: float = 1e-6


@dataclass(frozen=True)
class ChartOptions:
    """Chart construction and checks of ``chart``."""

    tolerance: float = 1e-5
    samples: int = 20
    levels: Tuple[float, ...] = ()
    round_trip_tolerance: float = 1e-7
    separatrix_gap: float = 1e-3
    max_parameter: float = 100.0


@dataclass(frozen=True)
class TransformOptions:
    """Shifted chart of ``transform``."""

    h_of_i: str = "0"
    times: Tuple[float, ...] = tuple(np.linspace(0.0, 10.0, 41).tolist())
    tolerance: float = 1e-5


@dataclass(frozen=True)
class LoggingOptions:
    """Log level and file."""

    level: str = "INFO"
    path: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    """
    Validated run configuration.

    Attributes:
        system: System selection
        region: Sampling region
        step: Integrator step control
        simulate: ``simulate`` options
        verify: ``verify`` options
        chart: ``chart`` options
        transform: ``transform`` options
        output_dir: Directory for CSV and report files
        logging: Logging options
    """

    system: SystemSpec
    region: SampleRegion
    step: StepControl = field(default_factory=StepControl)
    simulate: SimulateOptions = field(default_factory=SimulateOptions)
    verify: VerifyOptions = field(default_factory=VerifyOptions)
    chart: ChartOptions = field(default_factory=ChartOptions)
    transform: TransformOptions = field(default_factory=TransformOptions)
    output_dir: str = "tdcis-output"
    logging: LoggingOptions = field(default_factory=LoggingOptions)

    def with_overrides(
        self,
        seed: Optional[int] = None,
        out: Optional[str] = None,
        log_level: Optional[str] = None,
    ) -> "RunConfig":
        """Apply command-line flags; flags win over the file."""
        cfg = self
        if seed is not None:
            cfg = replace(cfg, region=replace(cfg.region, seed=seed))
        if out is not None:
            cfg = replace(cfg, output_dir=out)
        if log_level is not None:
            cfg = replace(cfg, logging=replace(cfg.logging, level=log_level.upper()))
        return cfg

    def initial_point(self) -> PhasePoint:
        """Initial condition of ``simulate`` (q = 1, p = 0 at t = 0 by default)."""
        if self.simulate.x0 is not None:
            return self.simulate.x0
        m = self.region.m
        return PhasePoint(0.0, (1.0,) * m, (0.0,) * m)


LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
SECTIONS = ("system", "region", "step", "simulate", "verify", "chart", "transform", "output", "logging")


def _mapping(value: Any, path: str) -> Mapping[str, Any]:
    if value is None:
        return {}
    if not isinstance(value, Mapping):
        raise ConfigError(f"'{path}' must be a mapping")
    return value


def _check_keys(section: Mapping[str, Any], allowed: Sequence[str], path: str) -> None:
    for key in section:
        if key not in allowed:
            dotted = f"{path}.{key}" if path else str(key)
            raise ConfigError(f"Unknown configuration key '{dotted}'")


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"'{path}' must be a number, got {value!r}")
    if isinstance(value, (int, float)):
        result = float(value)
    elif isinstance(value, str):
        try:
            result = evaluate_constant(value)
        except ExpressionError as e:
            raise ConfigError(f"'{path}': {e}") from e
    else:
        raise ConfigError(f"'{path}' must be a number, got {value!r}")
    if not math.isfinite(result):
        raise ConfigError(f"'{path}' must be finite")
    return result


def _integer(value: Any, path: str) -> int:
    number = _number(value, path)
    if number != int(number):
        raise ConfigError(f"'{path}' must be an integer, got {value!r}")
    return int(number)


def _numbers(value: Any, path: str) -> Tuple[float, ...]:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"'{path}' must be a list")
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(value))


def _ranges(value: Any, path: str) -> Tuple[Tuple[float, float], ...]:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"'{path}' must be a list of [low, high] pairs")
    pairs = []
    for i, pair in enumerate(value):
        numbers = _numbers(pair, f"{path}[{i}]")
        if len(numbers) != 2:
            raise ConfigError(f"'{path}[{i}]' must be a [low, high] pair")
        pairs.append((numbers[0], numbers[1]))
    return tuple(pairs)


def _system(section: Mapping[str, Any]) -> SystemSpec:
    _check_keys(
        section,
        ("name", "parameters", "m", "hamiltonian", "integrals", "compact", "separable",
         "label", "omega_sq"),
        "system",
    )
    name = section.get("name")
    if not isinstance(name, str):
        raise ConfigError("'system.name' is required")
    if name not in BUILDERS:
        raise ConfigError(
            f"Unknown system '{name}' at 'system.name'. Available: {', '.join(sorted(BUILDERS))}"
        )
    params = _mapping(section.get("parameters"), "system.parameters")
    parameters = {str(k): _number(v, f"system.parameters.{k}") for k, v in params.items()}
    m = _integer(section["m"], "system.m") if "m" in section else None
    expressions: Dict[str, Any] = {}
    for key in ("hamiltonian", "integrals", "compact", "separable", "label", "omega_sq"):
        if key in section:
            expressions[key] = section[key]
    return SystemSpec(name, parameters, m, expressions)


def _region(section: Mapping[str, Any], spec: SystemSpec) -> SampleRegion:
    allowed = ("t_range", "q_box", "p_box", "count", "seed", "max_energy", "min_radius")
    _check_keys(section, allowed, "region")
    updates: Dict[str, Any] = {}
    if "t_range" in section:
        numbers = _numbers(section["t_range"], "region.t_range")
        if len(numbers) != 2:
            raise ConfigError("'region.t_range' must be a [low, high] pair")
        updates["t_range"] = numbers
    for key in ("q_box", "p_box"):
        if key in section:
            updates[key] = _ranges(section[key], f"region.{key}")
    for key in ("count", "seed"):
        if key in section:
            updates[key] = _integer(section[key], f"region.{key}")
    if "max_energy" in section:
        value = section["max_energy"]
        updates["max_energy"] = None if value is None else _number(value, "region.max_energy")
    if "min_radius" in section:
        updates["min_radius"] = _number(section["min_radius"], "region.min_radius")
    try:
        return replace(default_region(spec), **updates)
    except ValueError as e:
        raise ConfigError(f"Invalid region: {e}") from e


def _step(section: Mapping[str, Any]) -> StepControl:
    _check_keys(section, ("method", "step", "abs_tol", "rel_tol", "max_steps"), "step")
    kwargs: Dict[str, Any] = {}
    if "method" in section:
        kwargs["method"] = str(section["method"])
    for key in ("step", "abs_tol", "rel_tol"):
        if key in section:
            kwargs[key] = _number(section[key], f"step.{key}")
    if "max_steps" in section:
        kwargs["max_steps"] = _integer(section["max_steps"], "step.max_steps")
    try:
        return StepControl(**kwargs)
    except ValueError as e:
        raise ConfigError(f"Invalid step control: {e}") from e


def _simulate(section: Mapping[str, Any], m: int) -> SimulateOptions:
    _check_keys(section, ("x0", "t_target"), "simulate")
    x0 = None
    if "x0" in section:
        point = _mapping(section["x0"], "simulate.x0")
        _check_keys(point, ("t", "q", "p"), "simulate.x0")
        q = _numbers(point.get("q", [1.0] * m), "simulate.x0.q")
        p = _numbers(point.get("p", [0.0] * m), "simulate.x0.p")
        if len(q) != m or len(p) != m:
            raise ConfigError(f"'simulate.x0' needs {m} positions and {m} momenta")
        x0 = PhasePoint(_number(point.get("t", 0.0), "simulate.x0.t"), q, p)
    t_target = _number(section.get("t_target", TWO_PI), "simulate.t_target")
    return SimulateOptions(x0, t_target)


def _floats(section: Mapping[str, Any], cls: type, path: str, integers: Sequence[str] = ()) -> Any:
    kwargs: Dict[str, Any] = {}
    for key, value in section.items():
        kwargs[key] = (
            _integer(value, f"{path}.{key}") if key in integers else _number(value, f"{path}.{key}")
        )
    return cls(**kwargs)


def _verify(section: Mapping[str, Any]) -> VerifyOptions:
    _check_keys(section, tuple(VerifyOptions.__dataclass_fields__), "verify")
    return _floats(section, VerifyOptions, "verify")


def _chart(section: Mapping[str, Any]) -> ChartOptions:
    _check_keys(section, tuple(ChartOptions.__dataclass_fields__), "chart")
    levels = _numbers(section.get("levels", []), "chart.levels")
    rest = {k: v for k, v in section.items() if k != "levels"}
    options = _floats(rest, ChartOptions, "chart", integers=("samples",))
    if options.samples < 1:
        raise ConfigError("'chart.samples' must be at least 1")
    return replace(options, levels=levels)


def _transform(section: Mapping[str, Any]) -> TransformOptions:
    _check_keys(section, ("h_of_i", "times", "tolerance"), "transform")
    options = TransformOptions()
    if "h_of_i" in section:
        options = replace(options, h_of_i=str(section["h_of_i"]))
    if "tolerance" in section:
        options = replace(options, tolerance=_number(section["tolerance"], "transform.tolerance"))
    if "times" in section:
        times = section["times"]
        if isinstance(times, Mapping):
            _check_keys(times, ("start", "stop", "count"), "transform.times")
            start = _number(times.get("start", 0.0), "transform.times.start")
            stop = _number(times.get("stop", 10.0), "transform.times.stop")
            count = _integer(times.get("count", 41), "transform.times.count")
            values = tuple(np.linspace(start, stop, count).tolist())
        else:
            values = _numbers(times, "transform.times")
        if len(values) < 2:
            raise ConfigError("'transform.times' needs at least two times")
        options = replace(options, times=values)
    return options


def _logging(section: Mapping[str, Any]) -> LoggingOptions:
    _check_keys(section, ("level", "path"), "logging")
    level = str(section.get("level", "INFO")).upper()
    if level not in LOG_LEVELS:
        raise ConfigError(f"'logging.level' must be one of {', '.join(LOG_LEVELS)}")
    path = section.get("path")
    return LoggingOptions(level, None if path is None else str(path))


def parse_config(data: Optional[Mapping[str, Any]]) -> RunConfig:
    """
    Validate a configuration mapping.

    Raises:
        ConfigError: Unknown keys, wrong types or invalid values
    """
    data = _mapping(data, "<root>")
    _check_keys(data, SECTIONS, "")
    spec = _system(_mapping(data.get("system"), "system"))
    region = _region(_mapping(data.get("region"), "region"), spec)
    output = _mapping(data.get("output"), "output")
    _check_keys(output, ("dir",), "output")
    return RunConfig(
        system=spec,
        region=region,
        step=_step(_mapping(data.get("step"), "step")),
        simulate=_simulate(_mapping(data.get("simulate"), "simulate"), region.m),
        verify=_verify(_mapping(data.get("verify"), "verify")),
        chart=_chart(_mapping(data.get("chart"), "chart")),
        transform=_transform(_mapping(data.get("transform"), "transform")),
        output_dir=str(output.get("dir", "tdcis-output")),
        logging=_logging(_mapping(data.get("logging"), "logging")),
    )


def load_config(path: str) -> RunConfig:
    """
    Read and validate a YAML configuration file.

    Raises:
        ConfigError: Missing file, YAML syntax error or invalid content
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read configuration '{path}': {e}") from e
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"Invalid YAML in '{path}': {e}") from e
    return parse_config(data)
