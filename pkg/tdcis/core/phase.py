"""
Phase-space points and tangent vectors.

``PhasePoint`` lives on the momentum phase space V*Q with coordinates
(t, q^k, p_k); ``ExtendedPoint`` lives on the homogeneous phase space T*Q and
adds the momentum p0 conjugate to time. Both are immutable: operations return
new points and never mutate their inputs.

Arrays are 0-based here; reports print degrees 1-based.
"""

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from tdcis.core.errors import DimensionError, NumericError


def _as_tuple(values: Iterable[float], name: str) -> Tuple[float, ...]:
    try:
        return tuple(float(v) for v in values)
    except TypeError as e:
        raise DimensionError(f"{name} must be a sequence of reals") from e


def _check_finite(values: Sequence[float], name: str) -> None:
    if not all(math.isfinite(v) for v in values):
        raise NumericError(f"{name} contains non-finite components: {tuple(values)}")


@dataclass(frozen=True)
class PhasePoint:
    """
    A point (t, q^1..q^m, p_1..p_m) of V*Q.

    Attributes:
        t: Time
        q: Positions
        p: Momenta, index-matched to q
    """

    t: float
    q: Tuple[float, ...]
    p: Tuple[float, ...]

    def __post_init__(self) -> None:
        q = _as_tuple(self.q, "q")
        p = _as_tuple(self.p, "p")
        if len(q) != len(p):
            raise DimensionError(f"q and p differ in length ({len(q)} != {len(p)})")
        if len(q) < 1:
            raise DimensionError("a phase point needs at least one degree of freedom")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        _check_finite((self.t, *q, *p), "PhasePoint")

    @property
    def m(self) -> int:
        """Number of degrees of freedom."""
        return len(self.q)

    @property
    def state(self) -> np.ndarray:
        """Canonical state vector [q..., p...] (time excluded)."""
        return np.array(self.q + self.p, dtype=float)

    @classmethod
    def from_state(cls, t: float, state: Sequence[float]) -> "PhasePoint":
        """Build a point from a time and a [q..., p...] vector."""
        m = len(state) // 2
        return cls(t, tuple(state[:m]), tuple(state[m : 2 * m]))

    def with_time(self, t: float) -> "PhasePoint":
        """Same (q, p) at another instant."""
        return PhasePoint(t, self.q, self.p)

    def distance(self, other: "PhasePoint") -> float:
        """Euclidean distance in (t, q, p)."""
        a = np.array((self.t, *self.q, *self.p))
        b = np.array((other.t, *other.q, *other.p))
        return float(np.linalg.norm(a - b))

    def describe(self) -> str:
        """Human-readable form with 1-based degree labels."""
        parts = [f"t={self.t:.17g}"]
        parts += [f"q{k + 1}={v:.17g}" for k, v in enumerate(self.q)]
        parts += [f"p{k + 1}={v:.17g}" for k, v in enumerate(self.p)]
        return ", ".join(parts)


@dataclass(frozen=True)
class ExtendedPoint:
    """
    A point (t, q, p0, p) of T*Q.

    Attributes:
        t: Time
        q: Positions
        p0: Momentum conjugate to time
        p: Momenta
    """

    t: float
    q: Tuple[float, ...]
    p0: float
    p: Tuple[float, ...]

    def __post_init__(self) -> None:
        q = _as_tuple(self.q, "q")
        p = _as_tuple(self.p, "p")
        if len(q) != len(p):
            raise DimensionError(f"q and p differ in length ({len(q)} != {len(p)})")
        if len(q) < 1:
            raise DimensionError("an extended point needs at least one degree of freedom")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "p0", float(self.p0))
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        _check_finite((self.t, *q, self.p0, *p), "ExtendedPoint")

    @property
    def m(self) -> int:
        """Number of degrees of freedom of the projected point."""
        return len(self.q)

    def project(self) -> PhasePoint:
        """The bundle projection zeta: T*Q -> V*Q (drops p0)."""
        return PhasePoint(self.t, self.q, self.p)


def zeta(x: ExtendedPoint) -> PhasePoint:
    """Projection of the affine bundle T*Q -> V*Q."""
    return x.project()


@dataclass(frozen=True)
class TangentVector:
    """
    Components of a vector field at a point.

    ``dp0`` is ``None`` for vectors on V*Q and a real for vectors on T*Q.
    """

    dt: float
    dq: Tuple[float, ...]
    dp: Tuple[float, ...]
    dp0: Optional[float] = field(default=None)

    def __post_init__(self) -> None:
        object.__setattr__(self, "dq", _as_tuple(self.dq, "dq"))
        object.__setattr__(self, "dp", _as_tuple(self.dp, "dp"))
        object.__setattr__(self, "dt", float(self.dt))
        if self.dp0 is not None:
            object.__setattr__(self, "dp0", float(self.dp0))

    @property
    def is_extended(self) -> bool:
        """Whether the vector lives on T*Q."""
        return self.dp0 is not None

    @property
    def state(self) -> np.ndarray:
        """Velocity of the canonical state vector [dq..., dp...]."""
        return np.array(self.dq + self.dp, dtype=float)

    def vertical(self) -> "TangentVector":
        """Drop the p0 component (push-forward along zeta)."""
        return TangentVector(self.dt, self.dq, self.dp)
