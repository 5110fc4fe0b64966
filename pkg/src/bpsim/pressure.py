"""Pressure functions mapping (queue length, capacity) to a congestion scalar.

Three families are supported:

* ``linear``      P(q, c) = q            (capacity ignored)
* ``relative``    P(q, c) = q / c
* ``normalized``  a convex function of q that starts with slope 1/c_infinity
                  regardless of c, saturates at exactly 1 for q >= c, and
                  reduces to q/c_infinity when c == c_infinity.

The normalized family is the capacity-aware one: every full node exerts the
same maximal pressure 1 no matter how small its capacity, while at low
occupancy an additional vehicle raises the pressure by the same amount
(1/c_infinity) on every node.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import ConfigurationError

LINEAR = "linear"
RELATIVE = "relative"
NORMALIZED = "normalized"
KINDS = (LINEAR, RELATIVE, NORMALIZED)


@dataclass(frozen=True)
class PressureParams:
    """Shape parameters of the normalized family.

    ``m`` controls where the curve leaves its initial linear regime
    (larger m: later, sharper knee); ``c_infinity`` sets the common
    low-occupancy slope 1/c_infinity and must dominate every node
    capacity the function will be evaluated against.
    """

    m: float
    c_infinity: float

    def __post_init__(self):
        if not self.m > 1.0:
            raise ConfigurationError(f"pressure exponent m must be > 1, got {self.m}")
        if not self.c_infinity >= 1.0:
            raise ConfigurationError(
                f"reference capacity c_infinity must be >= 1, got {self.c_infinity}"
            )


@dataclass(frozen=True)
class PressureFunction:
    """A named pressure family, evaluable at (queue length, capacity)."""

    kind: str
    params: Optional[PressureParams] = field(default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown pressure kind {self.kind!r}")
        if self.kind == NORMALIZED and self.params is None:
            raise ConfigurationError("normalized pressure requires params (m, c_infinity)")

    @classmethod
    def linear(cls) -> "PressureFunction":
        return cls(LINEAR)

    @classmethod
    def relative(cls) -> "PressureFunction":
        return cls(RELATIVE)

    @classmethod
    def normalized(cls, m: float, c_infinity: float) -> "PressureFunction":
        return cls(NORMALIZED, PressureParams(m=m, c_infinity=c_infinity))

    def evaluate(self, q: float, c: float) -> float:
        """Pressure exerted by a node holding q vehicles with capacity c.

        q may exceed c (arrivals are never blocked); the normalized kind
        clamps to 1 there.  Raises ConfigurationError if c > c_infinity for
        the normalized kind.
        """
        if q < 0:
            raise ConfigurationError(f"queue length must be >= 0, got {q}")
        if c < 1:
            raise ConfigurationError(f"capacity must be >= 1, got {c}")
        if self.kind == LINEAR:
            return float(q)
        if self.kind == RELATIVE:
            return q / c
        params = self.params
        if c > params.c_infinity:
            raise ConfigurationError(
                f"capacity {c} exceeds reference capacity {params.c_infinity}"
            )
        # For q >= c the un-clamped ratio is algebraically >= 1, so return
        # the saturated value directly; this keeps P(c) == 1.0 exact.
        if q >= c:
            return 1.0
        x = q / c
        numerator = q / params.c_infinity + (2.0 - c / params.c_infinity) * x**params.m
        denominator = 1.0 + x ** (params.m - 1.0)
        return min(1.0, numerator / denominator)

    def __call__(self, q: float, c: float) -> float:
        return self.evaluate(q, c)


def evaluate(function: PressureFunction, q: float, c: float) -> float:
    """Module-level alias for PressureFunction.evaluate."""
    return function.evaluate(q, c)


@dataclass(frozen=True)
class FairnessReport:
    """Marginal pressure of an empty node, per capacity.

    ``fair`` means the slopes agree with each other (and with the family's
    expected constant, when it has one) within ``tolerance`` relative.
    """

    slopes: dict
    expected_slope: Optional[float]
    tolerance: float
    fair: bool


def check_fairness(
    function: PressureFunction,
    capacities: Sequence[float],
    step: Optional[float] = None,
    tolerance: float = 1e-4,
) -> FairnessReport:
    """Estimate dP/dq at q=0 for each capacity by forward finite difference.

    The default step is 1e-6 * c_infinity for the normalized kind and
    1e-6 * max(capacities) otherwise.  The linear family is fair with slope
    1, the normalized family with slope 1/c_infinity; the relative family
    has slope 1/c and is reported unfair whenever capacities differ.
    """
    if not capacities:
        raise ConfigurationError("check_fairness needs at least one capacity")
    if step is None:
        if function.kind == NORMALIZED:
            step = 1e-6 * function.params.c_infinity
        else:
            step = 1e-6 * max(capacities)
    slopes = {c: (function.evaluate(step, c) - function.evaluate(0.0, c)) / step for c in capacities}
    if function.kind == LINEAR:
        expected = 1.0
    elif function.kind == NORMALIZED:
        expected = 1.0 / function.params.c_infinity
    else:
        expected = None
    values = list(slopes.values())
    reference = expected if expected is not None else values[0]
    fair = all(abs(s - reference) <= tolerance * abs(reference) for s in values)
    return FairnessReport(slopes=slopes, expected_slope=expected, tolerance=tolerance, fair=fair)


@dataclass(frozen=True)
class ConvexityReport:
    convex: bool
    worst_second_difference: float
    samples: int


def check_convexity(
    function: PressureFunction,
    c: float,
    grid: int = 1000,
    tolerance: float = 1e-9,
) -> ConvexityReport:
    """Sample P on [0, c] and test discrete convexity.

    Returns the most negative second difference found; the function counts
    as convex when no second difference is below -tolerance.
    """
    if grid < 3:
        raise ConfigurationError("convexity check needs at least 3 samples")
    h = c / (grid - 1)
    values = [function.evaluate(i * h, c) for i in range(grid)]
    worst = min(
        values[i + 1] - 2.0 * values[i] + values[i - 1] for i in range(1, grid - 1)
    )
    return ConvexityReport(convex=worst >= -tolerance, worst_second_difference=worst, samples=grid)
