"""Pluggable quality metrics over ordered test sequences.

A metric scores an ordered sequence of test ids against contextual data
(known faults, requirement coverage, observed failures). Higher is
better; every metric is deterministic for fixed inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import AbstractSet, Callable, Mapping, Sequence

from .errors import ConfigurationError, UndefinedMetricError
from .regall import Verdict


@dataclass(frozen=True)
class MetricContext:
    """Data a metric may consult when scoring an order.

    ``faults`` maps a fault id to the tests able to detect it;
    ``coverage`` maps a requirement (story id) to the tests fulfilling it.
    """

    faults: Mapping[str, frozenset[str]] = field(default_factory=dict)
    coverage: Mapping[str, frozenset[str]] = field(default_factory=dict)

    @classmethod
    def from_verdicts(cls, verdicts: Sequence[Verdict]) -> "MetricContext":
        """Treat each inconsistent test as revealing one distinct fault."""
        return cls(
            faults={
                f"fail:{v.test_id}": frozenset({v.test_id})
                for v in verdicts
                if not v.consistent
            }
        )


def first_detection_positions(
    order: Sequence[str], faults: Mapping[str, AbstractSet[str]]
) -> dict[str, int]:
    """1-based position of each fault's first detecting test in the order.

    Faults detected by no test in the order get position ``len(order)+1``.
    """
    position = {test_id: i for i, test_id in enumerate(order, start=1)}
    sentinel = len(order) + 1
    return {
        fault_id: min((position[t] for t in detectors if t in position), default=sentinel)
        for fault_id, detectors in faults.items()
    }


def apfd(order: Sequence[str], faults: Mapping[str, AbstractSet[str]]) -> float:
    """Average Percentage of Faults Detected for an ordered sequence.

    APFD = 1 - (sum of first-detection positions) / (n * m) + 1 / (2n)
    with n the order length and m the fault count. Undetected faults
    contribute position n+1, so truncated schedules are penalized rather
    than rejected. Computed with exact rational arithmetic and rounded
    once, so reference values reproduce exactly.

    Undefined (raises) for an empty order with faults present, and when
    there are no faults at all.
    """
    n = len(order)
    m = len(faults)
    if m == 0:
        raise UndefinedMetricError("no faults to detect")
    if n == 0:
        raise UndefinedMetricError("empty order cannot be scored against faults")
    tf_sum = sum(first_detection_positions(order, faults).values())
    return float(1 - Fraction(tf_sum, n * m) + Fraction(1, 2 * n))


@dataclass(frozen=True)
class QualityMetric:
    """A named evaluation function over ordered test sequences."""

    name: str
    fn: Callable[[Sequence[str], MetricContext], float]

    def evaluate(self, order: Sequence[str], ctx: MetricContext) -> float:
        return self.fn(order, ctx)


def apfd_metric() -> QualityMetric:
    return QualityMetric("apfd", lambda order, ctx: apfd(order, ctx.faults))


def fault_count_metric() -> QualityMetric:
    """Number of known faults detected by at least one test in the order."""

    def value(order: Sequence[str], ctx: MetricContext) -> float:
        executed = set(order)
        return float(sum(1 for detectors in ctx.faults.values() if detectors & executed))

    return QualityMetric("fault-count", value)


def coverage_metric() -> QualityMetric:
    """Fraction of requirements fulfilled by some test in the order.

    Vacuously 1.0 when the context lists no requirements.
    """

    def value(order: Sequence[str], ctx: MetricContext) -> float:
        if not ctx.coverage:
            return 1.0
        executed = set(order)
        hit = sum(1 for tests in ctx.coverage.values() if tests & executed)
        return hit / len(ctx.coverage)

    return QualityMetric("coverage", value)


_METRICS: dict[str, Callable[[], QualityMetric]] = {
    "apfd": apfd_metric,
    "fault-count": fault_count_metric,
    "coverage": coverage_metric,
}


def metric_by_name(name: str) -> QualityMetric:
    try:
        return _METRICS[name]()
    except KeyError:
        raise ConfigurationError(
            f"unknown metric {name!r}; known: {sorted(_METRICS)}", field="metric"
        ) from None
