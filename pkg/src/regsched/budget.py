"""Regression-test windows and the budget-feasible scope function.

A window is the interval between a build becoming ready and the moment
regression testing must finish. Its budget prices how many candidate
tests can run. ``scope`` answers the question exactly: the maximum
number of candidates whose total cost fits the budget, together with
one witness subset. ``scope_bruteforce`` is an independent exhaustive
oracle kept deliberately naive for cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import InvalidCostError, OracleLimitError
from .model import TestCase


@dataclass(frozen=True)
class Rtw:
    """A regression-test window ``[start, end]`` in integer microunits.

    ``end`` may be ``None``, the distinguished unbounded case: no budget
    constraint at all, not a large sentinel number.
    """

    start: int
    end: int | None

    def __post_init__(self) -> None:
        if self.start < 0:
            raise ValueError("window start must be non-negative")
        if self.end is not None and self.end < self.start:
            raise ValueError("window end precedes its start")

    @classmethod
    def bounded(cls, start: int, end: int) -> "Rtw":
        return cls(start, end)

    @classmethod
    def unbounded(cls, start: int = 0) -> "Rtw":
        return cls(start, None)

    @classmethod
    def of_budget(cls, budget: int | None) -> "Rtw":
        """A window starting at 0 with the given budget (None = unbounded)."""
        return cls(0, budget)

    @property
    def is_unbounded(self) -> bool:
        return self.end is None

    def budget(self) -> int | None:
        """The available duration, or None when unbounded."""
        if self.end is None:
            return None
        return self.end - self.start


@dataclass(frozen=True)
class ScopeResult:
    """Maximum feasible cardinality plus one witness subset."""

    count: int
    witness: tuple[str, ...]
    total_cost: int


@dataclass(frozen=True)
class Schedule:
    """An ordered, duplicate-free list of test ids with its total cost.

    ``meta`` records the producing technique and its parameters; it never
    participates in scheduling decisions. Schedules produced under a
    bounded window always satisfy ``total_cost <= budget``.
    """

    ids: tuple[str, ...]
    total_cost: int
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("schedule contains duplicate test ids")

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def empty(cls, **meta: object) -> "Schedule":
        return cls((), 0, dict(meta))

    @classmethod
    def from_ids(
        cls, ids: Iterable[str], durations: Mapping[str, int], **meta: object
    ) -> "Schedule":
        ordered = tuple(ids)
        return cls(ordered, sum(durations[i] for i in ordered), dict(meta))


def feasible_prefix(
    ids: Sequence[str], durations: Mapping[str, int], window: Rtw
) -> tuple[tuple[str, ...], int]:
    """Longest prefix of ``ids`` whose cumulative duration fits the window."""
    budget = window.budget()
    if budget is None:
        return tuple(ids), sum(durations[i] for i in ids)
    running = 0
    kept: list[str] = []
    for test_id in ids:
        d = durations[test_id]
        if running + d > budget:
            break
        running += d
        kept.append(test_id)
    return tuple(kept), running


def cost(t: TestCase) -> int:
    """A test's cost: execution time plus setup time, strictly positive."""
    total = t.exectime + t.setup
    if total <= 0:
        raise InvalidCostError(f"test {t.id!r} has zero total duration")
    return total


def scope(candidates: Iterable[TestCase], window: Rtw) -> ScopeResult:
    """Largest number of candidates whose total cost fits the window.

    Exact by a per-cardinality minimal-cost argument: among all subsets
    of size k, the k cheapest tests minimize total cost (swapping any
    member for an unused cheaper test never raises the sum), so the
    cardinality -> minimal-cost table is the prefix-sum of the costs
    sorted ascending. The answer is the longest affordable prefix.

    The witness is deterministic: equal-cost tests are taken in id
    order. An unbounded window admits the whole candidate set.
    """
    priced = sorted((cost(t), t.id) for t in candidates)
    budget = window.budget()
    if budget is None:
        return ScopeResult(
            count=len(priced),
            witness=tuple(sorted(i for _, i in priced)),
            total_cost=sum(c for c, _ in priced),
        )
    running = 0
    chosen: list[str] = []
    for c, test_id in priced:
        if running + c > budget:
            break
        running += c
        chosen.append(test_id)
    return ScopeResult(count=len(chosen), witness=tuple(sorted(chosen)), total_cost=running)


def scope_bruteforce(candidates: Iterable[TestCase], window: Rtw, limit: int = 20) -> ScopeResult:
    """Exhaustive oracle for :func:`scope`: enumerate every subset.

    Guarded to ``limit`` candidates. Prefers higher cardinality, then
    lower total cost, then the earliest subset in bitmask order over
    id-sorted tests, so results are deterministic.
    """
    tests = sorted(candidates, key=lambda t: t.id)
    n = len(tests)
    if n > limit:
        raise OracleLimitError(f"{n} candidates exceed the enumeration guard of {limit}")
    costs = [cost(t) for t in tests]
    budget = window.budget()

    sums = [0] * (1 << n)
    counts = [0] * (1 << n)
    best_mask, best_count, best_sum = 0, 0, 0
    for mask in range(1, 1 << n):
        low = mask & -mask
        rest = mask ^ low
        i = low.bit_length() - 1
        sums[mask] = sums[rest] + costs[i]
        counts[mask] = counts[rest] + 1
        if budget is not None and sums[mask] > budget:
            continue
        if counts[mask] > best_count or (counts[mask] == best_count and sums[mask] < best_sum):
            best_mask, best_count, best_sum = mask, counts[mask], sums[mask]
    witness = tuple(tests[i].id for i in range(n) if best_mask >> i & 1)
    return ScopeResult(count=best_count, witness=witness, total_cost=best_sum)
