"""Adaptive, history-driven test scheduling under a time budget.

Two cooperating steps run at every build transition:

* ``ttcp`` (time-limited test-case prioritization) produces a
  budget-feasible ordering of the candidate set. The exact engine walks
  permutations in a deterministic order, scoring each before the time
  check and stopping at the first feasible one; the greedy engine sorts
  by learned priority per unit cost and truncates to the budget.
* ``atcs`` (adaptive test-case selection) looks at sequences executed in
  earlier cycles and picks the feasible one with the best recorded
  outcome quality, so leftover time is spent where failures showed up
  before.

A lightweight weight-tableau agent ties the cycles together: failing
tests gain weight, long-passing tests decay, and executed sequences are
kept in a bounded FIFO replay buffer that feeds ``atcs``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import permutations
from typing import Mapping, Sequence

from .budget import Rtw, Schedule, feasible_prefix
from .errors import (
    BuildOrderError,
    EngineLimitError,
    IncompleteVerdictsError,
    UndefinedMetricError,
)
from .metrics import MetricContext, QualityMetric
from .model import Build, TestCase, ordered_candidates
from .regall import Verdict, run_tests


@dataclass(frozen=True)
class ExecutionRecord:
    """One historical run of a test: when, whether it passed, how long."""

    build_index: int
    passed: bool
    duration: int


class ExecutionHistory:
    """Per-test execution log with non-decreasing build indices."""

    def __init__(self) -> None:
        self._records: dict[str, list[ExecutionRecord]] = {}

    def add(self, test_id: str, build_index: int, passed: bool, duration: int) -> None:
        runs = self._records.setdefault(test_id, [])
        if runs and build_index < runs[-1].build_index:
            raise ValueError(
                f"build indices must be non-decreasing per test ({test_id!r}: "
                f"{runs[-1].build_index} then {build_index})"
            )
        runs.append(ExecutionRecord(build_index, passed, duration))

    def records(self, test_id: str) -> tuple[ExecutionRecord, ...]:
        return tuple(self._records.get(test_id, ()))

    def last_executed(self, test_id: str) -> int | None:
        runs = self._records.get(test_id)
        return runs[-1].build_index if runs else None

    def test_ids(self) -> frozenset[str]:
        return frozenset(self._records)


@dataclass(frozen=True)
class BufferEntry:
    """An executed sequence with its reward and observed failures."""

    order: tuple[str, ...]
    reward: float
    failed: frozenset[str]
    q_value: float | None


@dataclass(frozen=True)
class AgentState:
    """Learned per-test priority weights plus a bounded replay buffer.

    Update rule, applied to every executed test:

        weight <- weight * decay + (failure_reward if the test failed else 0)

    so weights live in ``[0, failure_reward / (1 - decay)]``. Tests never
    executed read as ``initial_weight``. The buffer keeps the last
    ``capacity`` executed (sequence, reward) entries, evicting strictly
    oldest-first.
    """

    weights: Mapping[str, float] = field(default_factory=dict)
    buffer: tuple[BufferEntry, ...] = ()
    capacity: int = 10
    decay: float = 0.95
    failure_reward: float = 1.0
    initial_weight: float = 1.0

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError("replay buffer capacity must be at least 1")
        if not 0.0 < self.decay < 1.0:
            raise ValueError("decay must lie strictly between 0 and 1")
        if len(self.buffer) > self.capacity:
            raise ValueError("replay buffer exceeds its capacity")

    @classmethod
    def fresh(cls, **overrides: object) -> "AgentState":
        return cls(**overrides)  # type: ignore[arg-type]

    def weight(self, test_id: str) -> float:
        return self.weights.get(test_id, self.initial_weight)


def _priority(test_id: str, priorities: Mapping[str, float] | None) -> float:
    if priorities is None:
        return 0.0
    return priorities.get(test_id, 0.0)


def ttcp(
    candidates: Sequence[TestCase],
    metric: QualityMetric,
    window: Rtw,
    engine: str = "greedy",
    *,
    priorities: Mapping[str, float] | None = None,
    ctx: MetricContext = MetricContext(),
) -> Schedule:
    """Produce a budget-feasible ordering of the candidate set.

    Both engines enumerate or sort in descending priority with ties by
    id. The exact engine (guard: 7 candidates) scores each ordering with
    the metric before checking feasibility and returns the first ordering
    that fits; when the whole set exceeds the budget it continues with
    shorter ordered subsets, largest cardinality first, so a feasible
    non-empty schedule is found whenever one exists. An unbounded window
    degenerates to the full priority ordering. A window too small for any
    single test yields an empty schedule flagged ``budget_starved``.
    """
    base = sorted(candidates, key=lambda t: (-_priority(t.id, priorities), t.id))
    durations = {t.id: t.duration for t in base}

    if window.is_unbounded:
        ids = tuple(t.id for t in base)
        return Schedule.from_ids(ids, durations, technique=f"ttcp-{engine}")

    budget = window.budget()
    assert budget is not None

    if engine == "exact":
        if len(base) > 7:
            raise EngineLimitError(
                f"{len(base)} candidates exceed the exact-ttcp guard of 7; use the greedy engine"
            )
        for size in range(len(base), -1, -1):
            for ordering in permutations(base, size):
                ids = tuple(t.id for t in ordering)
                try:
                    metric.evaluate(ids, ctx)  # scored before the time check
                except UndefinedMetricError:
                    pass
                total = sum(durations[i] for i in ids)
                if total <= budget:
                    meta: dict[str, object] = {"technique": "ttcp-exact"}
                    if not ids and base:
                        meta["budget_starved"] = True
                    return Schedule(ids, total, meta)
        raise AssertionError("unreachable: the empty ordering is always feasible")

    if engine != "greedy":
        raise EngineLimitError(f"unknown ttcp engine {engine!r}")

    by_value = sorted(
        base,
        key=lambda t: (-(_priority(t.id, priorities) / durations[t.id]), t.id),
    )
    ids, total = feasible_prefix([t.id for t in by_value], durations, window)
    meta = {"technique": "ttcp-greedy"}
    if not ids and base:
        meta["budget_starved"] = True
    return Schedule(ids, total, meta)


def _entry_context(entry: BufferEntry) -> MetricContext:
    return MetricContext(
        faults={f"fail:{t}": frozenset({t}) for t in sorted(entry.failed)}
    )


def atcs(
    history: Sequence[BufferEntry],
    metric: QualityMetric,
    window: Rtw,
    *,
    candidates: Sequence[TestCase],
    fallback: Schedule,
) -> Schedule:
    """Pick the historical sequence with the best recorded quality.

    Each past sequence is filtered to the current candidate set,
    truncated to the longest feasible prefix, and re-scored with the
    metric against that run's own recorded failures (so comparisons stay
    on one scale even after truncation). The best score wins; ties go to
    the most recent sequence. With no usable history the ``fallback``
    schedule (normally the ttcp output) is returned unchanged.
    """
    if not history:
        return fallback
    durations = {t.id: t.duration for t in candidates}
    best: tuple[float, int] | None = None
    best_ids: tuple[str, ...] = ()
    best_cost = 0
    for position, entry in enumerate(history):
        filtered = [t for t in entry.order if t in durations]
        ids, total = feasible_prefix(filtered, durations, window)
        if not ids:
            continue
        try:
            score = metric.evaluate(ids, _entry_context(entry))
        except UndefinedMetricError:
            score = 0.0
        key = (score, position)
        if best is None or key > best:
            best, best_ids, best_cost = key, ids, total
    if best is None:
        return fallback
    return Schedule(best_ids, best_cost, {"technique": "atcs", "score": best[0]})


def plan_schedule(
    candidates: Sequence[TestCase],
    window: Rtw,
    state: AgentState,
    metric: QualityMetric,
    engine: str = "greedy",
) -> Schedule:
    """One transition's schedule: ttcp first, then adaptive refinement.

    The ttcp ordering (driven by learned weights) forms the head of the
    schedule; whatever budget remains is filled with tests from the atcs
    pick that are not already scheduled, in the pick's order. Under an
    unbounded window the plan is simply the full candidate ordering, so
    the cycle degenerates to running everything.
    """
    priorities = {t.id: state.weight(t.id) for t in candidates}
    base = ttcp(candidates, metric, window, engine, priorities=priorities)
    if window.is_unbounded:
        return base
    pick = atcs(state.buffer, metric, window, candidates=candidates, fallback=base)
    if pick.ids == base.ids:
        return base
    durations = {t.id: t.duration for t in candidates}
    budget = window.budget()
    assert budget is not None
    merged = list(base.ids)
    seen = set(merged)
    total = base.total_cost
    for test_id in pick.ids:
        if test_id in seen:
            continue
        d = durations[test_id]
        if total + d <= budget:
            merged.append(test_id)
            seen.add(test_id)
            total += d
    meta = dict(base.meta)
    meta["technique"] = f"retecs-{engine}"
    return Schedule(tuple(merged), total, meta)


def agent_update(
    state: AgentState,
    executed: Schedule,
    verdicts: Mapping[str, bool],
    q_value: float | None = None,
) -> AgentState:
    """Fold one executed schedule's outcomes into the agent.

    ``verdicts`` maps each executed test id to pass (True) / fail
    (False); a missing entry is an error. The sequence reward is the
    fraction of executed tests that failed, and the (sequence, reward)
    pair enters the replay buffer, evicting the oldest entry at
    capacity. Only executed tests' weights move.
    """
    missing = [t for t in executed.ids if t not in verdicts]
    if missing:
        raise IncompleteVerdictsError(f"missing verdicts for executed tests: {missing}")
    failed = frozenset(t for t in executed.ids if not verdicts[t])
    reward = len(failed) / len(executed.ids) if executed.ids else 0.0
    weights = dict(state.weights)
    for test_id in executed.ids:
        w = weights.get(test_id, state.initial_weight)
        bump = state.failure_reward if test_id in failed else 0.0
        weights[test_id] = w * state.decay + bump
    entry = BufferEntry(order=executed.ids, reward=reward, failed=failed, q_value=q_value)
    buffer = (state.buffer + (entry,))[-state.capacity :]
    return replace(state, weights=weights, buffer=buffer)


@dataclass(frozen=True)
class CycleResult:
    """What one adaptive cycle produced: schedule, verdicts, next state."""

    schedule: Schedule
    verdicts: tuple[Verdict, ...]
    state: AgentState


def retecs_cycle(
    b_prev: Build,
    b_next: Build,
    state: AgentState,
    window: Rtw,
    metric: QualityMetric,
    engine: str = "greedy",
) -> CycleResult:
    """Plan, execute, and learn across one consecutive build transition.

    The realized quality value is computed post-hoc from the verdicts
    (each inconsistent outcome counts as one revealed fault) and stored
    with the buffer entry; it is None when the metric is undefined for
    the run (for instance, nothing failed).
    """
    if b_next.index != b_prev.index + 1:
        raise BuildOrderError(
            f"cycle requires consecutive builds, got {b_prev.index} -> {b_next.index}"
        )
    candidates = ordered_candidates(b_prev, b_next)
    schedule = plan_schedule(candidates, window, state, metric, engine)
    verdicts = run_tests(b_prev, b_next, schedule.ids)
    try:
        q = metric.evaluate(schedule.ids, MetricContext.from_verdicts(verdicts))
    except UndefinedMetricError:
        q = None
    new_state = agent_update(
        state, schedule, {v.test_id: v.consistent for v in verdicts}, q_value=q
    )
    return CycleResult(schedule=schedule, verdicts=verdicts, state=new_state)
