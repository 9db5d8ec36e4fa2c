"""Built-in scheduling strategies usable with the trace recorder.

Four strategies ship with the library:

* ``retest-all``   - the whole candidate set in id order, clipped to the
                     window when one is bounded,
* ``random-k``     - a seeded random sample of k candidates,
* ``retecs``       - the adaptive weight-tableau scheduler,
* ``depgraph``     - change-impact selection ordered by failure history.

All are deterministic given their construction parameters, so recording
the same strategy twice over the same chain yields identical traces.
"""

from __future__ import annotations

import random
from typing import Mapping

from .budget import Rtw, Schedule, feasible_prefix
from .depgraph import DepGraph, affected_tests, order_by_history
from .errors import ConfigurationError
from .metrics import QualityMetric
from .model import Build, TestCase
from .regall import Verdict
from .retecs import AgentState, ExecutionHistory, agent_update, plan_schedule


class RetestAllStrategy:
    """Run every candidate, in id order.

    The identity under an unbounded window; under a bounded one the order
    is clipped to the longest feasible prefix (an unclipped run would
    break the per-build time contract).
    """

    name = "retest-all"

    def plan(
        self, b_prev: Build, b_next: Build, candidates: tuple[TestCase, ...], window: Rtw
    ) -> Schedule:
        durations = {t.id: t.duration for t in candidates}
        ids, total = feasible_prefix([t.id for t in candidates], durations, window)
        clipped = len(ids) < len(candidates) and not window.is_unbounded
        return Schedule(ids, total, {"technique": self.name, "clipped": clipped})

    def observe(self, build_index, executed, verdicts, q_value) -> None:
        pass


class RandomKStrategy:
    """A seeded sample of k candidates per transition, clipped to budget."""

    name = "random-k"

    def __init__(self, k: int, seed: int = 0):
        if k < 0:
            raise ConfigurationError("k must be non-negative", field="k")
        self.k = k
        self._rng = random.Random(seed)

    def plan(
        self, b_prev: Build, b_next: Build, candidates: tuple[TestCase, ...], window: Rtw
    ) -> Schedule:
        durations = {t.id: t.duration for t in candidates}
        take = min(self.k, len(candidates))
        sampled = self._rng.sample(sorted(durations), take)
        ids, total = feasible_prefix(sampled, durations, window)
        return Schedule(ids, total, {"technique": self.name, "k": self.k})

    def observe(self, build_index, executed, verdicts, q_value) -> None:
        pass


class RetecsStrategy:
    """Adaptive weight-tableau scheduling with experience replay."""

    name = "retecs"

    def __init__(
        self,
        metric: QualityMetric,
        engine: str = "greedy",
        state: AgentState | None = None,
    ):
        self.metric = metric
        self.engine = engine
        self.state = state if state is not None else AgentState.fresh()

    def plan(
        self, b_prev: Build, b_next: Build, candidates: tuple[TestCase, ...], window: Rtw
    ) -> Schedule:
        return plan_schedule(candidates, window, self.state, self.metric, self.engine)

    def observe(
        self,
        build_index: int,
        executed: Schedule,
        verdicts: tuple[Verdict, ...],
        q_value: float | None,
    ) -> None:
        self.state = agent_update(
            self.state,
            executed,
            {v.test_id: v.consistent for v in verdicts},
            q_value=q_value,
        )


def infer_changed_classes(
    b_prev: Build, b_next: Build, graph: DepGraph
) -> frozenset[str]:
    """Classes touched by the transition, inferred from observable deltas.

    A class counts as changed when it is linked from a test that was
    added in the next build, or from a shared test whose outcome differs
    between the two programs. This stands in for commit metadata, which
    the simulated histories do not carry.
    """
    prev_ids = b_prev.test_ids()
    changed_tests = set(b_next.test_ids()) - prev_ids
    for test_id in sorted(prev_ids & b_next.test_ids()):
        if b_prev.program.behavior.get(test_id) != b_next.program.behavior.get(test_id):
            changed_tests.add(test_id)
    return frozenset(dst for src, dst in graph.test_links if src in changed_tests)


class DepGraphStrategy:
    """Change-impact selection plus failure-history prioritization.

    Holds a static class-level graph and accumulates its own execution
    history across cycles; the history orders the impacted tests.
    """

    name = "depgraph"

    def __init__(self, graph: DepGraph, recent: int = 5):
        self.graph = graph
        self.recent = recent
        self.history = ExecutionHistory()
        self._durations: dict[str, int] = {}

    def plan(
        self, b_prev: Build, b_next: Build, candidates: tuple[TestCase, ...], window: Rtw
    ) -> Schedule:
        durations = {t.id: t.duration for t in candidates}
        self._durations = durations
        changed = infer_changed_classes(b_prev, b_next, self.graph)
        selected = affected_tests(self.graph, changed, frozenset(durations))
        schedule = order_by_history(
            selected, self.history, window, durations, recent=self.recent
        )
        return Schedule(schedule.ids, schedule.total_cost, {"technique": self.name})

    def observe(
        self,
        build_index: int,
        executed: Schedule,
        verdicts: tuple[Verdict, ...],
        q_value: float | None,
    ) -> None:
        for v in verdicts:
            self.history.add(
                v.test_id, build_index, v.consistent, self._durations.get(v.test_id, 0)
            )


def make_strategy(
    name: str,
    params: Mapping[str, object] | None = None,
    *,
    graph: DepGraph | None = None,
    metric: QualityMetric | None = None,
    seed: int = 0,
):
    """Instantiate a built-in strategy by name.

    ``random-k`` takes ``k`` and optionally ``seed``; ``retecs`` takes
    ``engine``, ``capacity``, ``decay``, and ``failure_reward`` and needs
    a metric; ``depgraph`` takes ``recent`` and needs a graph.
    """
    params = dict(params or {})
    if name == "retest-all":
        return RetestAllStrategy()
    if name == "random-k":
        if "k" not in params:
            raise ConfigurationError("random-k needs a sample size", field="k")
        return RandomKStrategy(k=int(params["k"]), seed=int(params.get("seed", seed)))
    if name == "retecs":
        if metric is None:
            raise ConfigurationError("retecs needs a quality metric", field="metric")
        state = AgentState.fresh(
            capacity=int(params.get("capacity", 10)),
            decay=float(params.get("decay", 0.95)),
            failure_reward=float(params.get("failure_reward", 1.0)),
        )
        return RetecsStrategy(metric, engine=str(params.get("engine", "greedy")), state=state)
    if name == "depgraph":
        if graph is None:
            raise ConfigurationError("depgraph needs a dependency graph", field="graph")
        return DepGraphStrategy(graph, recent=int(params.get("recent", 5)))
    raise ConfigurationError(f"unknown strategy {name!r}", field="strategy")
