"""Class-level dependency graphs for change-impact test selection.

Graphs are plain data: edges arrive as explicit lists (from a simulator
run or a history file), never from parsing source code. A test depends
on the classes it touches; classes depend on classes they reference. A
changed class impacts every test that can reach it along those edges,
and the impacted candidates are then ordered by recent failure history
and clipped to the window.

Graph values are immutable; updates build new graphs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import AbstractSet, Callable, Iterable, Mapping

from .budget import Rtw, Schedule, feasible_prefix
from .errors import MalformedGraphError, UnknownNodeError
from .retecs import ExecutionHistory

Edge = tuple[str, str]


@dataclass(frozen=True)
class DepGraph:
    """Directed dependencies: test -> class touched, class -> class referenced."""

    classes: frozenset[str]
    tests: frozenset[str]
    class_deps: frozenset[Edge]
    test_links: frozenset[Edge]

    @property
    def nodes(self) -> frozenset[str]:
        return self.classes | self.tests


def build_graph(
    classes: Iterable[str],
    tests: Iterable[str],
    class_deps: Iterable[Edge],
    test_links: Iterable[Edge],
) -> DepGraph:
    """Assemble and validate a dependency graph from explicit edge lists.

    Duplicate edges collapse to one. Edges must connect declared nodes of
    the right kind, and self-loops are rejected.
    """
    class_set = frozenset(classes)
    test_set = frozenset(tests)
    if any(not c for c in class_set) or any(not t for t in test_set):
        raise MalformedGraphError("node identifiers must be non-empty")
    if class_set & test_set:
        raise MalformedGraphError(
            f"identifiers used as both class and test: {sorted(class_set & test_set)}"
        )
    deps = frozenset(class_deps)
    links = frozenset(test_links)
    for src, dst in deps:
        if src == dst:
            raise MalformedGraphError(f"self-loop on class {src!r}")
        if src not in class_set or dst not in class_set:
            raise MalformedGraphError(f"dangling class dependency {src!r} -> {dst!r}")
    for src, dst in links:
        if src not in test_set:
            raise MalformedGraphError(f"test link from undeclared test {src!r}")
        if dst not in class_set:
            raise MalformedGraphError(f"test link to undeclared class {dst!r}")
    return DepGraph(classes=class_set, tests=test_set, class_deps=deps, test_links=links)


@dataclass(frozen=True)
class ChangeSet:
    """Node and edge changes between two builds, plus the changed classes."""

    changed_classes: frozenset[str] = frozenset()
    added_classes: frozenset[str] = frozenset()
    added_tests: frozenset[str] = frozenset()
    added_class_deps: frozenset[Edge] = frozenset()
    added_test_links: frozenset[Edge] = frozenset()
    removed_classes: frozenset[str] = frozenset()
    removed_tests: frozenset[str] = frozenset()
    removed_class_deps: frozenset[Edge] = frozenset()
    removed_test_links: frozenset[Edge] = frozenset()

    @classmethod
    def empty(cls) -> "ChangeSet":
        return cls()


def update_graph(g: DepGraph, changes: ChangeSet) -> DepGraph:
    """Apply a change set, returning the updated graph.

    Additions happen before removals; removing a node drops its incident
    edges. Removing a node that does not exist is an error, as is a
    change set whose changed classes are absent from the updated graph.
    An empty change set returns an equal graph.
    """
    classes = set(g.classes) | set(changes.added_classes)
    tests = set(g.tests) | set(changes.added_tests)
    deps = set(g.class_deps) | set(changes.added_class_deps)
    links = set(g.test_links) | set(changes.added_test_links)

    for node in sorted(changes.removed_classes):
        if node not in classes:
            raise UnknownNodeError(f"cannot remove unknown class {node!r}")
        classes.discard(node)
        deps = {(s, d) for s, d in deps if s != node and d != node}
        links = {(s, d) for s, d in links if d != node}
    for node in sorted(changes.removed_tests):
        if node not in tests:
            raise UnknownNodeError(f"cannot remove unknown test {node!r}")
        tests.discard(node)
        links = {(s, d) for s, d in links if s != node}
    deps -= set(changes.removed_class_deps)
    links -= set(changes.removed_test_links)

    updated = build_graph(classes, tests, deps, links)
    unknown = changes.changed_classes - updated.classes
    if unknown:
        raise UnknownNodeError(f"changed classes not in graph: {sorted(unknown)}")
    return updated


def affected_tests(
    g: DepGraph, changed_classes: AbstractSet[str], candidates: AbstractSet[str]
) -> frozenset[str]:
    """Candidate tests from which some changed class is reachable.

    Implemented as a reverse reachability sweep from the changed classes
    over inverted edges; candidates absent from the graph have no edges
    and are never selected.
    """
    unknown = set(changed_classes) - g.classes
    if unknown:
        raise UnknownNodeError(f"unknown changed classes: {sorted(unknown)}")
    upstream: dict[str, set[str]] = {}
    for src, dst in g.class_deps:
        upstream.setdefault(dst, set()).add(src)
    for src, dst in g.test_links:
        upstream.setdefault(dst, set()).add(src)
    seen: set[str] = set()
    frontier = list(changed_classes)
    reached_tests: set[str] = set()
    while frontier:
        node = frontier.pop()
        for pred in upstream.get(node, ()):
            if pred in seen:
                continue
            seen.add(pred)
            if pred in g.tests:
                reached_tests.add(pred)
            else:
                frontier.append(pred)
    return frozenset(reached_tests) & frozenset(candidates)


def failure_score(history: ExecutionHistory, test_id: str, recent: int = 5) -> float:
    """Recency-weighted failure rate over the last ``recent`` executions.

    With runs r_1 (most recent) .. r_k, k <= recent, the score is
    ``sum(w_j * failed(r_j)) / sum(w_j)`` using linear weights
    ``w_j = k - j + 1``, so the newest run counts most. Tests with no
    recorded runs score 0.5, a neutral cold-start prior.
    """
    runs = history.records(test_id)[-recent:]
    if not runs:
        return 0.5
    newest_first = list(reversed(runs))
    k = len(newest_first)
    weights = [k - j for j in range(k)]
    weighted = sum(w for w, r in zip(weights, newest_first) if not r.passed)
    return weighted / sum(weights)


def order_by_history(
    selected: AbstractSet[str],
    history: ExecutionHistory,
    window: Rtw,
    durations: Mapping[str, int],
    *,
    recent: int = 5,
    ranker: Callable[[str], tuple] | None = None,
) -> Schedule:
    """Rank selected tests by failure history and clip to the window.

    Default ranking: descending :func:`failure_score`, then shorter
    duration, then id. Pass ``ranker`` to substitute any sort key. The
    result is the longest feasible prefix of the ranked order.
    """
    key = ranker or (
        lambda test_id: (-failure_score(history, test_id, recent), durations[test_id], test_id)
    )
    ranked = sorted(selected, key=key)
    ids, total = feasible_prefix(ranked, durations, window)
    return Schedule(ids, total, {"technique": "depgraph-order"})
