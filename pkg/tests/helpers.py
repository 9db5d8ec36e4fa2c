"""Shared builders and independent oracles for the test suite.

The oracles here recompute expected values by a different route than the
library (exhaustive enumeration, path walking, step-curve simulation) so
tests never assert an implementation against itself.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations

from regsched import (
    Build,
    BuildChain,
    DepGraph,
    Iteration,
    ProgramVersion,
    SpecSet,
    TestCase,
    UserStory,
)

DIVERGED = "DIVERGED"


def tc(test_id: str, exectime: int = 3, setup: int = 2) -> TestCase:
    return TestCase(
        id=test_id,
        inp=f"in-{test_id}",
        expected=f"ok-{test_id}",
        exectime=exectime,
        setup=setup,
    )


def story(story_id: str, bv: float = 1, sp: float = 1) -> UserStory:
    return UserStory(id=story_id, bv=bv, sp=sp)


def build(
    index,
    tests,
    stories=(),
    program_id=None,
    ready_at=None,
    behavior_overrides=None,
):
    """A build whose program returns each test's expected outcome unless overridden."""
    tests = tuple(tests)
    behavior = {t.id: t.expected for t in tests}
    behavior.update(behavior_overrides or {})
    return Build(
        index=index,
        program=ProgramVersion(program_id if program_id is not None else index, behavior),
        specs=SpecSet(frozenset(stories)),
        tests=frozenset(tests),
        ready_at=ready_at if ready_at is not None else index * 10,
    )


def two_builds(shared, prev_only=(), next_only=(), diverge=(), stories=(), next_stories=None):
    """Consecutive builds sharing ``shared`` tests; ``diverge`` ids flip outcome in build 2."""
    shared = tuple(shared)
    b1 = build(1, shared + tuple(prev_only), stories=stories)
    b2 = build(
        2,
        shared + tuple(next_only),
        stories=stories if next_stories is None else next_stories,
        behavior_overrides={t: DIVERGED for t in diverge},
    )
    return b1, b2


def chain_of(*builds_seq) -> BuildChain:
    builds_seq = tuple(builds_seq)
    iterations = ()
    if builds_seq:
        iterations = (
            Iteration(
                index=1,
                first_build=builds_seq[0].index,
                last_build=builds_seq[-1].index,
            ),
        )
    return BuildChain(builds=builds_seq, iterations=iterations)


# --- oracles ---------------------------------------------------------------


def apfd_area_oracle(order, faults) -> float:
    """APFD via the step-curve identity, valid when every fault is detected.

    Sums the detected-fault count after each prefix:
    APFD = sum(D(i) for i in 0..n-1) / (n*m) + 1/(2n).
    """
    n, m = len(order), len(faults)
    assert n > 0 and m > 0
    first = {}
    for fault_id, detectors in faults.items():
        positions = [i for i, t in enumerate(order, start=1) if t in detectors]
        assert positions, "area oracle requires every fault detected"
        first[fault_id] = min(positions)
    area = sum(
        sum(1 for fault_id in first if first[fault_id] <= i) for i in range(n)
    )
    return float(Fraction(area, n * m) + Fraction(1, 2 * n))


def min_cover_oracle(requirements: dict[str, frozenset[str]]) -> int:
    """Smallest number of tests covering all requirements, by exhaustion."""
    if not requirements:
        return 0
    universe = sorted({t for tests in requirements.values() for t in tests})
    for size in range(len(universe) + 1):
        for combo in combinations(universe, size):
            chosen = set(combo)
            if all(tests & chosen for tests in requirements.values()):
                return size
    raise AssertionError("some requirement is uncoverable")


def reaches_oracle(graph: DepGraph, start: str, targets) -> bool:
    """Whether any simple path from ``start`` hits a target class."""
    adjacency: dict[str, set[str]] = {}
    for src, dst in graph.class_deps | graph.test_links:
        adjacency.setdefault(src, set()).add(dst)
    stack = [(start, frozenset({start}))]
    while stack:
        node, seen = stack.pop()
        if node in targets:
            return True
        for nxt in adjacency.get(node, ()):
            if nxt not in seen:
                stack.append((nxt, seen | {nxt}))
    return False


def affected_oracle(graph: DepGraph, changed, candidates) -> frozenset[str]:
    return frozenset(
        t for t in candidates if t in graph.tests and reaches_oracle(graph, t, set(changed))
    )
