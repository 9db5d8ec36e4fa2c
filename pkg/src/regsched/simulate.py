"""Deterministic CI-chain simulation and scenario reporting.

The generator produces synthetic build chains whose consecutive
transitions follow a configured mix of change kinds, with behavior
divergences ("faults") injected alongside so outcome comparison and
fault-detection metrics have something to find. Everything is driven by
one seeded Mersenne-Twister generator (``random.Random``), so a config
reproduces byte-identical results on any platform, serially or with
scenarios running in parallel threads.

Window presets name the usual cadences (commit, nightly, sprint,
release) as fractions of the initial suite's total duration; the exact
fractions are configuration, nothing more.
"""

from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from statistics import mean
from typing import Mapping, Sequence

from .budget import Rtw
from .depgraph import DepGraph, build_graph
from .errors import ConfigurationError
from .metrics import MetricContext, metric_by_name
from .model import (
    Build,
    BuildChain,
    Iteration,
    ProgramVersion,
    SpecSet,
    TestCase,
    TransitionKind,
    UserStory,
    candidate_set,
    classify_transition,
)
from .regall import reg_all
from .strategies import make_strategy
from .trace import Trace, record_trace, replay_trace

WINDOW_POLICIES = ("fixed", "list", "unbounded", "commit", "nightly", "sprint", "release")

# Cadence presets as fractions of the initial suite's total duration.
WINDOW_PRESETS: Mapping[str, float] = {
    "commit": 0.1,
    "nightly": 0.4,
    "sprint": 0.8,
    "release": 1.5,
}

DEFAULT_MIX: Mapping[TransitionKind, float] = {
    TransitionKind.PERIODIC_BUILD: 0.20,
    TransitionKind.NEW_FEATURE: 0.25,
    TransitionKind.DEFECT_FIX: 0.25,
    TransitionKind.TECH_DEBT: 0.15,
    TransitionKind.FEATURE_WITHOUT_TEST: 0.15,
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a scenario run depends on, seed included."""

    seed: int
    n_builds: int = 10
    n_tests: int = 20
    n_stories: int = 6
    n_classes: int = 8
    transition_mix: Mapping[TransitionKind, float] = field(
        default_factory=lambda: dict(DEFAULT_MIX)
    )
    window_policy: str = "nightly"
    window_value: int | None = None
    window_values: tuple[int | None, ...] | None = None
    fault_rate: float = 0.3
    strategy: str = "retest-all"
    strategy_params: Mapping[str, object] = field(default_factory=dict)
    metric: str = "apfd"

    def __post_init__(self) -> None:
        for name in ("n_builds", "n_tests", "n_stories", "n_classes"):
            if getattr(self, name) < 1:
                raise ConfigurationError("must be a positive integer", field=name)
        if not self.transition_mix:
            raise ConfigurationError("must not be empty", field="transition_mix")
        total = 0.0
        for kind, weight in self.transition_mix.items():
            if not isinstance(kind, TransitionKind):
                raise ConfigurationError(
                    f"unknown transition kind {kind!r}", field="transition_mix"
                )
            if weight < 0:
                raise ConfigurationError("weights must be non-negative", field="transition_mix")
            total += weight
        if abs(total - 1.0) > 1e-9:
            raise ConfigurationError(
                f"weights must sum to 1, got {total}", field="transition_mix"
            )
        if self.window_policy not in WINDOW_POLICIES:
            raise ConfigurationError(
                f"unknown policy {self.window_policy!r}; known: {WINDOW_POLICIES}",
                field="window_policy",
            )
        if self.window_policy == "fixed":
            if self.window_value is None or self.window_value < 0:
                raise ConfigurationError(
                    "fixed policy needs a non-negative window_value", field="window_value"
                )
        if self.window_policy == "list":
            if self.window_values is None or len(self.window_values) != self.n_builds - 1:
                raise ConfigurationError(
                    "list policy needs one value per transition", field="window_values"
                )
            for v in self.window_values:
                if v is not None and v < 0:
                    raise ConfigurationError(
                        "window values must be non-negative or null", field="window_values"
                    )
        if not 0.0 <= self.fault_rate <= 1.0:
            raise ConfigurationError("must lie in [0, 1]", field="fault_rate")

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "ScenarioConfig":
        known = {
            "seed", "n_builds", "n_tests", "n_stories", "n_classes",
            "transition_mix", "window_policy", "window_value", "window_values",
            "fault_rate", "strategy", "strategy_params", "metric",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown fields {sorted(unknown)}", field="config")
        if "seed" not in data:
            raise ConfigurationError("a seed is required", field="seed")
        kwargs = dict(data)
        if "transition_mix" in kwargs:
            raw = kwargs["transition_mix"]
            if not isinstance(raw, Mapping):
                raise ConfigurationError("must be a mapping", field="transition_mix")
            mix: dict[TransitionKind, float] = {}
            for slug, weight in raw.items():
                try:
                    kind = TransitionKind(slug)
                except ValueError:
                    raise ConfigurationError(
                        f"unknown transition kind {slug!r}", field="transition_mix"
                    ) from None
                mix[kind] = float(weight)
            kwargs["transition_mix"] = mix
        if kwargs.get("window_values") is not None:
            kwargs["window_values"] = tuple(kwargs["window_values"])
        return cls(**kwargs)  # type: ignore[arg-type]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_builds": self.n_builds,
            "n_tests": self.n_tests,
            "n_stories": self.n_stories,
            "n_classes": self.n_classes,
            "transition_mix": {k.value: v for k, v in sorted(
                self.transition_mix.items(), key=lambda kv: kv[0].value
            )},
            "window_policy": self.window_policy,
            "window_value": self.window_value,
            "window_values": list(self.window_values) if self.window_values else None,
            "fault_rate": self.fault_rate,
            "strategy": self.strategy,
            "strategy_params": dict(self.strategy_params),
            "metric": self.metric,
        }


@dataclass
class HistoryBundle:
    """A chain plus the side data a run needs.

    ``faults`` maps a fault id to its detecting tests; ``fault_births``
    records the build index where each fault first manifests as an
    outcome divergence.
    """

    chain: BuildChain
    graph: DepGraph
    coverage: dict[str, frozenset[str]]
    faults: dict[str, frozenset[str]]
    fault_births: dict[str, int]


def _sample_kind(rng: random.Random, mix: Mapping[TransitionKind, float]) -> TransitionKind:
    kinds = sorted(mix, key=lambda k: k.value)
    weights = [mix[k] for k in kinds]
    return rng.choices(kinds, weights=weights, k=1)[0]


def generate_chain(cfg: ScenarioConfig) -> HistoryBundle:
    """Generate a deterministic synthetic chain for the given config.

    Each transition's deltas match its sampled kind exactly (so the
    classifier round-trips), readiness timestamps strictly increase, and
    every injected fault flips a never-before-flipped shared test's
    outcome in the next program, recording the detecting tests. Defect
    fixes always flip at least one outcome; the ``fault_rate`` gates
    additional flips on the other program-changing kinds. A defect fix
    sampled when no flippable test remains degrades to a periodic build.
    """
    rng = random.Random(cfg.seed)

    reserve = 2 * cfg.n_builds
    test_pool = [
        TestCase(
            id=f"t{n:03d}",
            inp=f"in-{n:03d}",
            expected=f"ok-{n:03d}",
            exectime=rng.randint(1, 15),
            setup=rng.randint(0, 5),
        )
        for n in range(1, cfg.n_tests + reserve + 1)
    ]
    story_pool = [
        UserStory(id=f"s{n:03d}", bv=rng.randint(1, 10), sp=rng.randint(1, 8))
        for n in range(1, cfg.n_stories + cfg.n_builds + 1)
    ]
    classes = [f"c{n:02d}" for n in range(1, cfg.n_classes + 1)]

    class_deps: set[tuple[str, str]] = set()
    for j in range(1, len(classes)):
        if rng.random() < 0.5:
            for target in rng.sample(classes[:j], min(rng.randint(1, 2), j)):
                class_deps.add((classes[j], target))
    test_links: dict[str, tuple[str, ...]] = {
        t.id: tuple(rng.sample(classes, rng.randint(1, min(3, len(classes)))))
        for t in test_pool
    }

    active_tests: dict[str, TestCase] = {t.id: t for t in test_pool[: cfg.n_tests]}
    active_stories: dict[str, UserStory] = {s.id: s for s in story_pool[: cfg.n_stories]}
    coverage: dict[str, frozenset[str]] = {
        s: frozenset(rng.sample(sorted(active_tests), rng.randint(1, min(3, len(active_tests)))))
        for s in sorted(active_stories)
    }

    next_test = cfg.n_tests
    next_story = cfg.n_stories
    program_id = 1
    behavior = {t: active_tests[t].expected for t in sorted(active_tests)}
    program = ProgramVersion(program_id, dict(behavior))
    ready = rng.randint(0, 10)
    builds = [
        Build(
            index=1,
            program=program,
            specs=SpecSet(frozenset(active_stories.values())),
            tests=frozenset(active_tests.values()),
            ready_at=ready,
        )
    ]

    flippable = set(active_tests)
    ever_active = set(active_tests)
    faults: dict[str, frozenset[str]] = {}
    fault_births: dict[str, int] = {}
    fault_n = 0

    def flip(build_index: int, shared: set[str], count: int) -> None:
        nonlocal fault_n
        pool = sorted(flippable & shared)
        if not pool:
            return
        fault_n += 1
        chosen = rng.sample(pool, min(count, len(pool)))
        for test_id in chosen:
            behavior[test_id] = f"div-{fault_n:03d}"
            flippable.discard(test_id)
        fault_id = f"F{fault_n:03d}"
        faults[fault_id] = frozenset(chosen)
        fault_births[fault_id] = build_index

    for i in range(2, cfg.n_builds + 1):
        kind = _sample_kind(rng, cfg.transition_mix)
        shared = set(active_tests)
        if kind is TransitionKind.DEFECT_FIX and not (flippable & shared):
            kind = TransitionKind.PERIODIC_BUILD

        if kind is not TransitionKind.PERIODIC_BUILD:
            program_id += 1

        if kind is TransitionKind.NEW_FEATURE:
            story = story_pool[next_story]
            next_story += 1
            test = test_pool[next_test]
            next_test += 1
            active_stories[story.id] = story
            active_tests[test.id] = test
            ever_active.add(test.id)
            flippable.add(test.id)
            coverage[story.id] = frozenset({test.id})
            behavior[test.id] = test.expected
            if rng.random() < cfg.fault_rate:
                flip(i, shared, 1)
        elif kind is TransitionKind.DEFECT_FIX:
            flip(i, shared, 1 if rng.random() < 0.7 else 2)
        elif kind is TransitionKind.TECH_DEBT:
            # Never remove a story's last living cover; keeps coverage
            # satisfiable along the whole chain.
            sole_covers = set()
            for covering in coverage.values():
                alive = covering & shared
                if len(alive) == 1:
                    sole_covers.add(next(iter(alive)))
            removable = sorted(shared - sole_covers)
            if removable and rng.random() < 0.5:
                victim = rng.choice(removable)
                del active_tests[victim]
                del behavior[victim]
                flippable.discard(victim)
            else:
                test = test_pool[next_test]
                next_test += 1
                active_tests[test.id] = test
                ever_active.add(test.id)
                flippable.add(test.id)
                behavior[test.id] = test.expected
            if rng.random() < cfg.fault_rate:
                flip(i, shared & set(active_tests), 1)
        elif kind is TransitionKind.FEATURE_WITHOUT_TEST:
            story = story_pool[next_story]
            next_story += 1
            active_stories[story.id] = story
            if rng.random() < cfg.fault_rate:
                flip(i, shared, 1)

        if kind is not TransitionKind.PERIODIC_BUILD:
            program = ProgramVersion(program_id, dict(behavior))
        ready += rng.randint(5, 50)
        builds.append(
            Build(
                index=i,
                program=program,
                specs=SpecSet(frozenset(active_stories.values())),
                tests=frozenset(active_tests.values()),
                ready_at=ready,
            )
        )

    links = [(t, c) for t in sorted(ever_active) for c in test_links[t]]
    # The graph is edge-defined so it survives serialization; classes no
    # edge ever references are not part of it.
    used_classes = {c for _, c in links} | {c for edge in class_deps for c in edge}
    graph = build_graph(
        classes=used_classes,
        tests=sorted(ever_active),
        class_deps=class_deps,
        test_links=links,
    )
    chain = BuildChain(
        builds=tuple(builds),
        iterations=(Iteration(index=1, first_build=1, last_build=cfg.n_builds),),
    )
    return HistoryBundle(
        chain=chain,
        graph=graph,
        coverage=coverage,
        faults=faults,
        fault_births=fault_births,
    )


def windows_for(cfg: ScenarioConfig, bundle: HistoryBundle) -> tuple[Rtw, ...]:
    """One window per consecutive build pair, per the config's policy."""
    transitions = len(bundle.chain) - 1
    if cfg.window_policy == "unbounded":
        return tuple(Rtw.unbounded() for _ in range(transitions))
    if cfg.window_policy == "fixed":
        return tuple(Rtw.of_budget(cfg.window_value) for _ in range(transitions))
    if cfg.window_policy == "list":
        assert cfg.window_values is not None
        return tuple(Rtw.of_budget(v) for v in cfg.window_values)
    fraction = WINDOW_PRESETS[cfg.window_policy]
    initial_total = sum(t.duration for t in bundle.chain.builds[0].tests)
    budget = int(initial_total * fraction)
    return tuple(Rtw.of_budget(budget) for _ in range(transitions))


def active_faults(bundle: HistoryBundle, build_index: int) -> dict[str, frozenset[str]]:
    """Faults first manifesting at the transition into ``build_index``."""
    return {
        f: bundle.faults[f]
        for f, born_at in sorted(bundle.fault_births.items())
        if born_at == build_index
    }


def scenario_eval_context(bundle: HistoryBundle):
    """Metric-context builder backed by the bundle's fault and coverage data."""

    def build_ctx(b_prev: Build, b_next: Build, executed, verdicts) -> MetricContext:
        candidate_ids = frozenset(t.id for t in candidate_set(b_prev, b_next))
        shared_stories = b_prev.story_ids() & b_next.story_ids()
        coverage = {
            s: bundle.coverage.get(s, frozenset()) & candidate_ids
            for s in sorted(shared_stories)
        }
        return MetricContext(faults=active_faults(bundle, b_next.index), coverage=coverage)

    return build_ctx


@dataclass(frozen=True)
class TransitionRow:
    """One transition's outcome in a scenario run."""

    build_index: int
    transition: str
    candidate_count: int
    schedule: tuple[str, ...]
    total_cost: int
    q_value: float | None
    failed: tuple[str, ...]
    undetected_faults: tuple[str, ...]
    regall_match: bool | None


@dataclass(frozen=True)
class RunReport:
    """Per-transition rows plus whole-run aggregates."""

    seed: int
    strategy: str
    metric: str
    rows: tuple[TransitionRow, ...]
    mean_q: float | None
    total_cost: int
    fault_recall: float | None


def run_scenario_with_trace(cfg: ScenarioConfig) -> tuple[RunReport, Trace]:
    """Run one scenario end to end, returning the report and its trace.

    The named strategy plans every transition under the window policy;
    the run is captured as a trace and the report rows are derived by
    replaying it, so report and trace cannot drift apart.
    """
    bundle = generate_chain(cfg)
    metric = metric_by_name(cfg.metric)
    strategy = make_strategy(
        cfg.strategy, cfg.strategy_params, graph=bundle.graph, metric=metric, seed=cfg.seed
    )
    windows = windows_for(cfg, bundle)
    trace = record_trace(
        strategy, bundle.chain, windows, metric, eval_context=scenario_eval_context(bundle)
    )
    steps = replay_trace(trace, bundle.chain)

    rows: list[TransitionRow] = []
    for position, window in enumerate(windows):
        b_prev = bundle.chain.builds[position]
        b_next = bundle.chain.builds[position + 1]
        record = trace.tuples[position + 1]
        step = steps[position + 1]
        kind = classify_transition(b_prev, b_next)
        births = active_faults(bundle, b_next.index)
        executed = set(step.schedule.ids)
        undetected = tuple(
            sorted(f for f, detectors in births.items() if not detectors & executed)
        )
        failed = tuple(sorted(v.test_id for v in step.verdicts if not v.consistent))
        match: bool | None = None
        if window.is_unbounded:
            reference = reg_all(b_prev, b_next, window)
            match = tuple(sorted(step.verdicts, key=lambda v: v.test_id)) == reference.verdicts
        rows.append(
            TransitionRow(
                build_index=b_next.index,
                transition=kind.value,
                candidate_count=len(candidate_set(b_prev, b_next)),
                schedule=step.schedule.ids,
                total_cost=step.schedule.total_cost,
                q_value=record.q_value,
                failed=failed,
                undetected_faults=undetected,
                regall_match=match,
            )
        )

    detected = 0
    for fault_id, born_at in bundle.fault_births.items():
        row = next((r for r in rows if r.build_index == born_at), None)
        if row and bundle.faults[fault_id] & set(row.schedule):
            detected += 1
    defined_q = [r.q_value for r in rows if r.q_value is not None]
    report = RunReport(
        seed=cfg.seed,
        strategy=cfg.strategy,
        metric=cfg.metric,
        rows=tuple(rows),
        mean_q=mean(defined_q) if defined_q else None,
        total_cost=sum(r.total_cost for r in rows),
        fault_recall=detected / len(bundle.faults) if bundle.faults else None,
    )
    return report, trace


def run_scenario(cfg: ScenarioConfig) -> RunReport:
    """Run one scenario and return its report."""
    report, _ = run_scenario_with_trace(cfg)
    return report


def run_many(cfgs: Sequence[ScenarioConfig], parallel: bool = False) -> list[RunReport]:
    """Run independent scenarios, optionally on a thread pool.

    Scenario runs share no mutable state, so parallel execution changes
    nothing about any report byte.
    """
    if not parallel:
        return [run_scenario(cfg) for cfg in cfgs]
    with ThreadPoolExecutor(max_workers=min(8, max(1, len(cfgs)))) as pool:
        return list(pool.map(run_scenario, cfgs))


def stable_failure_bundle(
    n_tests: int = 20, n_cycles: int = 30, n_flaky: int = 4, seed: int = 7
) -> HistoryBundle:
    """A chain with a fixed set of tests diverging at every transition.

    Useful for studying adaptive strategies: the same ``n_flaky`` tests
    change outcome on every build, each divergence recorded as a fresh
    fault detected only by its test. The chain has ``n_cycles + 1``
    builds, all program-only changes.
    """
    rng = random.Random(seed)
    tests = [
        TestCase(
            id=f"t{n:03d}",
            inp=f"in-{n:03d}",
            expected=f"ok-{n:03d}",
            exectime=rng.randint(1, 15),
            setup=rng.randint(0, 5),
        )
        for n in range(1, n_tests + 1)
    ]
    flaky = sorted(rng.sample([t.id for t in tests], n_flaky))
    story = UserStory(id="s001", bv=5, sp=3)
    coverage = {"s001": frozenset(t.id for t in tests[:3])}

    builds = []
    faults: dict[str, frozenset[str]] = {}
    births: dict[str, int] = {}
    for i in range(1, n_cycles + 2):
        behavior = {
            t.id: (f"state-{i:03d}" if t.id in flaky else t.expected) for t in tests
        }
        builds.append(
            Build(
                index=i,
                program=ProgramVersion(i, behavior),
                specs=SpecSet(frozenset({story})),
                tests=frozenset(tests),
                ready_at=(i - 1) * 10,
            )
        )
        if i >= 2:
            for t in flaky:
                fault_id = f"F{i:03d}-{t}"
                faults[fault_id] = frozenset({t})
                births[fault_id] = i

    graph = build_graph(
        classes=["c01"],
        tests=[t.id for t in tests],
        class_deps=[],
        test_links=[(t.id, "c01") for t in tests],
    )
    chain = BuildChain(
        builds=tuple(builds),
        iterations=(Iteration(index=1, first_build=1, last_build=n_cycles + 1),),
    )
    return HistoryBundle(
        chain=chain, graph=graph, coverage=coverage, faults=faults, fault_births=births
    )
