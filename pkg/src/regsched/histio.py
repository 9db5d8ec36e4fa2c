"""History, trace, and report files: versioned JSON in, JSON/CSV out.

The history schema (``"schema": 1``) records a chain and its side data:

* ``builds``    - index, program_id, ready_at, stories (id/bv/sp),
                  tests (id/inp/expected/exectime/setup)
* ``behavior``  - (program_id, test_id) -> outcome token
* ``dep_edges`` - {from, to, kind} with kind ``test`` (test -> class) or
                  ``class`` (class -> class)
* ``coverage``  - story_id -> test_ids
* ``faults``    - fault_id -> detecting_test_ids

Validation reports the JSON path of the offending field. Serialization
is canonical (sorted keys and rows), so identical models produce
identical bytes. The schema carries no iteration or release data; an
ingested chain gets one iteration spanning all builds (the generator
emits the same shape, so a serialize/ingest round trip is exact). An
execution history is derived on ingest from the recorded behavior maps:
each consecutive pair contributes one verdict per shared test.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Mapping

from .depgraph import build_graph
from .errors import HistoryFormatError, ReferentialIntegrityError
from .model import (
    Build,
    BuildChain,
    Iteration,
    ProgramVersion,
    SpecSet,
    TestCase,
    UserStory,
)
from .retecs import ExecutionHistory
from .simulate import HistoryBundle, RunReport, TransitionRow
from .trace import Trace

SCHEMA_VERSION = 1


# --- history files ---------------------------------------------------------


def serialize_history(bundle: HistoryBundle) -> dict:
    """Canonical JSON-ready form of a history bundle."""
    programs: dict[int, Mapping[str, str]] = {}
    builds_out = []
    for b in bundle.chain.builds:
        programs[b.program.id] = b.program.behavior
        builds_out.append(
            {
                "index": b.index,
                "program_id": b.program.id,
                "ready_at": b.ready_at,
                "stories": [
                    {"id": s.id, "bv": s.bv, "sp": s.sp}
                    for s in sorted(b.specs.stories, key=lambda s: s.id)
                ],
                "tests": [
                    {
                        "id": t.id,
                        "inp": t.inp,
                        "expected": t.expected,
                        "exectime": t.exectime,
                        "setup": t.setup,
                    }
                    for t in sorted(b.tests, key=lambda t: t.id)
                ],
            }
        )
    behavior_out = [
        {"program_id": pid, "test_id": test_id, "outcome": outcome}
        for pid in sorted(programs)
        for test_id, outcome in sorted(programs[pid].items())
    ]
    edges_out = [
        {"from": src, "to": dst, "kind": "class"}
        for src, dst in sorted(bundle.graph.class_deps)
    ] + [
        {"from": src, "to": dst, "kind": "test"}
        for src, dst in sorted(bundle.graph.test_links)
    ]
    coverage_out = [
        {"story_id": story, "test_ids": sorted(tests)}
        for story, tests in sorted(bundle.coverage.items())
    ]
    faults_out = [
        {"fault_id": fid, "detecting_test_ids": sorted(tests)}
        for fid, tests in sorted(bundle.faults.items())
    ]
    return {
        "schema": SCHEMA_VERSION,
        "builds": builds_out,
        "behavior": behavior_out,
        "dep_edges": edges_out,
        "coverage": coverage_out,
        "faults": faults_out,
    }


def _expect(mapping: object, key: str, path: str):
    if not isinstance(mapping, dict) or key not in mapping:
        raise HistoryFormatError(f"{path}: missing field {key!r}")
    return mapping[key]


def _expect_int(mapping: object, key: str, path: str, minimum: int | None = None) -> int:
    value = _expect(mapping, key, path)
    if not isinstance(value, int) or isinstance(value, bool):
        raise HistoryFormatError(f"{path}.{key}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise HistoryFormatError(f"{path}.{key}: must be >= {minimum}, got {value}")
    return value


def _expect_str(mapping: object, key: str, path: str) -> str:
    value = _expect(mapping, key, path)
    if not isinstance(value, str) or not value:
        raise HistoryFormatError(f"{path}.{key}: expected a non-empty string, got {value!r}")
    return value


def _expect_list(mapping: object, key: str, path: str) -> list:
    value = _expect(mapping, key, path)
    if not isinstance(value, list):
        raise HistoryFormatError(f"{path}.{key}: expected a list, got {type(value).__name__}")
    return value


def _expect_number(mapping: object, key: str, path: str) -> float:
    value = _expect(mapping, key, path)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise HistoryFormatError(f"{path}.{key}: expected a number, got {value!r}")
    return value


def _derive_fault_births(chain: BuildChain, faults: dict[str, frozenset[str]]) -> dict[str, int]:
    """First build where any detecting test's outcome diverges."""
    births: dict[str, int] = {}
    for b_prev, b_next in chain.pairs():
        shared = b_prev.test_ids() & b_next.test_ids()
        diverged = {
            t
            for t in shared
            if b_prev.program.behavior.get(t) != b_next.program.behavior.get(t)
        }
        for fid, detectors in faults.items():
            if fid not in births and detectors & diverged:
                births[fid] = b_next.index
    return births


def derive_execution_history(chain: BuildChain) -> ExecutionHistory:
    """The per-test verdict log implied by a chain's recorded behaviors."""
    history = ExecutionHistory()
    for b_prev, b_next in chain.pairs():
        table = b_next.test_by_id()
        for test_id in sorted(b_prev.test_ids() & b_next.test_ids()):
            passed = b_prev.program.execute(test_id) == b_next.program.execute(test_id)
            history.add(test_id, b_next.index, passed, table[test_id].duration)
    return history


def parse_history(data: dict) -> tuple[HistoryBundle, ExecutionHistory]:
    """Validate and build model objects from history-schema JSON."""
    schema = _expect_int(data, "schema", "$")
    if schema != SCHEMA_VERSION:
        raise HistoryFormatError(f"$.schema: unsupported version {schema}")

    behavior: dict[int, dict[str, str]] = {}
    for n, row in enumerate(_expect_list(data, "behavior", "$")):
        path = f"$.behavior[{n}]"
        pid = _expect_int(row, "program_id", path)
        test_id = _expect_str(row, "test_id", path)
        outcome = _expect_str(row, "outcome", path)
        behavior.setdefault(pid, {})[test_id] = outcome

    programs: dict[int, ProgramVersion] = {}
    builds: list[Build] = []
    all_test_ids: set[str] = set()
    all_story_ids: set[str] = set()
    for n, row in enumerate(_expect_list(data, "builds", "$")):
        path = f"$.builds[{n}]"
        index = _expect_int(row, "index", path, minimum=1)
        pid = _expect_int(row, "program_id", path)
        ready_at = _expect_int(row, "ready_at", path, minimum=0)
        stories = []
        for m, srow in enumerate(_expect_list(row, "stories", path)):
            spath = f"{path}.stories[{m}]"
            stories.append(
                UserStory(
                    id=_expect_str(srow, "id", spath),
                    bv=_expect_number(srow, "bv", spath),
                    sp=_expect_number(srow, "sp", spath),
                )
            )
        tests = []
        for m, trow in enumerate(_expect_list(row, "tests", path)):
            tpath = f"{path}.tests[{m}]"
            tests.append(
                TestCase(
                    id=_expect_str(trow, "id", tpath),
                    inp=_expect_str(trow, "inp", tpath),
                    expected=_expect_str(trow, "expected", tpath),
                    exectime=_expect_int(trow, "exectime", tpath, minimum=0),
                    setup=_expect_int(trow, "setup", tpath, minimum=0),
                )
            )
        if pid not in behavior:
            raise ReferentialIntegrityError(f"{path}: program {pid} has no behavior entries")
        for t in tests:
            if t.id not in behavior[pid]:
                raise ReferentialIntegrityError(
                    f"{path}: behavior of program {pid} does not cover test {t.id!r}"
                )
        if pid not in programs:
            programs[pid] = ProgramVersion(pid, behavior[pid])
        all_test_ids.update(t.id for t in tests)
        all_story_ids.update(s.id for s in stories)
        builds.append(
            Build(
                index=index,
                program=programs[pid],
                specs=SpecSet(frozenset(stories)),
                tests=frozenset(tests),
                ready_at=ready_at,
            )
        )

    class_deps: set[tuple[str, str]] = set()
    test_links: set[tuple[str, str]] = set()
    for n, row in enumerate(_expect_list(data, "dep_edges", "$")):
        path = f"$.dep_edges[{n}]"
        src = _expect_str(row, "from", path)
        dst = _expect_str(row, "to", path)
        kind = _expect_str(row, "kind", path)
        if kind == "class":
            class_deps.add((src, dst))
        elif kind == "test":
            if src not in all_test_ids:
                raise ReferentialIntegrityError(f"{path}: unknown test {src!r}")
            test_links.add((src, dst))
        else:
            raise HistoryFormatError(f"{path}.kind: expected 'test' or 'class', got {kind!r}")

    coverage: dict[str, frozenset[str]] = {}
    for n, row in enumerate(_expect_list(data, "coverage", "$")):
        path = f"$.coverage[{n}]"
        story = _expect_str(row, "story_id", path)
        if story not in all_story_ids:
            raise ReferentialIntegrityError(f"{path}: unknown story {story!r}")
        tests_field = _expect_list(row, "test_ids", path)
        for t in tests_field:
            if t not in all_test_ids:
                raise ReferentialIntegrityError(f"{path}: unknown test {t!r}")
        coverage[story] = frozenset(tests_field)

    faults: dict[str, frozenset[str]] = {}
    for n, row in enumerate(_expect_list(data, "faults", "$")):
        path = f"$.faults[{n}]"
        fid = _expect_str(row, "fault_id", path)
        detectors = _expect_list(row, "detecting_test_ids", path)
        for t in detectors:
            if t not in all_test_ids:
                raise ReferentialIntegrityError(f"{path}: unknown test {t!r}")
        faults[fid] = frozenset(detectors)

    classes = {dst for _, dst in test_links} | {c for edge in class_deps for c in edge}
    graph = build_graph(
        classes=classes,
        tests=sorted(all_test_ids),
        class_deps=class_deps,
        test_links=test_links,
    )
    iterations = ()
    if builds:
        iterations = (
            Iteration(index=1, first_build=builds[0].index, last_build=builds[-1].index),
        )
    chain = BuildChain(builds=tuple(builds), iterations=iterations)
    bundle = HistoryBundle(
        chain=chain,
        graph=graph,
        coverage=coverage,
        faults=faults,
        fault_births=_derive_fault_births(chain, faults),
    )
    return bundle, derive_execution_history(chain)


def ingest_history(path: str | Path) -> tuple[HistoryBundle, ExecutionHistory]:
    """Load and validate a history file."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise HistoryFormatError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise HistoryFormatError(f"{path}: top level must be an object")
    return parse_history(data)


def dump_history(bundle: HistoryBundle, path: str | Path) -> None:
    Path(path).write_text(dumps_canonical(serialize_history(bundle)))


def dumps_canonical(data: dict) -> str:
    """Deterministic JSON bytes for a JSON-ready dict."""
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


# --- run reports -----------------------------------------------------------

REPORT_COLUMNS = (
    "build_index",
    "transition",
    "candidate_count",
    "schedule_size",
    "schedule",
    "total_cost",
    "q_value",
    "failed",
    "undetected_faults",
    "regall_match",
)


def report_to_dict(report: RunReport) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "seed": report.seed,
        "strategy": report.strategy,
        "metric": report.metric,
        "rows": [
            {
                "build_index": r.build_index,
                "transition": r.transition,
                "candidate_count": r.candidate_count,
                "schedule": list(r.schedule),
                "total_cost": r.total_cost,
                "q_value": r.q_value,
                "failed": list(r.failed),
                "undetected_faults": list(r.undetected_faults),
                "regall_match": r.regall_match,
            }
            for r in report.rows
        ],
        "aggregates": {
            "mean_q": report.mean_q,
            "total_cost": report.total_cost,
            "fault_recall": report.fault_recall,
        },
    }


def report_from_dict(data: dict) -> RunReport:
    try:
        rows = tuple(
            TransitionRow(
                build_index=r["build_index"],
                transition=r["transition"],
                candidate_count=r["candidate_count"],
                schedule=tuple(r["schedule"]),
                total_cost=r["total_cost"],
                q_value=r["q_value"],
                failed=tuple(r["failed"]),
                undetected_faults=tuple(r["undetected_faults"]),
                regall_match=r["regall_match"],
            )
            for r in data["rows"]
        )
        return RunReport(
            seed=data["seed"],
            strategy=data["strategy"],
            metric=data["metric"],
            rows=rows,
            mean_q=data["aggregates"]["mean_q"],
            total_cost=data["aggregates"]["total_cost"],
            fault_recall=data["aggregates"]["fault_recall"],
        )
    except (KeyError, TypeError) as exc:
        raise HistoryFormatError(f"malformed report data: {exc}") from exc


def report_to_csv(report: RunReport) -> str:
    """One row per transition; columns are fixed and order-stable."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for r in report.rows:
        writer.writerow(
            [
                r.build_index,
                r.transition,
                r.candidate_count,
                len(r.schedule),
                ";".join(r.schedule),
                r.total_cost,
                "" if r.q_value is None else repr(r.q_value),
                ";".join(r.failed),
                ";".join(r.undetected_faults),
                "" if r.regall_match is None else str(r.regall_match).lower(),
            ]
        )
    return out.getvalue()


def export_report(report: RunReport, fmt: str, path: str | Path) -> None:
    """Write a report as ``json`` or ``csv``; identical reports give identical bytes."""
    if fmt == "json":
        Path(path).write_text(dumps_canonical(report_to_dict(report)))
    elif fmt == "csv":
        Path(path).write_text(report_to_csv(report))
    else:
        raise HistoryFormatError(f"unknown report format {fmt!r}")


def load_report(path: str | Path) -> RunReport:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise HistoryFormatError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return report_from_dict(data)


# --- traces ----------------------------------------------------------------


def dump_trace(trace: Trace, path: str | Path) -> None:
    Path(path).write_text(dumps_canonical(trace.to_dict()))


def load_trace(path: str | Path) -> Trace:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise HistoryFormatError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return Trace.from_dict(data)
