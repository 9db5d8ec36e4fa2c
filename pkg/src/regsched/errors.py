"""Exception types shared across the library.

Every error raised by the public API derives from :class:`RegschedError`,
so callers can catch one base class at integration boundaries (the CLI
maps them to non-zero exit codes).
"""

from __future__ import annotations


class RegschedError(Exception):
    """Base class for all regsched errors."""


class MalformedBuildError(RegschedError):
    """A build's test set carries duplicate test ids."""


class InvalidClassificationError(RegschedError):
    """Contradictory membership flags passed to region classification."""


class BuildOrderError(RegschedError):
    """Builds supplied out of order where consecutive builds are required."""


class UnclassifiableTransitionError(RegschedError):
    """A build transition whose change pattern matches no known kind.

    Retains the raw delta triple for audit.
    """

    def __init__(self, deltas):
        self.deltas = deltas
        super().__init__(f"transition pattern {deltas} matches no known kind")


class InvalidRangeError(RegschedError):
    """An iteration range that is empty, unknown, or not contiguous."""


class InvalidCostError(RegschedError):
    """A test case whose total duration is not strictly positive."""


class OracleLimitError(RegschedError):
    """Input too large for an exhaustive-enumeration oracle."""


class BoundedWindowError(RegschedError):
    """An operation defined only for unbounded windows got a bounded one."""


class UndefinedExecutionError(RegschedError):
    """A program's behavior map has no entry for a test it was asked to run."""


class UnsatisfiableRequirementError(RegschedError):
    """A requirement that no candidate test can fulfill."""

    def __init__(self, story_id: str):
        self.story_id = story_id
        super().__init__(f"requirement {story_id!r} has no covering test among the candidates")


class EngineLimitError(RegschedError):
    """Input exceeds an exact engine's enumeration guard."""


class UndefinedMetricError(RegschedError):
    """The metric value does not exist for the given inputs."""


class IncompleteVerdictsError(RegschedError):
    """An executed test is missing its pass/fail verdict."""


class MalformedGraphError(RegschedError):
    """Dependency-graph data with dangling endpoints or self-loops."""


class UnknownNodeError(RegschedError):
    """A graph operation referenced a node that does not exist."""


class InfeasibleScheduleError(RegschedError):
    """A strategy emitted a schedule that breaks its per-build contract."""

    def __init__(self, build_index: int, reason: str):
        self.build_index = build_index
        self.reason = reason
        super().__init__(f"build {build_index}: {reason}")


class TraceDivergenceError(RegschedError):
    """A recorded trace does not match the chain it is replayed against."""

    def __init__(self, build_index: int, field: str):
        self.build_index = build_index
        self.field = field
        super().__init__(f"trace diverges from chain at build {build_index}, field {field!r}")


class ConfigurationError(RegschedError):
    """An invalid or unknown configuration value.

    ``field`` names the offending configuration entry when known.
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(message if field is None else f"{field}: {message}")


class HistoryFormatError(RegschedError):
    """A history or trace file that does not conform to its schema."""


class ReferentialIntegrityError(RegschedError):
    """A history file whose records reference entities that do not exist."""
