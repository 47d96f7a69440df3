"""Exception types raised by buildmst."""


class BuildMSTError(Exception):
    """Base class for all package errors."""


class InvalidTreeError(BuildMSTError, ValueError):
    """The underlay is not a tree, or violates a weight/overlay constraint."""


class DuplicateDistanceError(InvalidTreeError):
    """Two overlay pairs share the same tree distance."""


class TreeGenerationError(BuildMSTError, RuntimeError):
    """Random tree generation ran out of retries."""


class UnknownNodeError(BuildMSTError, KeyError):
    """A node id is not part of the overlay."""


class ScheduleError(BuildMSTError, RuntimeError):
    """A schedule event is inconsistent with the configuration it is applied to."""


class InvariantViolation(BuildMSTError, AssertionError):
    """A runtime invariant of the protocol analysis failed.

    Carries the step index, the invariant name and a JSON-compatible
    diagnostic payload (usually the offending configuration).
    """

    def __init__(self, name, step, message, details=None):
        super().__init__(f"[step {step}] {name}: {message}")
        self.name = name
        self.step = step
        self.details = details or {}
