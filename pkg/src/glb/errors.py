"""Exception hierarchy shared across the package."""

from __future__ import annotations


class GlbError(Exception):
    """Base class for all errors raised by this package."""


class InvalidConfigError(GlbError, ValueError):
    """A configuration value violates a documented precondition."""


class ProtocolError(GlbError, RuntimeError):
    """A message or counter violated the steal protocol contract."""


class RoutingError(GlbError, ValueError):
    """A message was addressed to a place outside the group."""


class QuiescenceTimeout(GlbError, RuntimeError):
    """The group failed to reach quiescence within the time budget."""


class WorkloadError(GlbError, RuntimeError):
    """User task code raised inside a worker; names the failing place."""

    def __init__(self, place: int, cause: BaseException):
        super().__init__(f"task code failed at place {place}: {cause!r}")
        self.place = place
        self.cause = cause
